// surfopt: command-line front end for the ordered-surface QP toolkit.
//
// Exit codes: 0 success; 1 I/O or validation error; 2 a required solve did
// not converge (outputs are still written so results stay inspectable).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "surfopt/batch.hpp"
#include "surfopt/column_model.hpp"
#include "surfopt/errors.hpp"
#include "surfopt/eval.hpp"
#include "surfopt/io.hpp"
#include "surfopt/ipm.hpp"
#include "surfopt/losses.hpp"
#include "surfopt/oracles.hpp"
#include "surfopt/surface_head.hpp"
#include "surfopt/synth.hpp"

namespace {

using nlohmann::json;
using namespace surfopt;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + what + ": " + e.what());
  }
}

// --params accepts inline JSON ("{...}") or a path to a JSON file.
SolverParams load_params(const std::string& spec) {
  if (spec.empty()) return SolverParams{};
  const std::string text =
      (!spec.empty() && spec.front() == '{') ? spec : slurp(spec);
  return params_from_json(parse_json(text, "solver params"));
}

// Comma-separated gap list; "inf" entries allowed.
Vector parse_gap_list(const std::string& text) {
  std::vector<double> values;
  std::string cell;
  std::istringstream ss(text);
  while (std::getline(ss, cell, ',')) {
    if (cell == "inf" || cell == "Inf" || cell == "Infinity") {
      values.push_back(std::numeric_limits<double>::infinity());
    } else {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw IoError("trailing characters in gap entry '" + cell + "'");
      } catch (const IoError&) {
        throw;
      } catch (const std::exception&) {
        throw IoError("cannot parse gap entry '" + cell + "'");
      }
    }
  }
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

ConstraintSpec make_constraints(const std::string& delta_text, const std::string& upper_text,
                                int num_surfaces) {
  if (delta_text.empty() && upper_text.empty()) return AdjacencyOnly{};
  BoundedGaps gaps;
  const Eigen::Index m = num_surfaces - 1;
  gaps.min_gap = delta_text.empty() ? Vector::Zero(m) : parse_gap_list(delta_text);
  gaps.max_gap = upper_text.empty()
                     ? Vector::Constant(m, std::numeric_limits<double>::infinity())
                     : parse_gap_list(upper_text);
  if (gaps.min_gap.size() != m || gaps.max_gap.size() != m) {
    throw IoError("gap lists must have one entry per adjacent surface pair");
  }
  return gaps;
}

std::vector<Matrix> one_hot_regions(const Eigen::MatrixXi& labels, int num_classes) {
  std::vector<Matrix> maps(static_cast<std::size_t>(num_classes),
                           Matrix::Zero(labels.rows(), labels.cols()));
  for (Eigen::Index r = 0; r < labels.rows(); ++r) {
    for (Eigen::Index c = 0; c < labels.cols(); ++c) {
      maps[static_cast<std::size_t>(labels(r, c))](r, c) = 1.0;
    }
  }
  return maps;
}

int run_solve(const std::string& in_path, const std::string& out_path,
              const std::string& params_text) {
  const SolverParams params = load_params(params_text);
  const std::vector<ColumnProblem> problems =
      problems_from_json(parse_json(slurp(in_path), in_path));
  json solutions = json::array();
  bool all_converged = true;
  for (const ColumnProblem& problem : problems) {
    const Solution sol = solve_column(problem, params);
    all_converged = all_converged && sol.converged;
    solutions.push_back(solution_to_json(sol));
  }
  spit(out_path, json{{"solutions", solutions}}.dump(2) + "\n");
  std::cout << "solved " << problems.size() << " problem(s); "
            << (all_converged ? "all converged" : "some did not converge") << "\n";
  return all_converged ? 0 : 2;
}

int run_infer(const std::string& in_dir, const std::string& out_path, double kappa,
              const std::string& delta_text, const std::string& upper_text,
              const std::string& params_text, int workers) {
  const ProbabilityField field = read_probability_field(in_dir);
  const SolverParams params = load_params(params_text);
  const ConstraintSpec constraints =
      make_constraints(delta_text, upper_text, field.num_surfaces());
  FusionParams fusion;
  fusion.kappa = kappa;
  const SurfaceField sf = infer_from_maps(field, fusion, constraints, params, workers);
  write_csv(out_path, sf.positions);
  int failed = 0;
  for (const ColumnDiagnostics& d : sf.columns) failed += d.converged ? 0 : 1;
  std::cout << "inferred " << sf.positions.cols() << " column(s); " << failed
            << " unconverged\n";
  return failed == 0 ? 0 : 2;
}

int run_synth(const std::string& out_dir, const SynthSpec& spec) {
  const SynthResult res = synth_generate(spec);
  write_probability_field(out_dir, res.field);
  write_csv(out_dir + "/gt.csv", res.gt.positions);
  json meta{{"num_surfaces", spec.num_surfaces}, {"depth", spec.depth},
            {"width", spec.width},               {"amplitude", spec.amplitude},
            {"wavelength", spec.wavelength},     {"noise_sigma", spec.noise_sigma},
            {"gt_sigma", spec.gt_sigma},         {"seed", spec.seed}};
  spit(out_dir + "/meta.json", meta.dump(2) + "\n");
  std::cout << "wrote fixture to " << out_dir << "\n";
  return 0;
}

int run_gradcheck(int cases, std::uint64_t seed, const std::string& out_path) {
  const GradCheckReport report = run_gradcheck_suite(cases, seed);
  const json j{{"max_rel_error_mu", report.max_rel_error_mu},
               {"max_rel_error_Q", report.max_rel_error_Q},
               {"max_rel_error_b", report.max_rel_error_b},
               {"n_cases", report.n_cases},
               {"n_skipped_degenerate", report.n_skipped_degenerate}};
  if (!out_path.empty()) spit(out_path, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, double resolution,
             const std::string& out_path) {
  const Matrix pred = read_csv(pred_path);
  const Matrix gt = read_csv(gt_path);
  const EvalReport report = masd(pred, gt, resolution);
  json per = json::array();
  for (Eigen::Index i = 0; i < report.masd_per_surface.size(); ++i) {
    per.push_back(report.masd_per_surface[i]);
  }
  const json j{{"masd_per_surface", per},
               {"masd_overall", report.masd_overall},
               {"violation_count", report.violation_count}};
  if (!out_path.empty()) spit(out_path, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_losses(const std::string& pred_maps_dir, const std::string& gt_maps_dir,
               const std::string& pred_path, const std::string& gt_path,
               const std::string& image_path, double w, const std::string& out_path) {
  const ProbabilityField pred_maps = read_probability_field(pred_maps_dir);
  const ProbabilityField gt_maps = read_probability_field(gt_maps_dir);
  if (pred_maps.num_surfaces() != gt_maps.num_surfaces() ||
      pred_maps.depth() != gt_maps.depth() || pred_maps.width() != gt_maps.width()) {
    throw DimensionError("losses: prediction and ground-truth maps disagree in shape");
  }
  const Matrix pred = read_csv(pred_path);
  const Matrix gt = read_csv(gt_path);

  const Matrix weights = image_path.empty()
                             ? Matrix::Ones(pred_maps.depth(), pred_maps.width())
                             : gradient_weights(read_csv(image_path));
  double div = 0.0;
  for (int i = 0; i < pred_maps.num_surfaces(); ++i) {
    div += weighted_divergence(pred_maps.surface_probs[static_cast<std::size_t>(i)],
                               gt_maps.surface_probs[static_cast<std::size_t>(i)], weights);
  }
  const double gdice =
      generalized_dice(one_hot_regions(pred_maps.region_labels, pred_maps.num_surfaces() + 1),
                       one_hot_regions(gt_maps.region_labels, gt_maps.num_surfaces() + 1));
  const double smooth = smooth_loss(pred, gt);
  const double l1 = l1_surface_loss(pred, gt);
  const LossReport report = total_loss(gdice, div, smooth, l1, w);
  const json j{{"gdice", report.gdice}, {"div", report.div},   {"smooth", report.smooth},
               {"l1", report.l1},       {"weight_w", report.weight_w}, {"total", report.total}};
  if (!out_path.empty()) spit(out_path, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surfopt: mutually ordered surface positioning via a differentiable QP solver"};
  app.require_subcommand(1);

  std::string in_path, out_path, params_text, delta_text, upper_text;
  std::string pred_path, gt_path, image_path, pred_maps_dir, gt_maps_dir;
  double kappa = 2.0;
  double resolution = 1.0;
  double loss_w = 10.0;
  int workers = 0;
  int cases = 500;
  std::uint64_t seed = 42;
  SynthSpec spec;

  CLI::App* solve = app.add_subcommand("solve", "Solve column problems from JSON");
  solve->add_option("--in", in_path, "Input problems JSON")->required();
  solve->add_option("--out", out_path, "Output solutions JSON")->required();
  solve->add_option("--params", params_text, "Solver params JSON (inline or path)");

  CLI::App* infer = app.add_subcommand("infer", "Infer a surface field from probability maps");
  infer->add_option("--in", in_path, "Input probability-field directory")->required();
  infer->add_option("--out", out_path, "Output surface-positions CSV")->required();
  infer->add_option("--kappa", kappa, "Fusion balance coefficient (>= 2)");
  infer->add_option("--delta", delta_text, "Comma-separated minimum gaps");
  infer->add_option("--Delta", upper_text, "Comma-separated maximum gaps ('inf' allowed)");
  infer->add_option("--params", params_text, "Solver params JSON (inline or path)");
  infer->add_option("--workers", workers, "Worker threads (0 = auto)");

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic fixture");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--surfaces", spec.num_surfaces, "Number of surfaces");
  synth->add_option("--depth", spec.depth, "Voxels per column (Z)");
  synth->add_option("--width", spec.width, "Image columns (W)");
  synth->add_option("--amplitude", spec.amplitude, "Sinusoid amplitude");
  synth->add_option("--wavelength", spec.wavelength, "Sinusoid wavelength");
  synth->add_option("--noise", spec.noise_sigma, "Position noise sigma (px)");
  synth->add_option("--gt-sigma", spec.gt_sigma, "Gaussian distribution width");
  synth->add_option("--seed", spec.seed, "RNG seed");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Audit gradients vs finite differences");
  gradcheck->add_option("--cases", cases, "Number of random cases");
  gradcheck->add_option("--seed", seed, "RNG seed");
  gradcheck->add_option("--out", out_path, "Optional JSON report path");

  CLI::App* eval = app.add_subcommand("eval", "Surface-distance metrics between two fields");
  eval->add_option("--pred", pred_path, "Predicted positions CSV")->required();
  eval->add_option("--gt", gt_path, "Ground-truth positions CSV")->required();
  eval->add_option("--resolution", resolution, "Pixel size multiplier");
  eval->add_option("--out", out_path, "Optional JSON report path");

  CLI::App* losses = app.add_subcommand("losses", "Training-loss report for field pairs");
  losses->add_option("--pred-maps", pred_maps_dir, "Predicted probability-field directory")
      ->required();
  losses->add_option("--gt-maps", gt_maps_dir, "Ground-truth probability-field directory")
      ->required();
  losses->add_option("--pred", pred_path, "Predicted positions CSV")->required();
  losses->add_option("--gt", gt_path, "Ground-truth positions CSV")->required();
  losses->add_option("--image", image_path, "Intensity image CSV for divergence weights");
  losses->add_option("--w", loss_w, "Weight of the L1 term");
  losses->add_option("--out", out_path, "Optional JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return run_solve(in_path, out_path, params_text);
    if (infer->parsed()) {
      return run_infer(in_path, out_path, kappa, delta_text, upper_text, params_text, workers);
    }
    if (synth->parsed()) return run_synth(out_path, spec);
    if (gradcheck->parsed()) return run_gradcheck(cases, seed, out_path);
    if (eval->parsed()) return run_eval(pred_path, gt_path, resolution, out_path);
    if (losses->parsed()) {
      return run_losses(pred_maps_dir, gt_maps_dir, pred_path, gt_path, image_path, loss_w,
                        out_path);
    }
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
