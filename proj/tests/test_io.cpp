#include <doctest.h>

#include <sys/wait.h>

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "surfopt/batch.hpp"
#include "surfopt/errors.hpp"
#include "surfopt/eval.hpp"
#include "surfopt/io.hpp"
#include "surfopt/surface_head.hpp"
#include "surfopt/synth.hpp"
#include "test_util.hpp"

using namespace surfopt;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string make_temp_dir() {
  char tmpl[] = "/tmp/surfopt-test-XXXXXX";
  const char* dir = mkdtemp(tmpl);
  REQUIRE(dir != nullptr);
  return std::string(dir);
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Runs a shell command and returns its exit code (-1 if it did not exit).
int run_command(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_SUITE("cli-io") {

TEST_CASE("csv round trip preserves every double bit") {
  const std::string dir = make_temp_dir();
  Matrix m(2, 3);
  m << 1.0 / 3.0, -0.0, 1e300,
       1e-300, 123456789.123456789, -2.5000000000000004;
  const std::string path = dir + "/m.csv";
  write_csv(path, m);
  const Matrix back = read_csv(path);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (Eigen::Index r = 0; r < 2; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(same_bits(m(r, c), back(r, c)));
    }
  }
}

TEST_CASE("integer csv round trip is exact") {
  const std::string dir = make_temp_dir();
  Eigen::MatrixXi m(3, 2);
  m << 0, 1, -5, 2, 1000000, 3;
  const std::string path = dir + "/labels.csv";
  write_csv_int(path, m);
  const Eigen::MatrixXi back = read_csv_int(path);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("csv readers reject missing, ragged, and non-numeric input") {
  const std::string dir = make_temp_dir();
  CHECK_THROWS_AS(read_csv(dir + "/absent.csv"), IoError);
  write_text(dir + "/ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(read_csv(dir + "/ragged.csv"), IoError);
  write_text(dir + "/words.csv", "1,banana\n");
  CHECK_THROWS_AS(read_csv(dir + "/words.csv"), IoError);
  write_text(dir + "/empty.csv", "");
  CHECK_THROWS_AS(read_csv(dir + "/empty.csv"), IoError);
}

TEST_CASE("problem json round trip keeps constraints and infinities") {
  ColumnProblem adjacency;
  adjacency.mu = testing::make_vec({5, 3});
  adjacency.sigma_sq = testing::make_vec({1, 2});
  const json ja = problem_to_json(adjacency);
  CHECK(ja.at("delta").is_null());
  CHECK(ja.at("Delta").is_null());
  const ColumnProblem adjacency_back = problem_from_json(ja);
  CHECK(std::holds_alternative<AdjacencyOnly>(adjacency_back.constraints));
  CHECK(adjacency_back.mu[0] == 5.0);

  ColumnProblem bounded = adjacency;
  BoundedGaps gaps;
  gaps.min_gap = testing::make_vec({1});
  gaps.max_gap = testing::make_vec({kInf});
  bounded.constraints = gaps;
  const json jb = problem_to_json(bounded);
  CHECK(jb.at("Delta")[0].is_null());
  const ColumnProblem bounded_back = problem_from_json(jb);
  const auto* back_gaps = std::get_if<BoundedGaps>(&bounded_back.constraints);
  REQUIRE(back_gaps != nullptr);
  CHECK(back_gaps->min_gap[0] == 1.0);
  CHECK(back_gaps->max_gap[0] == kInf);

  // String spellings of infinity are accepted on input.
  const json spelled = {{"mu", {1, 5}}, {"sigma_sq", {1, 1}},
                        {"delta", {0.5}}, {"Delta", {"inf"}}};
  const ColumnProblem parsed = problem_from_json(spelled);
  CHECK(std::get<BoundedGaps>(parsed.constraints).max_gap[0] == kInf);

  // Validation runs on parse: a negative variance must be rejected.
  const json bad = {{"mu", {1, 5}}, {"sigma_sq", {1, -1}}};
  CHECK_THROWS_AS(problem_from_json(bad), ValueError);
  CHECK_THROWS_AS(problem_from_json(json::array()), IoError);
  CHECK_THROWS_AS(problem_from_json(json{{"mu", {1, 2}}}), IoError);
}

TEST_CASE("problem lists accept all three json layouts") {
  const json single = {{"mu", {1, 2}}, {"sigma_sq", {1, 1}}};
  CHECK(problems_from_json(single).size() == 1);
  CHECK(problems_from_json(json::array({single, single})).size() == 2);
  CHECK(problems_from_json(json{{"problems", json::array({single, single})}}).size() == 2);
  CHECK_THROWS_AS(problems_from_json(json{{"problems", json::array()}}), IoError);
  CHECK_THROWS_AS(problems_from_json(json(42)), IoError);
}

TEST_CASE("solution json carries the solver outputs") {
  ColumnProblem problem;
  problem.mu = testing::make_vec({5, 3});
  problem.sigma_sq = testing::make_vec({1, 1});
  const Solution sol = solve_column(problem);
  const json j = solution_to_json(sol);
  CHECK(j.at("converged").get<bool>());
  CHECK(j.at("s_star").size() == 2);
  CHECK(j.at("s_star")[0].get<double>() == doctest::Approx(4.0).epsilon(1e-2));
  CHECK(j.at("iterations").get<int>() == sol.iterations);
  CHECK(j.at("residual_norm").get<double>() == sol.residual_norm);
}

TEST_CASE("solver params json supports partial overrides and rejects unknowns") {
  const SolverParams defaults;
  const SolverParams round = params_from_json(params_to_json(defaults));
  CHECK(round.beta1 == defaults.beta1);
  CHECK(round.beta2 == defaults.beta2);
  CHECK(round.beta3 == defaults.beta3);
  CHECK(round.epsilon == defaults.epsilon);
  CHECK(round.max_outer == defaults.max_outer);
  CHECK(round.lambda0 == defaults.lambda0);
  CHECK(round.feasibility_margin == defaults.feasibility_margin);

  const SolverParams partial = params_from_json(json{{"epsilon", 1e-8}});
  CHECK(partial.epsilon == 1e-8);
  CHECK(partial.max_outer == defaults.max_outer);

  CHECK_THROWS_AS(params_from_json(json{{"epsilonn", 1e-8}}), IoError);
  CHECK_THROWS_AS(params_from_json(json::array()), IoError);
}

TEST_CASE("probability field directory round trip is bit-exact") {
  const std::string dir = make_temp_dir() + "/field";
  ProbabilityField field;
  Matrix p0(3, 2);
  p0 << 0.2, 1.0 / 3.0, 0.3, 1.0 / 3.0, 0.5, 1.0 / 3.0;
  Matrix p1(3, 2);
  p1 << 0.6, 0.1, 0.3, 0.2, 0.1, 0.7;
  field.surface_probs = {p0, p1};
  field.region_labels.resize(3, 2);
  field.region_labels << 0, 0, 1, 1, 2, 2;
  write_probability_field(dir, field);
  const ProbabilityField back = read_probability_field(dir);
  REQUIRE(back.num_surfaces() == 2);
  REQUIRE(back.depth() == 3);
  REQUIRE(back.width() == 2);
  for (int i = 0; i < 2; ++i) {
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        CHECK(same_bits(field.surface_probs[static_cast<std::size_t>(i)](r, c),
                        back.surface_probs[static_cast<std::size_t>(i)](r, c)));
      }
    }
  }
  CHECK((back.region_labels - field.region_labels).cwiseAbs().maxCoeff() == 0);
  CHECK_THROWS_AS(read_probability_field(dir + "-missing"), IoError);
}

TEST_CASE("surface-distance metrics match hand values") {
  Matrix gt(2, 2);
  gt << 0, 1, 2, 3;
  const EvalReport same = masd(gt, gt);
  CHECK(same.masd_overall == 0.0);
  CHECK(same.masd_per_surface.maxCoeff() == 0.0);
  CHECK(same.violation_count == 0);

  Matrix pred(1, 2);
  pred << 1, 2;
  Matrix flat(1, 2);
  flat << 0, 0;
  CHECK(masd(pred, flat).masd_overall == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(masd(pred, flat, 2.0).masd_overall == doctest::Approx(3.0).epsilon(1e-12));

  Matrix crossing(2, 2);
  crossing << 0, 2, 1, 1;
  Matrix target(2, 2);
  target << 0, 0, 2, 2;
  const EvalReport crossed = masd(crossing, target);
  CHECK(crossed.masd_per_surface[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(crossed.masd_per_surface[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(crossed.violation_count == 1);

  CHECK_THROWS_AS(masd(pred, gt), DimensionError);
  CHECK_THROWS_AS(masd(pred, flat, 0.0), ValueError);
}

TEST_CASE("synthetic fixtures are valid, ordered, and deterministic") {
  SynthSpec spec;
  spec.depth = 64;
  spec.width = 12;
  spec.gt_sigma = 2.0;
  const SynthResult a = synth_generate(spec);
  a.field.validate();
  CHECK(masd(a.gt.positions, a.gt.positions).violation_count == 0);
  CHECK(a.gt.positions.minCoeff() >= 0.0);
  CHECK(a.gt.positions.maxCoeff() <= 63.0);

  const SynthResult b = synth_generate(spec);
  for (Eigen::Index i = 0; i < a.gt.positions.rows(); ++i) {
    for (Eigen::Index q = 0; q < a.gt.positions.cols(); ++q) {
      CHECK(same_bits(a.gt.positions(i, q), b.gt.positions(i, q)));
    }
  }
  for (int s = 0; s < a.field.num_surfaces(); ++s) {
    CHECK(a.field.surface_probs[static_cast<std::size_t>(s)] ==
          b.field.surface_probs[static_cast<std::size_t>(s)]);
  }

  SynthSpec reseeded = spec;
  reseeded.seed = 43;
  const SynthResult c = synth_generate(reseeded);
  CHECK(a.gt.positions != c.gt.positions);
}

TEST_CASE("noise-free fixtures put the distribution mean on the surface") {
  SynthSpec spec;
  spec.noise_sigma = 0.0;
  spec.gt_sigma = 2.0;
  spec.width = 8;
  const SynthResult r = synth_generate(spec);
  for (int i = 0; i < r.field.num_surfaces(); ++i) {
    for (int q = 0; q < r.field.width(); ++q) {
      const double xi =
          expected_location(r.field.surface_probs[static_cast<std::size_t>(i)].col(q));
      CHECK(std::abs(xi - r.gt.positions(i, q)) <= 0.05);
    }
  }
}

TEST_CASE("invalid synthetic specs are rejected") {
  SynthSpec bad;
  bad.width = 0;
  CHECK_THROWS_AS(synth_generate(bad), ValueError);

  bad = SynthSpec{};
  bad.noise_sigma = -1;
  CHECK_THROWS_AS(synth_generate(bad), ValueError);

  bad = SynthSpec{};
  bad.offsets = {10.0};  // wrong length for three surfaces
  CHECK_THROWS_AS(synth_generate(bad), DimensionError);

  bad = SynthSpec{};
  bad.num_surfaces = 2;
  bad.amplitude = 0.0;
  bad.offsets = {10.0, 10.5};  // closer than one pixel
  CHECK_THROWS_AS(synth_generate(bad), ValueError);

  bad = SynthSpec{};
  bad.depth = 8;  // far too shallow for 3-sigma margins at gt_sigma = 8
  CHECK_THROWS_AS(synth_generate(bad), ValueError);
}

TEST_CASE("command-line solve, gradcheck, and eval behave as documented") {
  const char* bin = std::getenv("SURFOPT_CLI_BIN");
  if (bin == nullptr) {
    MESSAGE("SURFOPT_CLI_BIN not set; skipping CLI spawn checks");
    return;
  }
  const std::string cli(bin);
  const std::string dir = make_temp_dir();

  write_text(dir + "/problem.json", R"({"mu":[5,3],"sigma_sq":[1,1]})");
  const int solve_rc = run_command(cli + " solve --in " + dir + "/problem.json --out " + dir +
                                   "/out.json > /dev/null 2>&1");
  CHECK(solve_rc == 0);
  const json out = json::parse(read_text(dir + "/out.json"));
  REQUIRE(out.at("solutions").size() == 1);
  CHECK(out.at("solutions")[0].at("s_star")[0].get<double>() ==
        doctest::Approx(4.0).epsilon(1e-2));
  CHECK(out.at("solutions")[0].at("s_star")[1].get<double>() ==
        doctest::Approx(4.0).epsilon(1e-2));

  CHECK(run_command(cli + " gradcheck --cases 0 > /dev/null 2>&1") == 0);

  write_csv(dir + "/gt.csv", Matrix::Constant(2, 3, 5.0));
  CHECK(run_command(cli + " eval --pred " + dir + "/gt.csv --gt " + dir +
                    "/gt.csv > /dev/null 2>&1") == 0);

  // Unknown flags are a usage error (exit 1), not a crash.
  CHECK(run_command(cli + " solve --bogus > /dev/null 2>&1") == 1);
}

}  // TEST_SUITE
