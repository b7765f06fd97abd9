#include "surfopt/synth.hpp"

#include <cmath>
#include <numbers>

#include "surfopt/errors.hpp"
#include "surfopt/rng.hpp"

namespace surfopt {

void SynthSpec::validate() const {
  if (num_surfaces < 1) throw ValueError("SynthSpec: invalid-spec, need at least one surface");
  if (depth < 2) throw ValueError("SynthSpec: invalid-spec, depth must be at least 2");
  if (width < 1) throw ValueError("SynthSpec: invalid-spec, width must be at least 1");
  if (!(amplitude >= 0.0)) throw ValueError("SynthSpec: invalid-spec, amplitude must be nonnegative");
  if (!(wavelength > 0.0)) throw ValueError("SynthSpec: invalid-spec, wavelength must be positive");
  if (!(noise_sigma >= 0.0)) throw ValueError("SynthSpec: invalid-spec, noise_sigma must be nonnegative");
  if (!(gt_sigma > 0.0)) throw ValueError("SynthSpec: invalid-spec, gt_sigma must be positive");
  if (!offsets.empty() && static_cast<int>(offsets.size()) != num_surfaces) {
    throw DimensionError("SynthSpec: invalid-spec, offsets length must equal num_surfaces");
  }
}

SynthResult synth_generate(const SynthSpec& spec) {
  spec.validate();
  const int n = spec.num_surfaces;
  const int z = spec.depth;
  const int w = spec.width;
  const double two_pi = 2.0 * std::numbers::pi;
  Rng rng(spec.seed);

  // Base depths: explicit, or evenly spaced inside the band where the
  // truncated Gaussian distributions stay unbiased (3 sigma from each border),
  // shrunk by the sinusoid amplitude.
  std::vector<double> offsets = spec.offsets;
  if (offsets.empty()) {
    const double lo = 3.0 * spec.gt_sigma + spec.amplitude;
    const double hi = static_cast<double>(z - 1) - 3.0 * spec.gt_sigma - spec.amplitude;
    if (!(hi >= lo)) {
      throw ValueError("synth_generate: invalid-spec, depth too small for the surface band");
    }
    offsets.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      offsets[static_cast<std::size_t>(i)] =
          (n == 1) ? (lo + hi) / 2.0
                   : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
  }

  std::vector<double> phase(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) phase[static_cast<std::size_t>(i)] = rng.uniform(0.0, two_pi);

  Matrix gt(n, w);
  for (int i = 0; i < n; ++i) {
    for (int q = 0; q < w; ++q) {
      gt(i, q) = offsets[static_cast<std::size_t>(i)] +
                 spec.amplitude * std::sin(two_pi * static_cast<double>(q) / spec.wavelength +
                                           phase[static_cast<std::size_t>(i)]);
    }
  }
  for (int q = 0; q < w; ++q) {
    for (int i = 0; i < n; ++i) {
      if (gt(i, q) < 0.0 || gt(i, q) > static_cast<double>(z - 1)) {
        throw ValueError("synth_generate: invalid-spec, surface leaves the voxel range");
      }
      if (i + 1 < n && gt(i + 1, q) - gt(i, q) < 1.0 - 1e-9) {
        throw ValueError("synth_generate: invalid-spec, surfaces closer than 1 pixel");
      }
    }
  }

  Matrix noisy = gt;
  for (int i = 0; i < n; ++i) {
    for (int q = 0; q < w; ++q) noisy(i, q) += spec.noise_sigma * rng.normal();
  }
  // Keep the emitted positions ordered per column.
  for (int q = 0; q < w; ++q) {
    for (int i = 1; i < n; ++i) noisy(i, q) = std::max(noisy(i, q), noisy(i - 1, q));
  }

  SynthResult out;
  out.field.surface_probs.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Matrix& p = out.field.surface_probs[static_cast<std::size_t>(i)];
    p.resize(z, w);
    for (int q = 0; q < w; ++q) p.col(q) = gaussian_gt(noisy(i, q), spec.gt_sigma, z);
  }
  out.field.region_labels.resize(z, w);
  for (int q = 0; q < w; ++q) {
    for (int zz = 0; zz < z; ++zz) {
      int label = 0;
      for (int i = 0; i < n; ++i) {
        if (noisy(i, q) <= static_cast<double>(zz)) ++label;
      }
      out.field.region_labels(zz, q) = label;
    }
  }

  out.gt.positions = gt;
  out.gt.columns.resize(static_cast<std::size_t>(w));
  for (ColumnDiagnostics& d : out.gt.columns) d.converged = true;
  return out;
}

}  // namespace surfopt
