#pragma once

#include <cstdint>
#include <vector>

#include "surfopt/batch.hpp"
#include "surfopt/surface_head.hpp"

namespace surfopt {

/// Parameters for the synthetic fixture generator.
struct SynthSpec {
  int num_surfaces = 3;
  int depth = 64;  ///< Z voxels per column.
  int width = 32;  ///< W image columns.
  double amplitude = 1.2;
  double wavelength = 19.0;
  /// Base depth per surface; empty means evenly spaced inside the safe band.
  std::vector<double> offsets;
  double noise_sigma = 0.5;
  double gt_sigma = 8.0;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Generator output: per-surface probability maps with region labels, plus the
/// clean ground-truth surface positions.
struct SynthResult {
  ProbabilityField field;
  SurfaceField gt;
};

/// Builds smooth ordered sinusoidal ground-truth surfaces, perturbs them with
/// Gaussian noise, and emits Gaussian location distributions and consecutive
/// region labels around the noisy positions. Deterministic per seed.
SynthResult synth_generate(const SynthSpec& spec);

}  // namespace surfopt
