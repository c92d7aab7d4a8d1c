#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bandframe/covers.hpp"
#include "bandframe/spectral_filters.hpp"

namespace bandframe {

/// Atoms phi_{j,i} = F_j(sqrt L) Phi_{j,i} of one level.
struct FrameLevel {
  int j = 0;
  double rho = 0.0;
  CubeCover cover;
  std::vector<Functional> functionals;
  /// Spectral form: column i holds F_j(sqrt(lambda_m)) <Phi_{j,i}, u_m>_h over all computed modes.
  Eigen::MatrixXd spectral;
  /// Grid form: column i is phi_{j,i} on the nodes.
  Eigen::MatrixXd atoms;
  /// Band [2^{j-1}, 2^{j+1}] in sqrt(lambda) (lower edge 0 for j = 0).
  std::pair<double, double> band;

  std::size_t size() const noexcept { return cover.size(); }
};

struct FrameSystem {
  double delta = 0.5;
  double a0 = 1.0;
  std::shared_ptr<const FilterBank> bank;
  std::vector<FrameLevel> levels;
  std::vector<std::string> warnings;

  std::size_t atom_count() const;
  const EigenBasis& basis() const { return bank->basis(); }
};

/// Builds every level 0..J of the frame. Throws ConfigError for delta outside (0,1) or a0 <= 0.
FrameSystem build_frame(std::shared_ptr<const FilterBank> bank, const GridDomain& dom, double delta,
                        double a0);

/// <f, phi_{j,i}>_h, grouped by level.
struct FrameCoefficients {
  std::vector<Eigen::VectorXd> levels;
  double source_norm = 0.0;

  double squared_sum() const;
  double dot(const FrameCoefficients& other) const;
};

FrameCoefficients analyze(const FrameSystem& fs, const GridFunction& f);
/// sum_{j,i} c_{j,i} phi_{j,i}. Throws ContractViolation on a shape mismatch.
GridFunction synthesize(const FrameSystem& fs, const FrameCoefficients& c);
/// sum_i <F_j f, Phi_{j,i}>^2 computed without the atoms (self-adjointness route).
Eigen::VectorXd analyze_via_functionals(const FrameSystem& fs, int j, const GridFunction& f);

struct FrameBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t dimension = 0;
};

/// Extreme eigenvalues of the frame operator on the resolved span (band = nullopt), or of the
/// level-j sampling operator sum_i <., Phi_{j,i}> Phi_{j,i} on span{sqrt(lambda) <= 2^{j+1}}.
/// Throws ContractViolation if the chosen subspace is empty.
FrameBounds frame_bounds(const FrameSystem& fs, std::optional<int> band = std::nullopt);

/// Extreme eigenvalues of the cover's piecewise-constant projection compressed to the first
/// `modes` eigenvectors.
FrameBounds projection_bounds(const CubeCover& cover, const EigenBasis& basis, std::size_t modes);

/// Number of modes with sqrt(lambda) <= 2^{j+1}.
std::size_t band_dimension(const FilterBank& bank, int j);

struct LevelCalibration {
  int j = 0;
  std::size_t dimension = 0;
  /// Largest a found by bisection with lambda_min >= 1 - delta.
  double critical_a = 0.0;
  /// lambda_min at the certified a0.
  double lower_at_a0 = 0.0;
  /// Smallest Rayleigh quotient among random samples at the critical a.
  double sampled_min = 0.0;
  double lower_at_critical = 0.0;
};

struct CalibrationResult {
  double a0 = 0.0;
  double delta = 0.0;
  std::vector<LevelCalibration> levels;
  /// Extra 0.9 reductions needed after bisection because covers at different a do not nest.
  int shrink_steps = 0;
};

/// Exact-eigenvalue bisection for a0 on each tested level; returns 0.9 * min over levels,
/// re-verified on every level. An empty `levels` means all levels with a nonempty band.
CalibrationResult calibrate_a0(const GridDomain& dom, const FilterBank& bank, double delta,
                               std::vector<int> levels = {}, std::size_t trials = 200,
                               std::uint64_t seed = 7);

struct ReconstructionResult {
  GridFunction value;
  /// ||f - f_k||_h for k = 0..n (empty without a reference).
  std::vector<double> errors;
  bool diverged = false;
  std::string message;
};

/// Frame algorithm f_{k+1} = f_k + 2/(A+B) P (synthesize(c) - S f_k), f_0 = 0, with P the
/// projection onto the resolved span.
ReconstructionResult reconstruct(const FrameSystem& fs, const FrameCoefficients& c,
                                 std::size_t iterations, double lower, double upper,
                                 const GridFunction* reference = nullptr);

/// (R, fraction of ||phi||^2 at sup-distance > R from the atom's cube center).
std::vector<std::pair<double, double>>
localization_profile(const FrameSystem& fs, const GridDomain& dom, int j, std::size_t i,
                     const std::vector<double>& radii);

/// Smallest node sup-distance R with exterior energy fraction <= 1 - level.
double energy_radius(const FrameSystem& fs, const GridDomain& dom, int j, std::size_t i,
                     double level = 0.99);

/// Index of the level-j atom whose cube center is nearest to `point`.
std::size_t nearest_atom(const FrameSystem& fs, int j, const std::array<double, 2>& point);

} // namespace bandframe
