#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bandframe/elliptic_operator.hpp"
#include "bandframe/grid_domain.hpp"

namespace bandframe {

/// Lowest eigenpairs of an assembled operator.
///
/// Columns of `vectors` are orthonormal in the discrete inner product
/// (h^d sum u_i u_j = delta_ij), eigenvalues ascend, and every pair satisfies
/// ||L u - lambda u||_h / lambda <= tol. Pairs above `lambda_reliable` are never stored.
struct EigenBasis {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors; // n x m
  double weight = 1.0;     // h^d of the generating domain
  double tol = 0.0;
  double max_residual = 0.0;
  double lambda_reliable = 0.0;
  /// Every eigenvalue <= complete_to is present in `values`.
  double complete_to = 0.0;
  std::string fingerprint;
  std::string method;
  std::vector<std::string> warnings;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  std::size_t node_count() const { return static_cast<std::size_t>(vectors.rows()); }
  double top() const { return values.size() ? values[values.size() - 1] : 0.0; }

  /// Spectral coordinates <f, u_m>_h.
  Eigen::VectorXd coefficients(const GridFunction& f) const;
  /// sum_m c_m u_m.
  GridFunction expand(const Eigen::VectorXd& c) const;
};

enum class SolverMethod { automatic, dense, iterative };

struct SolverOptions {
  double tol = 1e-8;
  std::size_t dense_threshold = 4096;
  /// Reliability cutoff factor: only eigenvalues <= eta / h^2 are trusted.
  double eta = 0.5;
  std::uint64_t seed = 0x5eed'b10c'1a2cULL;
  std::size_t block_size = 6;
  SolverMethod method = SolverMethod::automatic;
};

/// The m lowest eigenpairs, clipped to the reliability cutoff (with a warning).
/// Throws ContractViolation if m is 0 or exceeds the node count and SolverError on
/// non-convergence.
EigenBasis solve_lowest(const OperatorMatrix& op, const GridDomain& dom, std::size_t m,
                        const SolverOptions& opts = {});

/// Every eigenpair with lambda <= cap. Throws UnresolvedBandError when cap exceeds the
/// reliability cutoff.
EigenBasis solve_below(const OperatorMatrix& op, const GridDomain& dom, double cap,
                       const SolverOptions& opts = {});

double reliability_cutoff(const GridDomain& dom, double eta);

/// #{ j : lambda_j <= omega }. Throws UnresolvedBandError past the reliability cutoff or
/// past the largest computed eigenvalue when the basis may be missing pairs below omega.
std::size_t dim_E(const EigenBasis& basis, double omega);

struct SpectralApplyResult {
  GridFunction value;
  /// Norm of the part of f outside the computed span, which was dropped.
  double dropped_norm = 0.0;
};

/// sum_m phi(lambda_m) <f, u_m>_h u_m over the computed modes.
SpectralApplyResult spectral_apply(const EigenBasis& basis, const std::function<double(double)>& phi,
                                   const GridFunction& f);

/// max |<u_i, u_j>_h - delta_ij|.
double orthonormality_error(const EigenBasis& basis);
/// max_m ||L u_m - lambda_m u_m||_h / lambda_m.
double max_relative_residual(const EigenBasis& basis, const OperatorMatrix& op);

// Eigenbasis cache (EIGB): "EIGB", u32 version, u32 header length, UTF-8 JSON header,
// then little-endian float64 eigenvalues[m] and eigenvectors[m x n] (row = one eigenvector,
// discretely normalized).
inline constexpr std::uint32_t kCacheVersion = 1;

void save_basis(const EigenBasis& basis, const GridDomain& dom, const std::filesystem::path& path);
/// Loads a cached basis. Throws CacheError if the file is malformed or its fingerprint
/// differs from `expected_fingerprint`.
EigenBasis load_basis(const std::filesystem::path& path, const std::string& expected_fingerprint);

} // namespace bandframe
