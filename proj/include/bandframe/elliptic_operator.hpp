#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

#include "bandframe/grid_domain.hpp"

namespace bandframe {

/// Bumped whenever assembly changes numerically; part of the cache fingerprint.
inline constexpr int kStencilVersion = 1;

enum class CoefficientKind { identity, scalar_varying, constant_matrix };

/// Coefficients a_{k,i}(x) of L f = -sum_{k,i} d_k(a_{k,i} d_i f).
///
/// Only a(x)*I and constant SPD matrices are representable; `descriptor` is a
/// canonical text form used for fingerprints and reports.
class CoefficientField {
public:
  static CoefficientField identity();
  /// a(x) = value * I.
  static CoefficientField constant_scalar(double value);
  /// a(x) = 1 + amplitude * sin(pi x_1), the bundled smooth example (amplitude 1/2).
  static CoefficientField sine_bump(double amplitude = 0.5);
  /// Arbitrary positive scalar field a(x)*I. `descriptor` must identify it uniquely.
  static CoefficientField scalar(std::function<double(double, double)> a, std::string descriptor);
  /// Constant symmetric matrix [[a11, a12], [a12, a22]]; throws ConfigError unless SPD.
  static CoefficientField matrix(double a11, double a12, double a22);

  CoefficientKind kind() const noexcept { return kind_; }
  const std::string& descriptor() const noexcept { return descriptor_; }
  /// Scalar factor at x (1 for identity, unused for matrix kind).
  double scalar_at(double x, double y) const;
  const std::array<double, 3>& matrix_entries() const noexcept { return m_; }

private:
  CoefficientKind kind_ = CoefficientKind::identity;
  std::function<double(double, double)> a_;
  std::array<double, 3> m_{1.0, 0.0, 1.0};
  std::string descriptor_ = "identity";
};

/// Sparse symmetric matrix of L over the interior nodes.
struct OperatorMatrix {
  Eigen::SparseMatrix<double> matrix;
  std::string fingerprint;
  std::string coefficient;
  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Conservative flux-form stencil with coefficients sampled at edge midpoints and
/// zero Dirichlet values outside the node set. Throws AssemblyError if a(x) <= 0.
OperatorMatrix assemble(const GridDomain& dom, const CoefficientField& coeff);

GridFunction apply(const OperatorMatrix& op, const GridFunction& f);

/// 16 hex digits identifying (domain, coefficients, stencil version).
std::string operator_fingerprint(const DomainSpec& spec, const CoefficientField& coeff);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes);

} // namespace bandframe
