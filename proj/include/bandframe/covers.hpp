#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "bandframe/grid_domain.hpp"

namespace bandframe {

/// One part U = Q_k(rho) intersected with the node set.
struct CoverPart {
  std::array<long, 2> cube{0, 0};
  std::vector<std::size_t> nodes;
  double measure = 0.0; // h^d * nodes.size()

  /// Center of the generating cube rho*(k + 1/2).
  std::array<double, 2> center(double rho) const;
};

/// Disjoint partition of the interior nodes by half-open cubes [rho k, rho (k+1))
/// anchored at the origin. Empty cubes are dropped; parts are ordered by cube index.
struct CubeCover {
  int level = 0;
  double rho = 0.0;
  std::vector<CoverPart> parts;

  std::size_t size() const noexcept { return parts.size(); }
};

/// rho_j = a0 * delta^{1/d} * 2^{-(j+1)/2}. Throws ConfigError for delta outside (0,1)
/// or a0 <= 0.
double rho_for_level(int j, double delta, double a0, int d);

CubeCover build_cover(const GridDomain& dom, double rho, int level = 0);

enum class FunctionalKind { average, center_point };

/// Grid-function representative Phi of an averaging (or point) functional, stored sparsely.
struct Functional {
  FunctionalKind kind = FunctionalKind::average;
  std::size_t part = 0;
  std::vector<std::size_t> nodes;
  std::vector<double> values;
  double measure = 0.0; // |U| of the owning part

  /// <f, Phi>_h.
  double apply(const GridFunction& f, double weight) const;
  GridFunction to_grid(std::size_t n) const;
};

/// Average kind: Phi = |U|^{-1/2} chi_U, so <f, Phi>_h = sqrt(|U|) * mean_U f.
/// Center-point kind: weight sqrt(|U|)/h^d at the member node nearest the cube center.
std::vector<Functional> make_functionals(const CubeCover& cover, const GridDomain& dom,
                                         FunctionalKind kind = FunctionalKind::average);

/// integral of Phi = sqrt(|U|) (average kind only).
double functional_integral(const Functional& phi);

/// sum_i <f, Phi_i> Phi_i: orthogonal projection onto piecewise constants of the cover.
GridFunction project_piecewise_constant(const CubeCover& cover, const GridFunction& f);

/// Matrix B with B(i, m) = <Phi_i, u_m>_h over the columns of `modes` (discretely
/// normalized eigenvectors). Average kind.
Eigen::MatrixXd functional_mode_matrix(const CubeCover& cover, const Eigen::MatrixXd& modes,
                                       double weight);

} // namespace bandframe
