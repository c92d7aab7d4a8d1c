#pragma once

#include <memory>
#include <optional>

#include <Eigen/Core>

#include "bandframe/eigensolver.hpp"

namespace bandframe {

/// Smooth dyadic cutoff: 1 on [0, 1], 0 on [2, inf), exp(-1/t) bridge in between.
double cutoff_h(double s);

/// Littlewood-Paley profile F_j(s), j >= 0. F_0 = sqrt(h); F_j(s) = sqrt(h(2^-j s) - h(2^-j+1 s)).
double filter_F(int j, double s);

/// Levels 0..J of F_j(sqrt L) over a computed eigenbasis.
///
/// J is the largest level whose full band [2^{J-1}, 2^{J+1}] (in sqrt(lambda)) lies inside
/// the trusted and computed spectrum, i.e. 4^{J+1} <= min(lambda_reliable, complete_to).
/// A function is resolved when its spectrum lies in sqrt(lambda) <= 2^J; there
/// sum_{j<=J} F_j^2 = 1.
class FilterBank {
public:
  /// Throws UnresolvedBandError if `max_level` exceeds the automatic J, or if not even
  /// level 0 fits.
  explicit FilterBank(std::shared_ptr<const EigenBasis> basis,
                      std::optional<int> max_level = std::nullopt);

  int max_level() const noexcept { return J_; }
  const EigenBasis& basis() const noexcept { return *basis_; }
  std::shared_ptr<const EigenBasis> basis_ptr() const noexcept { return basis_; }

  /// Upper edge 2^J of the resolved range, in sqrt(lambda).
  double resolved_limit() const;
  /// Number of leading modes with sqrt(lambda) <= 2^J.
  std::size_t resolved_modes() const noexcept { return resolved_; }
  /// sqrt(lambda_m) for every computed mode.
  const Eigen::VectorXd& frequencies() const noexcept { return s_; }
  /// F_j(sqrt(lambda_m)) for every computed mode.
  Eigen::VectorXd multipliers(int j) const;

  /// F_j(sqrt L) f. Throws UnresolvedBandError for j > J.
  GridFunction apply_band(int j, const GridFunction& f) const;
  /// sum_m F_j(sqrt(lambda_m)) u_m(x) u_m(y) for node indices x, y.
  double band_kernel(int j, std::size_t x, std::size_t y) const;

  /// Norm of the part of f outside the resolved range (relative to ||f||_h).
  double unresolved_fraction(const GridFunction& f) const;

private:
  void check_level(int j) const;

  std::shared_ptr<const EigenBasis> basis_;
  int J_ = 0;
  std::size_t resolved_ = 0;
  Eigen::VectorXd s_;
};

/// Largest J with 4^{J+1} <= limit, or -1 if none.
int max_resolved_level(double limit);

} // namespace bandframe
