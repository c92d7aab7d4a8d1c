#include "bandframe/spectral_filters.hpp"

#include <cmath>

#include "bandframe/errors.hpp"

namespace bandframe {

namespace {

double bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

} // namespace

double cutoff_h(double s) {
  if (!(s >= 0.0)) throw ContractViolation("cutoff_h: argument must be >= 0");
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double up = bump(2.0 - s);
  return up / (up + bump(s - 1.0));
}

double filter_F(int j, double s) {
  if (j < 0) throw ContractViolation("filter_F: level must be >= 0");
  if (j == 0) return std::sqrt(cutoff_h(s));
  double q = cutoff_h(std::ldexp(s, -j)) - cutoff_h(std::ldexp(s, 1 - j));
  // Telescoping noise can leave a tiny negative difference.
  if (q < 0.0 && q >= -1e-15) q = 0.0;
  return std::sqrt(q);
}

int max_resolved_level(double limit) {
  int j = -1;
  while (std::ldexp(1.0, 2 * (j + 2)) <= limit) ++j;
  return j;
}

FilterBank::FilterBank(std::shared_ptr<const EigenBasis> basis, std::optional<int> max_level)
    : basis_(std::move(basis)) {
  if (!basis_) throw ContractViolation("FilterBank: null eigenbasis");
  const double limit = std::min(basis_->lambda_reliable, basis_->complete_to);
  const int automatic = max_resolved_level(limit);
  if (automatic < 0) {
    throw UnresolvedBandError("no dyadic band fits below lambda = " + std::to_string(limit));
  }
  if (max_level && (*max_level < 0 || *max_level > automatic)) {
    throw UnresolvedBandError("band not resolved: requested J = " + std::to_string(*max_level) +
                              " but the spectrum supports at most J = " +
                              std::to_string(automatic));
  }
  J_ = max_level.value_or(automatic);
  s_ = basis_->values.cwiseSqrt();
  const double edge = resolved_limit();
  while (resolved_ < static_cast<std::size_t>(s_.size()) &&
         s_[static_cast<Eigen::Index>(resolved_)] <= edge) {
    ++resolved_;
  }
}

double FilterBank::resolved_limit() const { return std::ldexp(1.0, J_); }

void FilterBank::check_level(int j) const {
  if (j < 0 || j > J_) {
    throw UnresolvedBandError("band not resolved: level " + std::to_string(j) +
                              " outside 0.." + std::to_string(J_));
  }
}

Eigen::VectorXd FilterBank::multipliers(int j) const {
  check_level(j);
  Eigen::VectorXd out(s_.size());
  for (Eigen::Index m = 0; m < s_.size(); ++m) out[m] = filter_F(j, s_[m]);
  return out;
}

GridFunction FilterBank::apply_band(int j, const GridFunction& f) const {
  const Eigen::VectorXd c = basis_->coefficients(f);
  return basis_->expand(multipliers(j).cwiseProduct(c));
}

double FilterBank::band_kernel(int j, std::size_t x, std::size_t y) const {
  const auto& u = basis_->vectors;
  if (x >= static_cast<std::size_t>(u.rows()) || y >= static_cast<std::size_t>(u.rows())) {
    throw ContractViolation("band_kernel: node index out of range");
  }
  const Eigen::VectorXd f = multipliers(j);
  double sum = 0.0;
  for (Eigen::Index m = 0; m < u.cols(); ++m) {
    sum += f[m] * u(static_cast<Eigen::Index>(x), m) * u(static_cast<Eigen::Index>(y), m);
  }
  return sum;
}

double FilterBank::unresolved_fraction(const GridFunction& f) const {
  const Eigen::VectorXd c = basis_->coefficients(f);
  const double total = basis_->weight * f.squaredNorm();
  if (total == 0.0) return 0.0;
  // Measure the residual directly; total - inside loses half the digits under the sqrt.
  Eigen::VectorXd kept = Eigen::VectorXd::Zero(c.size());
  const auto r = static_cast<Eigen::Index>(resolved_);
  kept.head(r) = c.head(r);
  const GridFunction rest = f - basis_->expand(kept);
  return std::sqrt(basis_->weight * rest.squaredNorm() / total);
}

} // namespace bandframe
