#pragma once

#include <limits>
#include <string>
#include <vector>

#include "bandframe/frame_system.hpp"
#include "bandframe/spectral_filters.hpp"

namespace bandframe {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Smoothness alpha > 0 and integrability q in [1, inf] (q = kInfinity for the sup norm).
struct BesovParams {
  double alpha = 1.0;
  double q = 2.0;
};

void validate(const BesovParams& p);

/// E(f, omega) = distance from f to span{u_m : sqrt(lambda_m) <= omega}.
double best_approx(const EigenBasis& basis, const GridFunction& f, double omega);

/// ||f|| + (sum_{k=0}^{J} (2^{k alpha} E(f, 2^k))^q)^{1/q}.
double besov_norm_approx(const FilterBank& bank, const GridFunction& f, const BesovParams& p);
/// (sum_{j=0}^{J} (2^{j alpha} ||F_j(sqrt L) f||)^q)^{1/q}.
double besov_norm_lp(const FilterBank& bank, const GridFunction& f, const BesovParams& p);
/// (sum_{j=0}^{J} 2^{j alpha q} (sum_i <f, phi_{j,i}>^2)^{q/2})^{1/q}.
double besov_norm_frame(const FrameSystem& fs, const GridFunction& f, const BesovParams& p);

/// Throws ContractViolation when f has a component outside the resolved range
/// (relative size above `tolerance`).
void require_resolved(const FilterBank& bank, const GridFunction& f, double tolerance = 1e-10);

struct BesovReport {
  BesovParams params;
  std::vector<double> approx_terms; // 2^{k alpha} E(f, 2^k)
  std::vector<double> lp_terms;     // 2^{j alpha} ||F_j f||
  std::vector<double> frame_terms;  // 2^{j alpha} (sum_i c_{j,i}^2)^{1/2}
  double approx = 0.0;
  double lp = 0.0;
  double frame = 0.0;
  /// (sum_i c_{j,i}^2)^{1/2} / ||F_j f|| per level (1 where ||F_j f|| = 0).
  std::vector<double> level_ratios;
  double frame_over_lp = 0.0;
  double approx_over_lp = 0.0;
};

BesovReport besov_report(const FrameSystem& fs, const GridFunction& f, const BesovParams& p);

struct InequalityCheck {
  std::string name;
  bool passed = true;
  /// Largest (lhs - rhs) / scale over all instances; <= tolerance passes.
  double worst = 0.0;
  std::size_t instances = 0;
  /// Non-gating checks are reported but do not fail the suite.
  bool gating = true;
  std::string note;
};

struct InequalityReport {
  std::vector<InequalityCheck> checks;
  double tolerance = 1e-10;
  bool passed() const;
  const InequalityCheck& at(const std::string& name) const;
};

/// Jackson (r = 1, 2), Bernstein on span{lambda <= omega}, the two Littlewood-Paley proof
/// inequalities and Parseval, evaluated exactly in the spectral calculus.
InequalityReport inequality_suite(const FilterBank& bank, const GridFunction& f,
                                  double tolerance = 1e-10);

} // namespace bandframe
