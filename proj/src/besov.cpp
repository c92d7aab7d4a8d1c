#include "bandframe/besov.hpp"

#include <algorithm>
#include <cmath>

#include "bandframe/errors.hpp"

namespace bandframe {

namespace {

// ||(terms)||_q with q = inf meaning max.
double lq_norm(const std::vector<double>& terms, double q) {
  if (std::isinf(q)) {
    double m = 0.0;
    for (double t : terms) m = std::max(m, t);
    return m;
  }
  double s = 0.0;
  for (double t : terms) s += std::pow(t, q);
  return std::pow(s, 1.0 / q);
}

// E(f, omega) from spectral coefficients.
double tail_norm(const Eigen::VectorXd& s, const Eigen::VectorXd& a, double omega) {
  double sum = 0.0;
  for (Eigen::Index m = 0; m < a.size(); ++m) {
    if (s[m] > omega) sum += a[m] * a[m];
  }
  return std::sqrt(sum);
}

std::vector<double> band_norms(const FilterBank& bank, const Eigen::VectorXd& a) {
  std::vector<double> out;
  for (int j = 0; j <= bank.max_level(); ++j) {
    out.push_back(bank.multipliers(j).cwiseProduct(a).norm());
  }
  return out;
}

class CheckBuilder {
public:
  CheckBuilder(std::string name, double floor) : floor_(floor) { check_.name = std::move(name); }

  void add(double lhs, double rhs) {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), floor_});
    check_.worst = check_.instances == 0 ? (lhs - rhs) / scale
                                         : std::max(check_.worst, (lhs - rhs) / scale);
    ++check_.instances;
  }

  InequalityCheck finish(double tolerance, bool gating = true, std::string note = {}) {
    check_.passed = check_.worst <= tolerance;
    check_.gating = gating;
    check_.note = std::move(note);
    return check_;
  }

private:
  InequalityCheck check_;
  double floor_;
};

} // namespace

void validate(const BesovParams& p) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) {
    throw ConfigError("besov.alpha must be positive, got " + std::to_string(p.alpha));
  }
  if (!(p.q >= 1.0)) throw ConfigError("besov.q must be >= 1 or inf, got " + std::to_string(p.q));
}

double best_approx(const EigenBasis& basis, const GridFunction& f, double omega) {
  if (!(omega >= 0.0)) throw ContractViolation("best_approx: omega must be >= 0");
  return tail_norm(basis.values.cwiseSqrt(), basis.coefficients(f), omega);
}

void require_resolved(const FilterBank& bank, const GridFunction& f, double tolerance) {
  const double frac = bank.unresolved_fraction(f);
  if (frac > tolerance) {
    throw ContractViolation("function is not resolved: relative norm " + std::to_string(frac) +
                            " lies above sqrt(lambda) = " + std::to_string(bank.resolved_limit()));
  }
}

double besov_norm_approx(const FilterBank& bank, const GridFunction& f, const BesovParams& p) {
  validate(p);
  const auto& basis = bank.basis();
  const Eigen::VectorXd a = basis.coefficients(f);
  std::vector<double> terms;
  for (int k = 0; k <= bank.max_level(); ++k) {
    terms.push_back(std::pow(2.0, k * p.alpha) * tail_norm(bank.frequencies(), a, std::ldexp(1.0, k)));
  }
  return std::sqrt(basis.weight * f.squaredNorm()) + lq_norm(terms, p.q);
}

double besov_norm_lp(const FilterBank& bank, const GridFunction& f, const BesovParams& p) {
  validate(p);
  const auto norms = band_norms(bank, bank.basis().coefficients(f));
  std::vector<double> terms;
  for (std::size_t j = 0; j < norms.size(); ++j) {
    terms.push_back(std::pow(2.0, static_cast<double>(j) * p.alpha) * norms[j]);
  }
  return lq_norm(terms, p.q);
}

double besov_norm_frame(const FrameSystem& fs, const GridFunction& f, const BesovParams& p) {
  validate(p);
  const auto c = analyze(fs, f);
  std::vector<double> terms;
  for (std::size_t j = 0; j < c.levels.size(); ++j) {
    terms.push_back(std::pow(2.0, static_cast<double>(j) * p.alpha) * c.levels[j].norm());
  }
  return lq_norm(terms, p.q);
}

BesovReport besov_report(const FrameSystem& fs, const GridFunction& f, const BesovParams& p) {
  validate(p);
  const auto& bank = *fs.bank;
  const Eigen::VectorXd a = bank.basis().coefficients(f);
  const auto norms = band_norms(bank, a);
  const auto c = analyze(fs, f);

  BesovReport r;
  r.params = p;
  for (int j = 0; j <= bank.max_level(); ++j) {
    const double weight = std::pow(2.0, j * p.alpha);
    const auto ju = static_cast<std::size_t>(j);
    r.approx_terms.push_back(weight * tail_norm(bank.frequencies(), a, std::ldexp(1.0, j)));
    r.lp_terms.push_back(weight * norms[ju]);
    const double level_norm = c.levels[ju].norm();
    r.frame_terms.push_back(weight * level_norm);
    r.level_ratios.push_back(norms[ju] > 0.0 ? level_norm / norms[ju] : 1.0);
  }
  r.approx = c.source_norm + lq_norm(r.approx_terms, p.q);
  r.lp = lq_norm(r.lp_terms, p.q);
  r.frame = lq_norm(r.frame_terms, p.q);
  r.frame_over_lp = r.lp > 0.0 ? r.frame / r.lp : 1.0;
  r.approx_over_lp = r.lp > 0.0 ? r.approx / r.lp : 0.0;
  return r;
}

bool InequalityReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const InequalityCheck& c) { return c.passed || !c.gating; });
}

const InequalityCheck& InequalityReport::at(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ContractViolation("no inequality check named " + name);
}

InequalityReport inequality_suite(const FilterBank& bank, const GridFunction& f, double tolerance) {
  const auto& basis = bank.basis();
  const Eigen::VectorXd a = basis.coefficients(f);
  const Eigen::VectorXd& s = bank.frequencies();
  const Eigen::VectorXd& lambda = basis.values;
  const double fnorm = std::sqrt(basis.weight * f.squaredNorm());
  const double floor = std::max(1e-13 * fnorm, 1e-300);
  const int J = bank.max_level();
  const auto norms = band_norms(bank, a);

  InequalityReport report;
  report.tolerance = tolerance;

  for (int r : {1, 2}) {
    CheckBuilder jackson("jackson_r" + std::to_string(r), floor);
    const double lr_norm = lambda.array().pow(r).cwiseProduct(a.array()).matrix().norm();
    for (int k = 0; k <= J; ++k) {
      const double omega = std::ldexp(1.0, k);
      jackson.add(tail_norm(s, a, omega), std::pow(omega, -r) * lr_norm);
    }
    report.checks.push_back(jackson.finish(tolerance, true,
                                           "E(f, omega) <= omega^-r ||L^r f||, omega = 2^k"));
  }

  CheckBuilder bernstein("bernstein", floor);
  std::vector<double> omegas;
  for (int k = 0; k <= J + 1; ++k) omegas.push_back(std::ldexp(1.0, 2 * k));
  for (Eigen::Index m = 0; m < lambda.size(); m += std::max<Eigen::Index>(1, lambda.size() / 16)) {
    omegas.push_back(lambda[m]);
  }
  for (double omega : omegas) {
    Eigen::VectorXd part = a;
    for (Eigen::Index m = 0; m < a.size(); ++m) {
      if (lambda[m] > omega) part[m] = 0.0;
    }
    for (double r : {0.5, 1.0, 2.0}) {
      const double lhs = lambda.array().pow(r).cwiseProduct(part.array()).matrix().norm();
      bernstein.add(lhs, std::pow(omega, r) * part.norm());
    }
  }
  report.checks.push_back(bernstein.finish(
      tolerance, true, "||L^r f|| <= omega^r ||f|| on span{lambda <= omega} (E_omega(L) convention)"));

  CheckBuilder lp_upper("lp_upper", floor);
  for (int j = 0; j <= J; ++j) {
    lp_upper.add(norms[static_cast<std::size_t>(j)], tail_norm(s, a, std::ldexp(1.0, j - 1)));
  }
  report.checks.push_back(lp_upper.finish(tolerance, true, "||F_j f|| <= E(f, 2^{j-1})"));

  CheckBuilder literal("lp_lower_literal", floor);
  CheckBuilder shifted("lp_lower_shifted", floor);
  for (int k = 0; k <= J; ++k) {
    double tail = 0.0;
    for (int j = k + 1; j <= J; ++j) tail += norms[static_cast<std::size_t>(j)];
    literal.add(tail_norm(s, a, std::ldexp(1.0, k)), tail);
    shifted.add(tail_norm(s, a, std::ldexp(1.0, k + 1)), tail);
  }
  report.checks.push_back(literal.finish(
      tolerance, false,
      "E(f, 2^k) <= sum_{j>k} ||F_j f||; fails for spectral mass in (2^k, 2^{k+1}) "
      "because the partition gives sum F_j^2 = 1, not sum F_j = 1"));
  report.checks.push_back(
      shifted.finish(tolerance, true, "E(f, 2^{k+1}) <= sum_{j>k} ||F_j f||"));

  double band_energy = 0.0;
  for (double n : norms) band_energy += n * n;
  InequalityCheck parseval;
  parseval.name = "parseval";
  parseval.instances = 1;
  parseval.worst = fnorm > 0.0 ? std::abs(band_energy - fnorm * fnorm) / (fnorm * fnorm) : 0.0;
  parseval.passed = parseval.worst <= tolerance;
  parseval.note = "sum_j ||F_j f||^2 = ||f||^2 on the resolved span";
  report.checks.push_back(parseval);
  return report;
}

} // namespace bandframe
