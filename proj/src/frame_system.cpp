#include "bandframe/frame_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "bandframe/errors.hpp"

namespace bandframe {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("frame.delta must lie in (0, 1), got " + std::to_string(delta));
  }
}

const FrameLevel& level_at(const FrameSystem& fs, int j) {
  if (j < 0 || j >= static_cast<int>(fs.levels.size())) {
    throw UnresolvedBandError("band not resolved: level " + std::to_string(j) + " outside 0.." +
                              std::to_string(static_cast<int>(fs.levels.size()) - 1));
  }
  return fs.levels[static_cast<std::size_t>(j)];
}

double sup_distance(const GridNode& node, const std::array<double, 2>& c, int d) {
  double r = 0.0;
  for (int a = 0; a < d; ++a) r = std::max(r, std::abs(node.x[a] - c[a]));
  return r;
}

double lambda_min(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

} // namespace

std::size_t FrameSystem::atom_count() const {
  std::size_t total = 0;
  for (const auto& level : levels) total += level.size();
  return total;
}

std::size_t band_dimension(const FilterBank& bank, int j) {
  const double edge = std::ldexp(1.0, j + 1);
  const auto& s = bank.frequencies();
  std::size_t k = 0;
  while (k < static_cast<std::size_t>(s.size()) && s[static_cast<Eigen::Index>(k)] <= edge) ++k;
  return k;
}

FrameSystem build_frame(std::shared_ptr<const FilterBank> bank, const GridDomain& dom, double delta,
                        double a0) {
  check_delta(delta);
  if (!(a0 > 0.0)) throw ConfigError("frame.a0 must be positive, got " + std::to_string(a0));
  if (!bank) throw ContractViolation("build_frame: null filter bank");
  const auto& basis = bank->basis();
  if (basis.node_count() != dom.size()) {
    throw ContractViolation("build_frame: eigenbasis does not belong to this domain");
  }

  FrameSystem fs;
  fs.delta = delta;
  fs.a0 = a0;
  fs.bank = bank;
  for (int j = 0; j <= bank->max_level(); ++j) {
    FrameLevel level;
    level.j = j;
    level.rho = rho_for_level(j, delta, a0, dom.dimension());
    level.cover = build_cover(dom, level.rho, j);
    level.functionals = make_functionals(level.cover, dom, FunctionalKind::average);
    level.band = {j == 0 ? 0.0 : std::ldexp(1.0, j - 1), std::ldexp(1.0, j + 1)};
    const Eigen::MatrixXd b = functional_mode_matrix(level.cover, basis.vectors, basis.weight);
    level.spectral = bank->multipliers(j).asDiagonal() * b.transpose();
    level.atoms = basis.vectors * level.spectral;
    fs.levels.push_back(std::move(level));
  }
  if (bank->resolved_modes() < basis.size()) {
    fs.warnings.push_back("frame truncated at level J = " + std::to_string(bank->max_level()) +
                          "; " + std::to_string(basis.size() - bank->resolved_modes()) +
                          " computed modes lie above the resolved range");
  }
  return fs;
}

double FrameCoefficients::squared_sum() const {
  double s = 0.0;
  for (const auto& c : levels) s += c.squaredNorm();
  return s;
}

double FrameCoefficients::dot(const FrameCoefficients& other) const {
  if (other.levels.size() != levels.size()) {
    throw ContractViolation("FrameCoefficients::dot: level count mismatch");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    if (levels[j].size() != other.levels[j].size()) {
      throw ContractViolation("FrameCoefficients::dot: level size mismatch");
    }
    s += levels[j].dot(other.levels[j]);
  }
  return s;
}

FrameCoefficients analyze(const FrameSystem& fs, const GridFunction& f) {
  const auto& basis = fs.basis();
  if (static_cast<std::size_t>(f.size()) != basis.node_count()) {
    throw ContractViolation("analyze: grid function length mismatch");
  }
  FrameCoefficients out;
  out.source_norm = std::sqrt(basis.weight * f.squaredNorm());
  out.levels.reserve(fs.levels.size());
  for (const auto& level : fs.levels) {
    out.levels.push_back(basis.weight * (level.atoms.transpose() * f));
  }
  return out;
}

GridFunction synthesize(const FrameSystem& fs, const FrameCoefficients& c) {
  if (c.levels.size() != fs.levels.size()) {
    throw ContractViolation("synthesize: coefficient levels do not match the frame");
  }
  GridFunction out = GridFunction::Zero(static_cast<Eigen::Index>(fs.basis().node_count()));
  for (std::size_t j = 0; j < fs.levels.size(); ++j) {
    if (static_cast<std::size_t>(c.levels[j].size()) != fs.levels[j].size()) {
      throw ContractViolation("synthesize: level " + std::to_string(j) +
                              " has the wrong number of coefficients");
    }
    out.noalias() += fs.levels[j].atoms * c.levels[j];
  }
  return out;
}

Eigen::VectorXd analyze_via_functionals(const FrameSystem& fs, int j, const GridFunction& f) {
  const auto& level = level_at(fs, j);
  const GridFunction band = fs.bank->apply_band(j, f);
  Eigen::VectorXd out(static_cast<Eigen::Index>(level.size()));
  for (std::size_t i = 0; i < level.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = level.functionals[i].apply(band, fs.basis().weight);
  }
  return out;
}

FrameBounds projection_bounds(const CubeCover& cover, const EigenBasis& basis, std::size_t modes) {
  if (modes == 0) throw ContractViolation("frame bounds requested on an empty subspace");
  const auto k = static_cast<Eigen::Index>(modes);
  const Eigen::MatrixXd b = functional_mode_matrix(cover, basis.vectors.leftCols(k), basis.weight);
  const Eigen::MatrixXd g = b.transpose() * b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[k - 1], modes};
}

FrameBounds frame_bounds(const FrameSystem& fs, std::optional<int> band) {
  if (band) {
    const auto& level = level_at(fs, *band);
    return projection_bounds(level.cover, fs.basis(), band_dimension(*fs.bank, *band));
  }
  const auto r = static_cast<Eigen::Index>(fs.bank->resolved_modes());
  if (r == 0) throw ContractViolation("frame bounds requested on an empty resolved span");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(r, r);
  for (const auto& level : fs.levels) {
    const auto top = level.spectral.topRows(r);
    s.noalias() += top * top.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[r - 1], static_cast<std::size_t>(r)};
}

CalibrationResult calibrate_a0(const GridDomain& dom, const FilterBank& bank, double delta,
                               std::vector<int> levels, std::size_t trials, std::uint64_t seed) {
  check_delta(delta);
  const auto& basis = bank.basis();
  if (levels.empty()) {
    for (int j = 0; j <= bank.max_level(); ++j) {
      if (band_dimension(bank, j) > 0) levels.push_back(j);
    }
  }
  if (levels.empty()) {
    throw CalibrationError("calibration needs at least one band containing eigenvalues");
  }
  const int d = dom.dimension();
  const double target = 1.0 - delta;
  double extent = 0.0;
  for (int a = 0; a < d; ++a) {
    extent = std::max({extent, std::abs(dom.lo()[a]), std::abs(dom.hi()[a])});
  }

  CalibrationResult result;
  result.delta = delta;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  for (int j : levels) {
    if (j < 0 || j > bank.max_level()) {
      throw UnresolvedBandError("calibration level " + std::to_string(j) + " is not resolved");
    }
    const std::size_t k = band_dimension(bank, j);
    if (k == 0) throw CalibrationError("calibration level " + std::to_string(j) + " has no modes");
    // rho = a * scale on this level.
    const double scale = std::pow(delta, 1.0 / d) * std::pow(2.0, -0.5 * (j + 1));
    auto lower_at = [&](double a) {
      return projection_bounds(build_cover(dom, a * scale, j), basis, k).lower;
    };

    double lo = 0.5 * dom.h() / scale;
    double hi = 4.0 * (extent + dom.h()) / scale;
    const double lo_value = lower_at(lo);
    if (lo_value < target) {
      throw CalibrationError("level " + std::to_string(j) + ": lower frame bound " +
                             std::to_string(lo_value) + " < " + std::to_string(target) +
                             " even with one node per cube (degenerate grid)");
    }
    if (lower_at(hi) >= target) {
      lo = hi;
    } else {
      while (hi / lo > 1.0 + 1e-7) {
        const double mid = std::sqrt(lo * hi);
        (lower_at(mid) >= target ? lo : hi) = mid;
      }
    }

    LevelCalibration cal;
    cal.j = j;
    cal.dimension = k;
    cal.critical_a = lo;
    const auto cover = build_cover(dom, lo * scale, j);
    const Eigen::MatrixXd b =
        functional_mode_matrix(cover, basis.vectors.leftCols(static_cast<Eigen::Index>(k)),
                               basis.weight);
    const Eigen::MatrixXd g = b.transpose() * b;
    cal.lower_at_critical = lambda_min(g);
    double sampled = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(k));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
      sampled = std::min(sampled, x.dot(g * x) / x.squaredNorm());
    }
    cal.sampled_min = sampled;
    result.levels.push_back(cal);
  }

  double a0 = std::numeric_limits<double>::infinity();
  for (const auto& cal : result.levels) a0 = std::min(a0, cal.critical_a);
  a0 *= 0.9;
  for (;;) {
    bool ok = true;
    for (auto& cal : result.levels) {
      const double scale = std::pow(delta, 1.0 / d) * std::pow(2.0, -0.5 * (cal.j + 1));
      cal.lower_at_a0 = projection_bounds(build_cover(dom, a0 * scale, cal.j), basis, cal.dimension).lower;
      ok = ok && cal.lower_at_a0 >= target;
    }
    if (ok) break;
    if (++result.shrink_steps > 200) {
      throw CalibrationError("could not certify a0 on every tested level");
    }
    a0 *= 0.9;
  }
  result.a0 = a0;
  return result;
}

ReconstructionResult reconstruct(const FrameSystem& fs, const FrameCoefficients& c,
                                 std::size_t iterations, double lower, double upper,
                                 const GridFunction* reference) {
  if (!(lower > 0.0) || !(upper >= lower)) {
    throw ContractViolation("reconstruct: frame bounds must satisfy 0 < A <= B");
  }
  const auto& basis = fs.basis();
  const auto m = static_cast<Eigen::Index>(basis.size());
  const auto r = static_cast<Eigen::Index>(fs.bank->resolved_modes());
  if (c.levels.size() != fs.levels.size()) {
    throw ContractViolation("reconstruct: coefficient levels do not match the frame");
  }

  // Work in spectral coordinates over the resolved modes.
  auto frame_operator = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    for (const auto& level : fs.levels) {
      const auto top = level.spectral.topRows(r);
      y.noalias() += level.spectral * (top.transpose() * x);
    }
    return y;
  };
  Eigen::VectorXd target = Eigen::VectorXd::Zero(m);
  for (std::size_t j = 0; j < fs.levels.size(); ++j) {
    target.noalias() += fs.levels[j].spectral * c.levels[j];
  }
  const double tau = 2.0 / (lower + upper);

  ReconstructionResult out;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(r);
  auto record = [&] {
    if (!reference) return;
    Eigen::VectorXd full = Eigen::VectorXd::Zero(m);
    full.head(r) = x;
    const GridFunction e = *reference - basis.expand(full);
    out.errors.push_back(std::sqrt(basis.weight * e.squaredNorm()));
  };
  record();
  int growing = 0;
  for (std::size_t k = 0; k < iterations; ++k) {
    const Eigen::VectorXd step = (target - frame_operator(x)).head(r);
    x += tau * step;
    record();
    if (out.errors.size() >= 2) {
      const double prev = out.errors[out.errors.size() - 2];
      growing = out.errors.back() > prev ? growing + 1 : 0;
      if (growing >= 3) {
        out.diverged = true;
        out.message = "frame algorithm diverged: error grew for 3 consecutive steps; the supplied "
                      "bounds do not enclose the frame operator spectrum";
        break;
      }
    }
  }
  Eigen::VectorXd full = Eigen::VectorXd::Zero(m);
  full.head(r) = x;
  out.value = basis.expand(full);
  return out;
}

std::vector<std::pair<double, double>>
localization_profile(const FrameSystem& fs, const GridDomain& dom, int j, std::size_t i,
                     const std::vector<double>& radii) {
  const auto& level = level_at(fs, j);
  if (i >= level.size()) throw ContractViolation("localization_profile: atom index out of range");
  const auto center = level.cover.parts[i].center(level.rho);
  const auto phi = level.atoms.col(static_cast<Eigen::Index>(i));
  const double total = phi.squaredNorm();
  std::vector<std::pair<double, double>> out;
  out.reserve(radii.size());
  for (double radius : radii) {
    double outside = 0.0;
    for (std::size_t n = 0; n < dom.size(); ++n) {
      if (sup_distance(dom.node(n), center, dom.dimension()) > radius) {
        outside += phi[static_cast<Eigen::Index>(n)] * phi[static_cast<Eigen::Index>(n)];
      }
    }
    out.emplace_back(radius, total > 0.0 ? std::min(1.0, outside / total) : 0.0);
  }
  return out;
}

double energy_radius(const FrameSystem& fs, const GridDomain& dom, int j, std::size_t i,
                     double level_fraction) {
  const auto& level = level_at(fs, j);
  if (i >= level.size()) throw ContractViolation("energy_radius: atom index out of range");
  const auto center = level.cover.parts[i].center(level.rho);
  const auto phi = level.atoms.col(static_cast<Eigen::Index>(i));
  std::vector<std::pair<double, double>> by_distance;
  by_distance.reserve(dom.size());
  for (std::size_t n = 0; n < dom.size(); ++n) {
    const double v = phi[static_cast<Eigen::Index>(n)];
    by_distance.emplace_back(sup_distance(dom.node(n), center, dom.dimension()), v * v);
  }
  std::sort(by_distance.begin(), by_distance.end());
  const double total = phi.squaredNorm();
  if (total == 0.0) return 0.0;
  double inside = 0.0;
  for (std::size_t n = 0; n < by_distance.size(); ++n) {
    inside += by_distance[n].second;
    const bool last_at_radius =
        n + 1 == by_distance.size() || by_distance[n + 1].first > by_distance[n].first;
    if (last_at_radius && inside >= level_fraction * total) return by_distance[n].first;
  }
  return by_distance.back().first;
}

std::size_t nearest_atom(const FrameSystem& fs, int j, const std::array<double, 2>& point) {
  const auto& level = level_at(fs, j);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto c = level.cover.parts[i].center(level.rho);
    const double d = std::hypot(c[0] - point[0], c[1] - point[1]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

} // namespace bandframe
