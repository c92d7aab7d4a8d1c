#include "bandframe/grid_domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bandframe/errors.hpp"

namespace bandframe {

namespace {

// Relative slack for the strict interior test; nodes within it of the boundary count as on it.
constexpr double kBoundarySlack = 1e-12;

std::size_t expected_params(DomainKind kind) {
  switch (kind) {
  case DomainKind::interval: return 2;
  case DomainKind::rectangle: return 4;
  case DomainKind::disk: return 3;
  case DomainKind::annulus: return 4;
  case DomainKind::ellipse: return 4;
  }
  return 0;
}

void validate(const DomainSpec& spec) {
  if (!(spec.h > 0.0) || !std::isfinite(spec.h)) {
    throw ConfigError("domain.h must be a positive finite spacing");
  }
  const auto want = expected_params(spec.kind);
  if (spec.params.size() != want) {
    throw ConfigError("domain.params: " + std::string(to_string(spec.kind)) + " expects " +
                      std::to_string(want) + " values, got " +
                      std::to_string(spec.params.size()));
  }
  for (double p : spec.params) {
    if (!std::isfinite(p)) throw ConfigError("domain.params must be finite");
  }
  const auto& p = spec.params;
  switch (spec.kind) {
  case DomainKind::interval:
    if (!(p[1] > p[0])) throw ConfigError("domain.params: interval needs a < b");
    break;
  case DomainKind::rectangle:
    if (!(p[1] > p[0]) || !(p[3] > p[2]))
      throw ConfigError("domain.params: rectangle needs x0 < x1 and y0 < y1");
    break;
  case DomainKind::disk:
    if (!(p[2] > 0.0)) throw ConfigError("domain.params: disk radius must be positive");
    break;
  case DomainKind::annulus:
    if (!(p[2] > 0.0) || !(p[3] > p[2]))
      throw ConfigError("domain.params: annulus needs 0 < r_inner < r_outer");
    break;
  case DomainKind::ellipse:
    if (!(p[2] > 0.0) || !(p[3] > 0.0))
      throw ConfigError("domain.params: ellipse semi-axes must be positive");
    break;
  }
}

// Positive strictly inside, scaled so the slack is relative.
bool strictly_inside(const DomainSpec& spec, double x, double y) {
  const auto& p = spec.params;
  switch (spec.kind) {
  case DomainKind::interval: {
    const double tol = kBoundarySlack * std::max(1.0, p[1] - p[0]);
    return x > p[0] + tol && x < p[1] - tol;
  }
  case DomainKind::rectangle: {
    const double tol = kBoundarySlack * std::max({1.0, p[1] - p[0], p[3] - p[2]});
    return x > p[0] + tol && x < p[1] - tol && y > p[2] + tol && y < p[3] - tol;
  }
  case DomainKind::disk: {
    const double r2 = (x - p[0]) * (x - p[0]) + (y - p[1]) * (y - p[1]);
    return p[2] * p[2] - r2 > kBoundarySlack * p[2] * p[2];
  }
  case DomainKind::annulus: {
    const double r2 = (x - p[0]) * (x - p[0]) + (y - p[1]) * (y - p[1]);
    return p[3] * p[3] - r2 > kBoundarySlack * p[3] * p[3] &&
           r2 - p[2] * p[2] > kBoundarySlack * p[2] * p[2];
  }
  case DomainKind::ellipse: {
    const double u = (x - p[0]) / p[2];
    const double v = (y - p[1]) / p[3];
    return 1.0 - (u * u + v * v) > kBoundarySlack;
  }
  }
  return false;
}

} // namespace

std::string_view to_string(DomainKind kind) {
  switch (kind) {
  case DomainKind::interval: return "interval";
  case DomainKind::rectangle: return "rectangle";
  case DomainKind::disk: return "disk";
  case DomainKind::annulus: return "annulus";
  case DomainKind::ellipse: return "ellipse";
  }
  return "unknown";
}

DomainKind parse_domain_kind(std::string_view name) {
  for (auto k : {DomainKind::interval, DomainKind::rectangle, DomainKind::disk,
                 DomainKind::annulus, DomainKind::ellipse}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("domain.kind: unknown domain kind '" + std::string(name) + "'");
}

GridDomain::GridDomain(DomainSpec spec, int dimension, std::array<double, 2> lo,
                       std::array<double, 2> hi, std::vector<GridNode> nodes)
    : spec_(std::move(spec)), dim_(dimension), lo_(lo), hi_(hi),
      weight_(std::pow(spec_.h, dimension)), nodes_(std::move(nodes)) {
  long max1 = 0;
  for (const auto& n : nodes_) max1 = std::max(max1, n.index[1]);
  stride_ = max1 + 1;
  lookup_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& k = nodes_[i].index;
    lookup_.emplace(static_cast<long long>(k[0]) * stride_ + k[1], i);
  }
}

double GridDomain::exact_measure() const {
  const auto& p = spec_.params;
  switch (spec_.kind) {
  case DomainKind::interval: return p[1] - p[0];
  case DomainKind::rectangle: return (p[1] - p[0]) * (p[3] - p[2]);
  case DomainKind::disk: return std::numbers::pi * p[2] * p[2];
  case DomainKind::annulus: return std::numbers::pi * (p[3] * p[3] - p[2] * p[2]);
  case DomainKind::ellipse: return std::numbers::pi * p[2] * p[3];
  }
  return 0.0;
}

std::optional<std::size_t> GridDomain::find(const std::array<long, 2>& index) const {
  if (index[0] < 0 || index[1] < 0 || index[1] >= stride_) return std::nullopt;
  if (dim_ == 1 && index[1] != 0) return std::nullopt;
  auto it = lookup_.find(static_cast<long long>(index[0]) * stride_ + index[1]);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

bool GridDomain::conforms(const GridFunction& f) const {
  return static_cast<std::size_t>(f.size()) == nodes_.size() && f.allFinite();
}

GridDomain build_domain(const DomainSpec& spec) {
  validate(spec);
  const auto& p = spec.params;
  int dim = 2;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};
  switch (spec.kind) {
  case DomainKind::interval:
    dim = 1;
    lo = {p[0], 0.0};
    hi = {p[1], 0.0};
    break;
  case DomainKind::rectangle:
    lo = {p[0], p[2]};
    hi = {p[1], p[3]};
    break;
  case DomainKind::disk:
    lo = {p[0] - p[2], p[1] - p[2]};
    hi = {p[0] + p[2], p[1] + p[2]};
    break;
  case DomainKind::annulus:
    lo = {p[0] - p[3], p[1] - p[3]};
    hi = {p[0] + p[3], p[1] + p[3]};
    break;
  case DomainKind::ellipse:
    lo = {p[0] - p[2], p[1] - p[3]};
    hi = {p[0] + p[2], p[1] + p[3]};
    break;
  }

  std::array<long, 2> count{0, 0};
  for (int a = 0; a < dim; ++a) {
    count[a] = static_cast<long>(std::floor((hi[a] - lo[a]) / spec.h + 1e-9));
  }

  std::vector<GridNode> nodes;
  for (long i = 0; i <= count[0]; ++i) {
    const double x = lo[0] + static_cast<double>(i) * spec.h;
    if (dim == 1) {
      if (strictly_inside(spec, x, 0.0)) nodes.push_back({{i, 0}, {x, 0.0}});
      continue;
    }
    for (long j = 0; j <= count[1]; ++j) {
      const double y = lo[1] + static_cast<double>(j) * spec.h;
      if (strictly_inside(spec, x, y)) nodes.push_back({{i, j}, {x, y}});
    }
  }
  if (nodes.empty()) {
    throw EmptyDomainError("empty domain: no grid node of spacing " + std::to_string(spec.h) +
                           " lies strictly inside the " + std::string(to_string(spec.kind)));
  }
  return GridDomain(spec, dim, lo, hi, std::move(nodes));
}

double inner_product(const GridFunction& f, const GridFunction& g, const GridDomain& dom) {
  if (static_cast<std::size_t>(f.size()) != dom.size() ||
      static_cast<std::size_t>(g.size()) != dom.size()) {
    throw ContractViolation("inner_product: grid function length does not match the domain");
  }
  return dom.weight() * f.dot(g);
}

double norm(const GridFunction& f, const GridDomain& dom) {
  return std::sqrt(inner_product(f, f, dom));
}

} // namespace bandframe
