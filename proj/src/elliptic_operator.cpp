#include "bandframe/elliptic_operator.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "bandframe/errors.hpp"

namespace bandframe {

namespace {

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

} // namespace

CoefficientField CoefficientField::identity() { return {}; }

CoefficientField CoefficientField::constant_scalar(double value) {
  if (!(value > 0.0)) throw ConfigError("operator.value: constant coefficient must be positive");
  return scalar([value](double, double) { return value; }, "constant:" + hexfloat(value));
}

CoefficientField CoefficientField::sine_bump(double amplitude) {
  if (!(std::abs(amplitude) < 1.0))
    throw ConfigError("operator.amplitude: |amplitude| must be < 1 to keep a(x) positive");
  return scalar(
      [amplitude](double x, double) { return 1.0 + amplitude * std::sin(std::numbers::pi * x); },
      "sine_bump:" + hexfloat(amplitude));
}

CoefficientField CoefficientField::scalar(std::function<double(double, double)> a,
                                          std::string descriptor) {
  CoefficientField c;
  c.kind_ = CoefficientKind::scalar_varying;
  c.a_ = std::move(a);
  c.descriptor_ = std::move(descriptor);
  return c;
}

CoefficientField CoefficientField::matrix(double a11, double a12, double a22) {
  const double det = a11 * a22 - a12 * a12;
  if (!(a11 > 0.0) || !(det > 0.0)) {
    throw ConfigError("operator.matrix: coefficient matrix must be symmetric positive definite");
  }
  CoefficientField c;
  c.kind_ = CoefficientKind::constant_matrix;
  c.m_ = {a11, a12, a22};
  c.descriptor_ = "matrix:" + hexfloat(a11) + "," + hexfloat(a12) + "," + hexfloat(a22);
  return c;
}

double CoefficientField::scalar_at(double x, double y) const {
  return kind_ == CoefficientKind::scalar_varying ? a_(x, y) : 1.0;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string operator_fingerprint(const DomainSpec& spec, const CoefficientField& coeff) {
  std::ostringstream key;
  key << "stencil=" << kStencilVersion << ";domain=" << to_string(spec.kind) << ";params=";
  for (double p : spec.params) key << hexfloat(p) << ',';
  key << ";h=" << hexfloat(spec.h) << ";coeff=" << coeff.descriptor();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(key.str())));
  return buf;
}

OperatorMatrix assemble(const GridDomain& dom, const CoefficientField& coeff) {
  const int d = dom.dimension();
  const double h = dom.h();
  const double inv_h2 = 1.0 / (h * h);
  const auto n = static_cast<Eigen::Index>(dom.size());
  const bool is_matrix = coeff.kind() == CoefficientKind::constant_matrix;
  const auto& m = coeff.matrix_entries();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * (is_matrix ? 9 : 2 * d + 1));

  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& node = dom.node(static_cast<std::size_t>(a));
    double diag = 0.0;
    for (int axis = 0; axis < d; ++axis) {
      const double axis_factor = is_matrix ? (axis == 0 ? m[0] : m[2]) : 1.0;
      for (int side : {-1, 1}) {
        auto nb = node.index;
        nb[axis] += side;
        // Midpoint built from the lower endpoint's index so both rows see the same value.
        const long low = std::min(node.index[axis], nb[axis]);
        std::array<double, 2> mid = node.x;
        mid[axis] = dom.lo()[axis] + (static_cast<double>(low) + 0.5) * h;
        const double c = axis_factor * coeff.scalar_at(mid[0], mid[1]);
        if (!(c > 0.0) || !std::isfinite(c)) {
          throw AssemblyError("coefficient is not positive at (" + std::to_string(mid[0]) + ", " +
                              std::to_string(mid[1]) + ")");
        }
        diag += c * inv_h2;
        if (auto b = dom.find(nb)) {
          triplets.emplace_back(a, static_cast<Eigen::Index>(*b), -c * inv_h2);
        }
      }
    }
    if (is_matrix && d == 2 && m[1] != 0.0) {
      for (int sx : {-1, 1}) {
        for (int sy : {-1, 1}) {
          if (auto b = dom.find({node.index[0] + sx, node.index[1] + sy})) {
            triplets.emplace_back(a, static_cast<Eigen::Index>(*b),
                                  -m[1] * static_cast<double>(sx * sy) * 0.5 * inv_h2);
          }
        }
      }
    }
    triplets.emplace_back(a, a, diag);
  }

  OperatorMatrix op;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.fingerprint = operator_fingerprint(dom.spec(), coeff);
  op.coefficient = coeff.descriptor();
  return op;
}

GridFunction apply(const OperatorMatrix& op, const GridFunction& f) {
  if (f.size() != op.matrix.cols()) {
    throw ContractViolation("apply: grid function length does not match the operator");
  }
  return op.matrix * f;
}

} // namespace bandframe
