#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <random>

#include "bandframe/eigensolver.hpp"
#include "bandframe/errors.hpp"
#include "bandframe/elliptic_operator.hpp"
#include "bandframe/grid_domain.hpp"
#include "bandframe/spectral_filters.hpp"

namespace testing {

using namespace bandframe;

inline DomainSpec unit_interval(double h) { return {DomainKind::interval, {0.0, 1.0}, h}; }
inline DomainSpec unit_square(double h) { return {DomainKind::rectangle, {0.0, 1.0, 0.0, 1.0}, h}; }
inline DomainSpec unit_disk(double h) { return {DomainKind::disk, {0.0, 0.0, 1.0}, h}; }

struct Problem {
  GridDomain dom;
  OperatorMatrix op;
  std::shared_ptr<const EigenBasis> basis;
  std::shared_ptr<const FilterBank> bank;
};

/// Assembles and solves every pair up to the top frame band that fits below the cutoff.
inline Problem make_problem(const DomainSpec& spec,
                            const CoefficientField& coeff = CoefficientField::identity()) {
  GridDomain dom = build_domain(spec);
  OperatorMatrix op = assemble(dom, coeff);
  const int J = max_resolved_level(reliability_cutoff(dom, 0.5));
  auto basis = std::make_shared<const EigenBasis>(solve_below(op, dom, std::ldexp(1.0, 2 * J + 2)));
  auto bank = std::make_shared<const FilterBank>(basis);
  return {std::move(dom), std::move(op), basis, bank};
}

/// Basis on n "nodes" with weight 1 and identity eigenvectors, so every eigenvalue is exact.
inline std::shared_ptr<const EigenBasis> synthetic_basis(const std::vector<double>& values,
                                                         double reliable) {
  auto b = std::make_shared<EigenBasis>();
  const auto n = static_cast<Eigen::Index>(values.size());
  b->values = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
  b->vectors = Eigen::MatrixXd::Identity(n, n);
  b->weight = 1.0;
  b->tol = 1e-8;
  b->lambda_reliable = reliable;
  b->complete_to = reliable;
  return b;
}

inline GridFunction random_in_span(const EigenBasis& b, std::size_t modes, std::uint64_t seed) {
  if (modes > b.size()) throw bandframe::ContractViolation("random_in_span: too many modes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size()));
  for (std::size_t m = 0; m < modes; ++m) c[static_cast<Eigen::Index>(m)] = normal(rng);
  return b.expand(c / c.norm());
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace testing
