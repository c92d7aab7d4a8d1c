#include "bandframe/covers.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "bandframe/errors.hpp"

namespace bandframe {

std::array<double, 2> CoverPart::center(double rho) const {
  return {rho * (static_cast<double>(cube[0]) + 0.5), rho * (static_cast<double>(cube[1]) + 0.5)};
}

double rho_for_level(int j, double delta, double a0, int d) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("frame.delta must lie in (0, 1), got " + std::to_string(delta));
  }
  if (!(a0 > 0.0)) throw ConfigError("frame.a0 must be positive, got " + std::to_string(a0));
  if (j < 0) throw ContractViolation("rho_for_level: level must be >= 0");
  if (d < 1) throw ContractViolation("rho_for_level: dimension must be >= 1");
  return a0 * std::pow(delta, 1.0 / d) * std::pow(2.0, -0.5 * (j + 1));
}

CubeCover build_cover(const GridDomain& dom, double rho, int level) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ContractViolation("build_cover: side length must be positive and finite");
  }
  std::map<std::array<long, 2>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const auto& x = dom.node(i).x;
    std::array<long, 2> k{0, 0};
    for (int a = 0; a < dom.dimension(); ++a) {
      k[a] = static_cast<long>(std::floor(x[a] / rho));
    }
    cells[k].push_back(i);
  }
  CubeCover cover;
  cover.level = level;
  cover.rho = rho;
  cover.parts.reserve(cells.size());
  for (auto& [k, nodes] : cells) {
    CoverPart part;
    part.cube = k;
    part.measure = dom.weight() * static_cast<double>(nodes.size());
    part.nodes = std::move(nodes);
    cover.parts.push_back(std::move(part));
  }
  return cover;
}

double Functional::apply(const GridFunction& f, double weight) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    sum += values[k] * f[static_cast<Eigen::Index>(nodes[k])];
  }
  return weight * sum;
}

GridFunction Functional::to_grid(std::size_t n) const {
  GridFunction g = GridFunction::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < nodes.size(); ++k) g[static_cast<Eigen::Index>(nodes[k])] = values[k];
  return g;
}

std::vector<Functional> make_functionals(const CubeCover& cover, const GridDomain& dom,
                                         FunctionalKind kind) {
  std::vector<Functional> out;
  out.reserve(cover.size());
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const auto& part = cover.parts[i];
    Functional phi;
    phi.kind = kind;
    phi.part = i;
    phi.measure = part.measure;
    if (kind == FunctionalKind::average) {
      phi.nodes = part.nodes;
      phi.values.assign(part.nodes.size(), 1.0 / std::sqrt(part.measure));
    } else {
      const auto c = part.center(cover.rho);
      std::size_t best = part.nodes.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (auto node : part.nodes) {
        const auto& x = dom.node(node).x;
        double d2 = 0.0;
        for (int a = 0; a < dom.dimension(); ++a) d2 += (x[a] - c[a]) * (x[a] - c[a]);
        if (d2 < best_d) {
          best_d = d2;
          best = node;
        }
      }
      phi.nodes = {best};
      phi.values = {std::sqrt(part.measure) / dom.weight()};
    }
    out.push_back(std::move(phi));
  }
  return out;
}

double functional_integral(const Functional& phi) {
  if (phi.kind != FunctionalKind::average) {
    throw ContractViolation("functional_integral: defined for average functionals only");
  }
  return std::sqrt(phi.measure);
}

GridFunction project_piecewise_constant(const CubeCover& cover, const GridFunction& f) {
  GridFunction out = GridFunction::Zero(f.size());
  for (const auto& part : cover.parts) {
    double mean = 0.0;
    for (auto i : part.nodes) mean += f[static_cast<Eigen::Index>(i)];
    mean /= static_cast<double>(part.nodes.size());
    for (auto i : part.nodes) out[static_cast<Eigen::Index>(i)] = mean;
  }
  return out;
}

Eigen::MatrixXd functional_mode_matrix(const CubeCover& cover, const Eigen::MatrixXd& modes,
                                       double weight) {
  Eigen::MatrixXd b(static_cast<Eigen::Index>(cover.size()), modes.cols());
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const auto& part = cover.parts[i];
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(modes.cols());
    for (auto node : part.nodes) sum += modes.row(static_cast<Eigen::Index>(node));
    b.row(static_cast<Eigen::Index>(i)) = (weight / std::sqrt(part.measure)) * sum;
  }
  return b;
}

} // namespace bandframe
