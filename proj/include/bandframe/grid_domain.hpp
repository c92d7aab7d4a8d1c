#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace bandframe {

/// Real value per interior node, ordered like GridDomain::nodes().
using GridFunction = Eigen::VectorXd;

enum class DomainKind { interval, rectangle, disk, annulus, ellipse };

std::string_view to_string(DomainKind kind);
/// Throws ConfigError for unknown names.
DomainKind parse_domain_kind(std::string_view name);

/// Shape parameters, by kind:
///   interval  {a, b}
///   rectangle {x0, x1, y0, y1}
///   disk      {cx, cy, r}
///   annulus   {cx, cy, r_inner, r_outer}
///   ellipse   {cx, cy, semi_x, semi_y}
struct DomainSpec {
  DomainKind kind = DomainKind::interval;
  std::vector<double> params;
  double h = 0.0;
};

struct GridNode {
  std::array<long, 2> index{0, 0}; // second entry unused when d = 1
  std::array<double, 2> x{0.0, 0.0};
};

/// Uniform-grid discretization of a bounded domain: the nodes lo + k*h that lie
/// strictly inside the shape. Dirichlet data is the implicit zero outside this set.
class GridDomain {
public:
  GridDomain(DomainSpec spec, int dimension, std::array<double, 2> lo,
             std::array<double, 2> hi, std::vector<GridNode> nodes);

  const DomainSpec& spec() const noexcept { return spec_; }
  DomainKind kind() const noexcept { return spec_.kind; }
  int dimension() const noexcept { return dim_; }
  double h() const noexcept { return spec_.h; }
  /// Quadrature weight h^d carried by every node.
  double weight() const noexcept { return weight_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<GridNode>& nodes() const noexcept { return nodes_; }
  const GridNode& node(std::size_t i) const { return nodes_.at(i); }
  const std::array<double, 2>& lo() const noexcept { return lo_; }
  const std::array<double, 2>& hi() const noexcept { return hi_; }
  /// Discrete measure w * node count.
  double measure() const noexcept { return weight_ * static_cast<double>(nodes_.size()); }
  /// Exact measure of the continuous shape.
  double exact_measure() const;

  /// Position of the node with the given multi-index, if it is interior.
  std::optional<std::size_t> find(const std::array<long, 2>& index) const;

  /// True when f has one finite value per node.
  bool conforms(const GridFunction& f) const;

private:
  DomainSpec spec_;
  int dim_;
  std::array<double, 2> lo_;
  std::array<double, 2> hi_;
  double weight_;
  std::vector<GridNode> nodes_;
  std::unordered_map<long long, std::size_t> lookup_;
  long stride_ = 0;
};

/// Enumerates interior nodes in lexicographic order of their multi-index.
/// Throws ConfigError on bad parameters and EmptyDomainError when no node is interior.
GridDomain build_domain(const DomainSpec& spec);

/// h^d * sum f*g.
double inner_product(const GridFunction& f, const GridFunction& g, const GridDomain& dom);
double norm(const GridFunction& f, const GridDomain& dom);

} // namespace bandframe
