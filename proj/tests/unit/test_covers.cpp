#include <doctest.h>

#include <set>

#include "bandframe/covers.hpp"
#include "bandframe/errors.hpp"
#include "support.hpp"

using namespace bandframe;
using testing::unit_disk;
using testing::unit_interval;
using testing::unit_square;

namespace {

std::vector<std::size_t> counts(const CubeCover& c) {
  std::vector<std::size_t> out;
  for (const auto& p : c.parts) out.push_back(p.nodes.size());
  return out;
}

GridFunction random_function(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  GridFunction f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = normal(rng);
  return f;
}

} // namespace

TEST_CASE("cube side per level") {
  CHECK(rho_for_level(3, 0.5, 0.4, 2) == doctest::Approx(0.070711).epsilon(1e-5));
  CHECK(rho_for_level(0, 1.0 - 1e-12, 1.0, 2) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(rho_for_level(2, 1.0 - 1e-12, 1.0, 1) == doctest::Approx(0.35355).epsilon(1e-4));
  CHECK_THROWS_AS(rho_for_level(0, 1.5, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(rho_for_level(0, 0.0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(rho_for_level(0, 0.5, -1.0, 2), ConfigError);
}

TEST_CASE("interval cover with rho = 0.3") {
  const auto dom = build_domain(unit_interval(1.0 / 8));
  const auto cover = build_cover(dom, 0.3);
  CHECK(counts(cover) == std::vector<std::size_t>{2, 2, 3});
  CHECK(counts(build_cover(dom, 1.0)) == std::vector<std::size_t>{7});
}

TEST_CASE("square cover with rho = 0.5") {
  const auto dom = build_domain(unit_square(0.25));
  const auto cover = build_cover(dom, 0.5);
  CHECK(counts(cover) == std::vector<std::size_t>{1, 2, 2, 4});
  const auto fn = make_functionals(cover, dom);
  REQUIRE(fn.size() == 4);
  CHECK(fn[3].measure == 0.25);
  for (double v : fn[3].values) CHECK(v == 2.0);
  CHECK(functional_integral(fn[3]) == 0.5);
}

TEST_CASE("covers partition the node set") {
  const auto dom = build_domain(unit_disk(1.0 / 32));
  for (double rho : {0.05, 0.13, 0.4, 3.0}) {
    const auto cover = build_cover(dom, rho);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& part : cover.parts) {
      REQUIRE_FALSE(part.nodes.empty());
      CHECK(part.measure == doctest::Approx(dom.weight() * static_cast<double>(part.nodes.size())));
      // A half-open side of length rho holds at most rho/h + 1 nodes.
      CHECK(part.measure <= (rho + dom.h()) * (rho + dom.h()) + 1e-15);
      double spread = 0.0;
      for (std::size_t a : part.nodes) {
        CHECK(seen.insert(a).second);
        for (std::size_t b : part.nodes) {
          spread = std::max(spread, std::hypot(dom.node(a).x[0] - dom.node(b).x[0],
                                               dom.node(a).x[1] - dom.node(b).x[1]));
        }
      }
      CHECK(spread <= std::sqrt(2.0) * rho);
      total += part.nodes.size();
    }
    CHECK(total == dom.size());
    for (std::size_t i = 1; i < cover.size(); ++i) CHECK(cover.parts[i - 1].cube < cover.parts[i].cube);
  }
}

TEST_CASE("averaging functionals") {
  const auto dom = build_domain(unit_disk(1.0 / 16));
  const auto cover = build_cover(dom, 0.2);
  const auto fn = make_functionals(cover, dom);
  const GridFunction c = GridFunction::Constant(static_cast<Eigen::Index>(dom.size()), 1.7);
  double sum = 0.0;
  for (const auto& phi : fn) {
    const GridFunction g = phi.to_grid(dom.size());
    CHECK(norm(g, dom) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(inner_product(GridFunction::Ones(g.size()), g, dom) ==
          doctest::Approx(std::sqrt(phi.measure)).epsilon(1e-14));
    CHECK(phi.apply(c, dom.weight()) == doctest::Approx(1.7 * std::sqrt(phi.measure)).epsilon(1e-14));
    CHECK(functional_integral(phi) > 0.0);
    sum += std::pow(phi.apply(c, dom.weight()), 2);
  }
  CHECK(sum == doctest::Approx(1.7 * 1.7 * dom.measure()).epsilon(1e-13));
}

TEST_CASE("center-point functionals") {
  const auto dom = build_domain(unit_square(0.25));
  const auto cover = build_cover(dom, 0.5);
  const auto fn = make_functionals(cover, dom, FunctionalKind::center_point);
  REQUIRE(fn.size() == 4);
  for (const auto& phi : fn) {
    REQUIRE(phi.nodes.size() == 1);
    CHECK(phi.values[0] == doctest::Approx(std::sqrt(phi.measure) / dom.weight()));
  }
  GridFunction f = GridFunction::Zero(9);
  f[static_cast<Eigen::Index>(fn[3].nodes[0])] = 3.0;
  CHECK(fn[3].apply(f, dom.weight()) == doctest::Approx(3.0 * 0.5));
}

TEST_CASE("piecewise-constant projection") {
  const auto dom = build_domain(unit_disk(1.0 / 16));
  const auto cover = build_cover(dom, 0.25);
  const auto fn = make_functionals(cover, dom);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GridFunction f = random_function(dom.size(), seed);
    const GridFunction p = project_piecewise_constant(cover, f);
    CHECK((project_piecewise_constant(cover, p) - p).norm() <= 1e-12 * p.norm());
    CHECK(std::abs(inner_product(GridFunction(f - p), p, dom)) <= 1e-12 * norm(f, dom) * norm(f, dom));
    double sum = 0.0;
    for (const auto& phi : fn) sum += std::pow(phi.apply(f, dom.weight()), 2);
    CHECK(sum <= norm(f, dom) * norm(f, dom) * (1 + 1e-14));
    CHECK(sum == doctest::Approx(norm(p, dom) * norm(p, dom)).epsilon(1e-12));
  }
}

TEST_CASE("refining a cover never lowers the sampled energy") {
  const auto dom = build_domain(unit_square(1.0 / 32));
  const auto coarse = make_functionals(build_cover(dom, 0.25), dom);
  const auto fine = make_functionals(build_cover(dom, 0.125), dom);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GridFunction f = random_function(dom.size(), seed);
    double a = 0.0, b = 0.0;
    for (const auto& phi : coarse) a += std::pow(phi.apply(f, dom.weight()), 2);
    for (const auto& phi : fine) b += std::pow(phi.apply(f, dom.weight()), 2);
    CHECK(b >= a * (1 - 1e-14));
  }
}

TEST_CASE("functional-mode matrix matches direct application") {
  const auto p = testing::make_problem(unit_square(1.0 / 16));
  const auto cover = build_cover(p.dom, 0.3);
  const auto fn = make_functionals(cover, p.dom);
  const auto b = functional_mode_matrix(cover, p.basis->vectors, p.basis->weight);
  REQUIRE(b.rows() == static_cast<Eigen::Index>(fn.size()));
  for (Eigen::Index m = 0; m < b.cols(); ++m) {
    for (std::size_t i = 0; i < fn.size(); ++i) {
      CHECK(b(static_cast<Eigen::Index>(i), m) ==
            doctest::Approx(fn[i].apply(p.basis->vectors.col(m), p.basis->weight)).epsilon(1e-13));
    }
  }
}
