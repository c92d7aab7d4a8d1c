#include <doctest.h>

#include "bandframe/errors.hpp"
#include "support.hpp"

using namespace bandframe;

TEST_CASE("cutoff values") {
  CHECK(cutoff_h(0.0) == 1.0);
  CHECK(cutoff_h(0.5) == 1.0);
  CHECK(cutoff_h(1.0) == 1.0);
  CHECK(cutoff_h(1.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cutoff_h(2.0) == 0.0);
  CHECK(cutoff_h(3.0) == 0.0);
  CHECK_THROWS_AS(cutoff_h(-0.1), ContractViolation);
  double prev = 1.0;
  for (double s = 0.0; s <= 2.5; s += 1e-3) {
    CHECK(cutoff_h(s) <= prev);
    prev = cutoff_h(s);
  }
}

TEST_CASE("filter profile values and support") {
  CHECK(filter_F(1, 2.0) == 1.0);
  for (int j = 1; j <= 8; ++j) {
    CHECK(filter_F(j, std::ldexp(1.0, j - 1)) == 0.0);
    CHECK(filter_F(j, std::ldexp(1.0, j)) == 1.0);
    CHECK(filter_F(j, std::ldexp(1.0, j + 1)) == 0.0);
    CHECK(filter_F(j, 0.99 * std::ldexp(1.0, j - 1)) == 0.0);
    CHECK(filter_F(j, 1.01 * std::ldexp(1.0, j + 1)) == 0.0);
  }
  CHECK(filter_F(0, 2.0) == 0.0);
  CHECK(filter_F(0, 1.0) == 1.0);
  double sum = 0.0;
  for (int j = 0; j <= 3; ++j) sum += filter_F(j, 5.0) * filter_F(j, 5.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("partition of unity on a fine grid") {
  for (int J : {0, 3, 6}) {
    const double top = std::ldexp(1.0, J);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const double s = top * k / 9999.0;
      double sum = 0.0;
      for (int j = 0; j <= J; ++j) {
        const double f = filter_F(j, s);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        sum += f * f;
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("resolved level from a spectral limit") {
  CHECK(max_resolved_level(3.9) == -1);
  CHECK(max_resolved_level(4.0) == 0);
  CHECK(max_resolved_level(15.9) == 0);
  CHECK(max_resolved_level(16.0) == 1);
  CHECK(max_resolved_level(2048.0) == 4);
}

TEST_CASE("filter bank on an exact spectrum") {
  // sqrt(lambda) = 0.5, 1, 1.5, 2, 3, 4, 6, 8, 12, 16.
  const std::vector<double> s{0.5, 1, 1.5, 2, 3, 4, 6, 8, 12, 16};
  std::vector<double> values;
  for (double x : s) values.push_back(x * x);
  const auto basis = testing::synthetic_basis(values, 256.0);
  const FilterBank bank(basis);
  REQUIRE(bank.max_level() == 3);
  CHECK(bank.resolved_limit() == 8.0);
  CHECK(bank.resolved_modes() == 8);

  SUBCASE("eigenvector at sqrt(lambda) = 2^j passes unchanged") {
    for (int j = 1; j <= 3; ++j) {
      const auto m = static_cast<Eigen::Index>(std::find(s.begin(), s.end(), std::ldexp(1.0, j)) - s.begin());
      const GridFunction u = basis->vectors.col(m);
      CHECK((bank.apply_band(j, u) - u).norm() == 0.0);
      for (int k = 0; k <= 3; ++k) {
        if (k != j) CHECK(bank.apply_band(k, u).norm() == 0.0);
      }
    }
  }
  SUBCASE("low spectrum is annihilated by high bands") {
    GridFunction f = GridFunction::Zero(10);
    f[0] = 1.0;
    f[1] = -2.0;
    CHECK(bank.apply_band(2, f).norm() == 0.0);
    CHECK(bank.apply_band(3, f).norm() == 0.0);
  }
  SUBCASE("unresolved level") {
    CHECK_THROWS_AS(bank.apply_band(4, GridFunction::Zero(10)), UnresolvedBandError);
    CHECK_THROWS_AS(FilterBank(basis, 4), UnresolvedBandError);
    CHECK(FilterBank(basis, 2).max_level() == 2);
  }
  SUBCASE("unresolved fraction") {
    GridFunction f = GridFunction::Zero(10);
    f[9] = 1.0;
    CHECK(bank.unresolved_fraction(f) == 1.0);
    f[0] = 1.0;
    CHECK(bank.unresolved_fraction(f) == doctest::Approx(std::sqrt(0.5)));
  }
}

TEST_CASE("Parseval, Calderon and self-adjointness on a grid operator") {
  const auto p = testing::make_problem(testing::unit_square(1.0 / 32));
  const auto& bank = *p.bank;
  const auto& basis = *p.basis;
  REQUIRE(bank.max_level() == 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GridFunction f = testing::random_in_span(basis, bank.resolved_modes(), seed);
    const GridFunction g = testing::random_in_span(basis, bank.resolved_modes(), seed + 100);
    double energy = 0.0;
    GridFunction calderon = GridFunction::Zero(f.size());
    for (int j = 0; j <= bank.max_level(); ++j) {
      const GridFunction fj = bank.apply_band(j, f);
      energy += norm(fj, p.dom) * norm(fj, p.dom);
      calderon += bank.apply_band(j, fj);
      const double lhs = inner_product(fj, g, p.dom);
      const double rhs = inner_product(f, bank.apply_band(j, g), p.dom);
      CHECK(std::abs(lhs - rhs) <= 1e-13);
    }
    const double f2 = norm(f, p.dom) * norm(f, p.dom);
    CHECK(std::abs(energy - f2) / f2 <= 1e-10);
    CHECK(norm(GridFunction(calderon - f), p.dom) <= 1e-10 * norm(f, p.dom));
  }
}

TEST_CASE("band kernel symmetry and positivity") {
  const auto p = testing::make_problem(testing::unit_square(1.0 / 16));
  const auto& bank = *p.bank;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, p.dom.size() - 1);
  for (int j = 0; j <= bank.max_level(); ++j) {
    for (int t = 0; t < 50; ++t) {
      const std::size_t x = pick(rng), y = pick(rng);
      CHECK(bank.band_kernel(j, x, y) == doctest::Approx(bank.band_kernel(j, y, x)).epsilon(1e-14));
      CHECK(bank.band_kernel(j, x, x) >= 0.0);
    }
  }
}

TEST_CASE("band kernel decays within eight cells of scale 2^-j") {
  const auto p = testing::make_problem(testing::unit_interval(1.0 / 512));
  const auto& bank = *p.bank;
  const auto center = p.dom.find({256, 0});
  REQUIRE(center.has_value());
  int checked = 0;
  for (int j = 0; j <= bank.max_level(); ++j) {
    const double dist = 8.0 * std::ldexp(1.0, -j);
    if (dist >= 0.5) continue;
    double diag = 0.0;
    for (std::size_t x = 0; x < p.dom.size(); ++x) diag = std::max(diag, bank.band_kernel(j, x, x));
    const long step = std::lround(dist * 512);
    for (long d : {step, -step}) {
      CHECK(std::abs(bank.band_kernel(j, *center, *p.dom.find({256 + d, 0}))) < 0.1 * diag);
    }
    ++checked;
  }
  CHECK(checked == 3);
}
