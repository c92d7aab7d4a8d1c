#include <doctest.h>

#include "bandframe/besov.hpp"
#include "bandframe/errors.hpp"
#include "support.hpp"

using namespace bandframe;

namespace {

// sqrt(lambda) = 0.9, 1.5, 2, 2.01, 3, 4, 4.01, 6, 8 on an exact spectrum; J = 3.
const std::vector<double> kFreq{0.9, 1.5, 2.0, 2.01, 3.0, 4.0, 4.01, 6.0, 8.0};

std::shared_ptr<const FilterBank> exact_bank() {
  std::vector<double> values;
  for (double s : kFreq) values.push_back(s * s);
  return std::make_shared<const FilterBank>(testing::synthetic_basis(values, 256.0));
}

GridFunction mode(std::size_t m) {
  GridFunction f = GridFunction::Zero(static_cast<Eigen::Index>(kFreq.size()));
  f[static_cast<Eigen::Index>(m)] = 1.0;
  return f;
}

std::size_t index_of(double s) {
  return static_cast<std::size_t>(std::find(kFreq.begin(), kFreq.end(), s) - kFreq.begin());
}

} // namespace

TEST_CASE("best approximation") {
  const auto bank = exact_bank();
  const auto& basis = bank->basis();
  CHECK(best_approx(basis, mode(2), 2.0) == 0.0);
  CHECK(best_approx(basis, mode(2), 1.99) == 1.0);
  CHECK(best_approx(basis, mode(0), 0.5) == 1.0);
  const GridFunction f = (3.0 * mode(0) + 4.0 * mode(1)) / 5.0;
  CHECK(best_approx(basis, f, 1.2) == doctest::Approx(0.8).epsilon(1e-15));

  const auto p = testing::make_problem(testing::unit_square(1.0 / 16));
  const GridFunction g = (3.0 * p.basis->vectors.col(0) + 4.0 * p.basis->vectors.col(1)) / 5.0;
  const double between = 0.5 * (std::sqrt(p.basis->values[0]) + std::sqrt(p.basis->values[1]));
  CHECK(best_approx(*p.basis, g, between) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(best_approx(basis, f, -1.0), ContractViolation);
}

TEST_CASE("approximation norm on single modes") {
  const auto bank = exact_bank();
  const BesovParams p{1.0, 2.0};
  CHECK(besov_norm_approx(*bank, mode(0), p) == doctest::Approx(1.0).epsilon(1e-15));
  // sqrt(lambda) = 2^2 + 0.01: E(f, 2^k) = 1 for k <= 2.
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (double q : {1.0, 2.0, kInfinity}) {
      double expected = 0.0;
      if (std::isinf(q)) {
        expected = std::pow(2.0, 2 * alpha);
      } else {
        for (int k = 0; k <= 2; ++k) expected += std::pow(2.0, k * alpha * q);
        expected = std::pow(expected, 1.0 / q);
      }
      CHECK(besov_norm_approx(*bank, mode(index_of(4.01)), {alpha, q}) ==
            doctest::Approx(1.0 + expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("Littlewood-Paley norm on a mode at 2^j") {
  const auto bank = exact_bank();
  for (int j = 1; j <= 3; ++j) {
    const auto f = mode(index_of(std::ldexp(1.0, j)));
    for (double alpha : {0.5, 1.0, 2.0}) {
      for (double q : {1.0, 2.0, kInfinity}) {
        CHECK(besov_norm_lp(*bank, f, {alpha, q}) ==
              doctest::Approx(std::pow(2.0, j * alpha)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("norms on a grid operator") {
  const auto p = testing::make_problem(testing::unit_square(1.0 / 32));
  const auto cal = calibrate_a0(p.dom, *p.bank, 0.5);
  const auto fs = build_frame(p.bank, p.dom, 0.5, cal.a0);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const GridFunction f = testing::random_in_span(*p.basis, p.bank->resolved_modes(), seed);
    CHECK_NOTHROW(require_resolved(*p.bank, f));
    for (double alpha : {0.5, 1.0, 2.0}) {
      for (double q : {1.0, 2.0, kInfinity}) {
        const BesovParams bp{alpha, q};
        const auto r = besov_report(fs, f, bp);
        CHECK(r.frame_over_lp >= std::sqrt(0.5) - 1e-10);
        CHECK(r.frame_over_lp <= 1.0 + 1e-10);
        for (double lr : r.level_ratios) {
          CHECK(lr <= 1.0 + 1e-12);
          CHECK(lr >= std::sqrt(0.5) - 1e-12);
        }
        CHECK(r.lp == doctest::Approx(besov_norm_lp(*p.bank, f, bp)).epsilon(1e-14));
        CHECK(r.frame == doctest::Approx(besov_norm_frame(fs, f, bp)).epsilon(1e-14));
        CHECK(r.approx == doctest::Approx(besov_norm_approx(*p.bank, f, bp)).epsilon(1e-14));
        for (double c : {-2.5, 0.0, 3.0}) {
          const GridFunction g = c * f;
          CHECK(std::abs(besov_norm_lp(*p.bank, g, bp) - std::abs(c) * r.lp) <= 1e-12 * r.lp);
          CHECK(std::abs(besov_norm_frame(fs, g, bp) - std::abs(c) * r.frame) <= 1e-12 * r.frame);
          CHECK(std::abs(besov_norm_approx(*p.bank, g, bp) - std::abs(c) * r.approx) <=
                1e-12 * r.approx);
        }
      }
    }
    // Every per-level term grows with alpha.
    const auto a = besov_report(fs, f, {0.5, 2.0});
    const auto b = besov_report(fs, f, {1.0, 2.0});
    for (std::size_t j = 0; j < a.lp_terms.size(); ++j) CHECK(b.lp_terms[j] >= a.lp_terms[j]);
  }
  CHECK(besov_norm_frame(fs, GridFunction::Zero(static_cast<Eigen::Index>(p.dom.size())), {}) == 0.0);

  GridFunction rough = p.basis->vectors.col(static_cast<Eigen::Index>(p.basis->size() - 1));
  CHECK_THROWS_AS(require_resolved(*p.bank, rough), ContractViolation);
}

TEST_CASE("inequality suite") {
  const auto p = testing::make_problem(testing::unit_disk(1.0 / 24));
  const auto& bank = *p.bank;
  SUBCASE("random resolved functions") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto rep = inequality_suite(bank, testing::random_in_span(*p.basis, bank.resolved_modes(), seed));
      CHECK(rep.passed());
      for (const auto& name : {"jackson_r1", "jackson_r2", "bernstein", "lp_upper",
                               "lp_lower_shifted", "parseval"}) {
        CHECK_MESSAGE(rep.at(name).passed, name);
      }
    }
  }
  SUBCASE("spectrum concentrated on the top resolved band") {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.basis->size()));
    for (std::size_t m = 0; m < bank.resolved_modes(); ++m) {
      if (bank.frequencies()[static_cast<Eigen::Index>(m)] > 0.5 * bank.resolved_limit()) {
        c[static_cast<Eigen::Index>(m)] = 1.0;
      }
    }
    const auto rep = inequality_suite(bank, p.basis->expand(c));
    CHECK(rep.passed());
  }
  const auto rep = inequality_suite(bank, testing::random_in_span(*p.basis, 3, 1));
  CHECK_THROWS_AS(rep.at("no_such_check"), ContractViolation);
}

TEST_CASE("unshifted tail bound fails for mass just above a dyadic edge") {
  // A single mode at sqrt(lambda) = 1.5: E(f, 1) = 1, yet sum_{j>0} ||F_j f|| = F_1(1.5) = 1/sqrt(2).
  const auto bank = exact_bank();
  const auto rep = inequality_suite(*bank, mode(1));
  CHECK_FALSE(rep.at("lp_lower_literal").passed);
  CHECK_FALSE(rep.at("lp_lower_literal").gating);
  CHECK(rep.at("lp_lower_literal").worst == doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-12));
  CHECK(rep.at("lp_lower_shifted").passed);
  CHECK(rep.passed());
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(validate(BesovParams{0.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(validate(BesovParams{1.0, 0.5}), ConfigError);
  CHECK_NOTHROW(validate(BesovParams{1.0, kInfinity}));
}
