#include <doctest.h>

#include <cmath>

#include "compbench/error.hpp"
#include "compbench/rng.hpp"
#include "compbench/stats.hpp"
#include "oracles.hpp"

using namespace compbench;
using namespace compbench::stats;

TEST_CASE("paired t on a four-pair example") {
  const auto r = paired_t({1, -1, 2, 0}, {0, 0, 0, 0});
  CHECK(r.df == 3);
  CHECK(r.t == doctest::Approx(0.5 / (std::sqrt(5.0 / 3.0) / 2.0)).epsilon(1e-14));
  CHECK(r.t == doctest::Approx(0.7746).epsilon(1e-4));
  CHECK(r.p_two_sided == doctest::Approx(oracle::t_two_sided_quadrature(r.t, 3)).epsilon(1e-10));
  CHECK(r.p_two_sided == doctest::Approx(0.495).epsilon(1e-3));
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("t tail matches quadrature across df") {
  for (double df : {1.0, 2.0, 5.0, 30.0, 199.0}) {
    for (double t : {0.1, 1.0, 2.5, 4.0}) {
      CHECK(student_t_two_sided_p(t, df) == doctest::Approx(oracle::t_two_sided_quadrature(t, df)).epsilon(1e-9));
    }
  }
  CHECK(student_t_quantile(0.975, 1e6) == doctest::Approx(1.959964).epsilon(1e-6));
}

TEST_CASE("paired t degenerate cases") {
  const auto same = paired_t({0.3, 0.5, 0.7}, {0.3, 0.5, 0.7});
  CHECK(same.degenerate);
  CHECK_FALSE(same.exact_difference);
  CHECK(same.p_two_sided == 1.0);

  const auto shifted = paired_t({2, 3, 4, 5}, {1, 2, 3, 4});
  CHECK(shifted.degenerate);
  CHECK(shifted.exact_difference);
  CHECK(shifted.p_two_sided == 0.0);

  CHECK_THROWS_AS(paired_t({1, 2}, {1}), ArgumentError);
  CHECK_THROWS_AS(paired_t({1}, {1}), ArgumentError);
}

TEST_CASE("paired t is antisymmetric") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(20), b(20);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal() + 0.2;
    }
    const auto ab = paired_t(a, b), ba = paired_t(b, a);
    CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
    CHECK(ab.p_two_sided == doctest::Approx(ba.p_two_sided).epsilon(1e-12));
  }
}

TEST_CASE("BH on the four-value example") {
  const std::vector<double> p{0.01, 0.04, 0.03, 0.005};
  const auto adj = bh_correct(p);
  CHECK(adj == oracle::bh_bruteforce(p));
  const std::vector<double> expected{0.02, 0.04, 0.04, 0.02};
  for (std::size_t i = 0; i < 4; ++i) CHECK(adj[i] == doctest::Approx(expected[i]).epsilon(1e-15));
}

TEST_CASE("BH trivial inputs") {
  CHECK(bh_correct({0.37}) == std::vector<double>{0.37});
  CHECK(bh_correct({0.2, 0.2, 0.2}) == std::vector<double>{0.2, 0.2, 0.2});
  CHECK(bh_correct({}).empty());
  CHECK_THROWS_AS(bh_correct({0.1, 1.5}), ArgumentError);
  CHECK_THROWS_AS(bh_correct({-0.1}), ArgumentError);
  CHECK_THROWS_AS(bh_correct({std::nan("")}), ArgumentError);
}

TEST_CASE("BH equals the brute-force definition on random vectors") {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(static_cast<std::size_t>(rng.uniform_int(1, 30)));
    for (auto& x : p) x = rng.uniform01() < 0.2 ? 0.05 : rng.uniform01();  // include ties
    const auto adj = bh_correct(p);
    CHECK(adj == oracle::bh_bruteforce(p));

    std::vector<std::size_t> sorted_idx(p.size());
    std::iota(sorted_idx.begin(), sorted_idx.end(), 0);
    std::sort(sorted_idx.begin(), sorted_idx.end(), [&](auto i, auto j) { return p[i] < p[j]; });
    for (std::size_t k = 1; k < p.size(); ++k) CHECK(adj[sorted_idx[k - 1]] <= adj[sorted_idx[k]]);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(adj[i] >= p[i]);
  }
}

TEST_CASE("BH is invariant to input order") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(12);
    for (auto& x : p) x = rng.uniform01();
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<double> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[i] = p[perm[i]];
    const auto ap = bh_correct(p), aq = bh_correct(q);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(aq[i] == ap[perm[i]]);
  }
}

TEST_CASE("pairwise tests cover every unordered pair") {
  Rng rng(4);
  std::vector<std::vector<double>> scores(3, std::vector<double>(30));
  for (std::size_t m = 0; m < 3; ++m) {
    for (auto& x : scores[m]) x = rng.normal() + static_cast<double>(m);
  }
  const auto r = pairwise_tests({"a", "b", "c"}, scores);
  REQUIRE(r.size() == 3);
  CHECK(r[0].model_a == "a");
  CHECK(r[0].model_b == "b");
  CHECK(r[2].model_a == "b");
  CHECK(r[2].model_b == "c");
  const auto adj = bh_correct({r[0].p_two_sided, r[1].p_two_sided, r[2].p_two_sided});
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(r[k].p_bh_adjusted == adj[k]);
    CHECK(r[k].significant == (adj[k] <= 0.05));
  }
  CHECK(r[1].significant);
}

TEST_CASE("OLS closed-form cases") {
  const auto exact = ols_fit({0, 1, 2, 3}, {0, 2, 4, 6});
  CHECK(exact.slope == doctest::Approx(2.0));
  CHECK(exact.intercept == doctest::Approx(0.0));
  CHECK(exact.r2 == doctest::Approx(1.0));
  CHECK(exact.slope_ci_high - exact.slope_ci_low == doctest::Approx(0.0));

  const auto small = ols_fit({0, 1, 2}, {0, 1, 1});
  CHECK(small.slope == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(small.intercept == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  // Residuals (-1/6, 1/3, -1/6): SSE = 1/6, SE(slope) = sqrt(1/6 / 1 / 2).
  const double half = student_t_quantile(0.975, 1) * std::sqrt(1.0 / 12.0);
  CHECK(small.slope_ci_high == doctest::Approx(0.5 + half).epsilon(1e-12));
  CHECK(small.band_half_width(1.0) == doctest::Approx(student_t_quantile(0.975, 1) * std::sqrt(1.0 / 6.0 / 3.0)).epsilon(1e-12));

  CHECK_THROWS_AS(ols_fit({1, 1, 1}, {0, 1, 2}), DegenerateError);
  CHECK_THROWS_AS(ols_fit({0, 1}, {0, 1}), ArgumentError);
  CHECK_THROWS_AS(ols_fit({0, 1, 2}, {0, 1}), ArgumentError);
}

TEST_CASE("OLS slope interval has nominal coverage under independence") {
  Rng rng(5);
  int covered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform01();
      y[i] = rng.normal();
    }
    const auto f = ols_fit(x, y);
    if (f.slope_ci_low <= 0.0 && 0.0 <= f.slope_ci_high) ++covered;
  }
  CHECK(covered >= 93);
}

TEST_CASE("OLS slope is equivariant to scaling y") {
  Rng rng(6);
  std::vector<double> x(25), y(25);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform01();
    y[i] = 0.3 * x[i] + 0.1 * rng.normal();
  }
  const auto base = ols_fit(x, y);
  for (double c : {3.0, -2.0}) {
    auto yc = y;
    for (auto& v : yc) v *= c;
    const auto f = ols_fit(x, yc);
    CHECK(f.slope == doctest::Approx(c * base.slope).epsilon(1e-12));
    const double lo = std::min(c * base.slope_ci_low, c * base.slope_ci_high);
    const double hi = std::max(c * base.slope_ci_low, c * base.slope_ci_high);
    CHECK(f.slope_ci_low == doctest::Approx(lo).epsilon(1e-12));
    CHECK(f.slope_ci_high == doctest::Approx(hi).epsilon(1e-12));
  }
}

TEST_CASE("box summary") {
  const auto b = box_summary({5, 1, 4, 2, 3});
  CHECK(b.median == 3.0);
  CHECK(b.q1 == 2.0);
  CHECK(b.q3 == 4.0);
  CHECK(b.notch_low == doctest::Approx(3.0 - 1.57 * 2.0 / std::sqrt(5.0)));
  CHECK(b.notch_high == doctest::Approx(3.0 + 1.57 * 2.0 / std::sqrt(5.0)));
  CHECK(b.whisker_low == 1.0);
  CHECK(b.whisker_high == 5.0);

  const auto outlier = box_summary({1, 2, 3, 4, 5, 100});
  CHECK(outlier.whisker_high == 5.0);

  const auto flat = box_summary({0.7, 0.7, 0.7});
  CHECK(flat.q1 == 0.7);
  CHECK(flat.q3 == 0.7);
  CHECK(flat.notch_low == 0.7);
  CHECK(flat.notch_high == 0.7);

  const auto one = box_summary({0.25});
  for (double v : {one.median, one.q1, one.q3, one.notch_low, one.notch_high, one.whisker_low, one.whisker_high}) CHECK(v == 0.25);
  CHECK(one.n == 1);
  CHECK_THROWS_AS(box_summary({}), ArgumentError);
}

TEST_CASE("box summary invariants on random samples") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(static_cast<std::size_t>(rng.uniform_int(1, 60)));
    for (auto& x : s) x = rng.normal();
    const auto b = box_summary(s);
    CHECK(b.q1 <= b.median);
    CHECK(b.median <= b.q3);
    CHECK(b.whisker_low <= b.q1 + 1e-15);
    CHECK(b.whisker_high >= b.q3 - 1e-15);
  }
}

TEST_CASE("inclusive quantile interpolates") {
  CHECK(quantile_inclusive({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_inclusive({4, 1}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_inclusive({4, 1, 9}, 1.0) == 9.0);
  CHECK_THROWS_AS(quantile_inclusive({}, 0.5), ArgumentError);
}
