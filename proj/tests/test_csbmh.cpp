#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "homoscope/error.hpp"
#include "homoscope/csbmh.hpp"
#include "homoscope/gchi2.hpp"
#include "homoscope/parallel.hpp"

using namespace homoscope;

namespace {

CsbmhParams standard(double h = 0.5) {
  CsbmhParams p;
  p.mu0 = {-1.0, 0.0};
  p.mu1 = {0.0, 1.0};
  p.sigma0_sq = 1.0;
  p.sigma1_sq = 2.0;
  p.d0 = p.d1 = 5.0;
  p.h = h;
  return p;
}

GaussianPair pair(std::vector<double> m0, std::vector<double> m1, double v0, double v1) {
  return GaussianPair{std::move(m0), std::move(m1), v0, v1, Channel::FP};
}

// KL(N(m0, v0 I) || N(m1, v1 I)) written out directly.
double kl(const GaussianPair& g, bool forward) {
  const double f = static_cast<double>(g.dim());
  const double vp = forward ? g.var0 : g.var1, vq = forward ? g.var1 : g.var0;
  return 0.5 * f * std::log(vq / vp) + 0.5 * f * vp / vq + 0.5 * g.squared_distance() / vq - 0.5 * f;
}

void check_vec(const std::vector<double>& a, const std::vector<double>& b, double eps = 1e-15) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(eps).scale(1.0));
}

}  // namespace

TEST_CASE("filtered parameters") {
  auto f1 = filtered_params(standard(1.0));
  check_vec(f1.lp.mean0, {-1.0, 0.0});
  check_vec(f1.lp.mean1, {0.0, 1.0});
  CHECK(f1.lp.var0 == doctest::Approx(1.0 / 5));
  CHECK(f1.lp.var1 == doctest::Approx(2.0 / 5));
  check_vec(f1.hp.mean0, {0.0, 0.0});
  check_vec(f1.hp.mean1, {0.0, 0.0});

  auto fh = filtered_params(standard(0.5));
  check_vec(fh.lp.mean0, {-0.5, 0.5});
  check_vec(fh.lp.mean1, {-0.5, 0.5});

  auto f0 = filtered_params(standard(0.0));
  CHECK(f0.lp.var0 == doctest::Approx(2.0 / 5).epsilon(1e-15));
  CHECK(f0.lp.var1 == doctest::Approx(1.0 / 5).epsilon(1e-15));
  CHECK(f0.hp.var0 == doctest::Approx(1.0 + 2.0 / 5).epsilon(1e-15));
  check_vec(f0.hp.mean0, {-1.0, -1.0});
  check_vec(f0.hp.mean1, {1.0, 1.0});
  CHECK(f0.fp.var1 == 2.0);

  auto bad = standard(1.2);
  CHECK_THROWS_AS(filtered_params(bad), Error);
}

TEST_CASE("bayes coefficients") {
  auto same = bayes_coefficients(pair({1.0, 2.0}, {1.0, 2.0}, 3.0, 3.0));
  CHECK(same.a == 0.0);
  check_vec(same.b, {0.0, 0.0});
  CHECK(same.c == 0.0);

  auto simple = bayes_coefficients(pair({0.0}, {2.0}, 1.0, 1.0));
  CHECK(simple.a == 0.0);
  check_vec(simple.b, {-2.0});
  CHECK(simple.c == 2.0);

  // a = (1/sigma1^2 - 1/sigma0^2) / 2 with sigma0^2 = 1, sigma1^2 = 2.
  auto fp = bayes_coefficients(filtered_params(standard()).fp);
  CHECK(fp.a == doctest::Approx(-0.25).epsilon(1e-15));
  check_vec(fp.b, {-1.0, -0.5});
  CHECK(fp.c == doctest::Approx(0.44314718055994531).epsilon(1e-14));

  // Prior enters c only.
  auto skew = bayes_coefficients(filtered_params(standard()).fp, 0.8);
  CHECK(skew.c - fp.c == doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("posterior") {
  auto same = bayes_coefficients(pair({1.0}, {1.0}, 2.0, 2.0));
  for (double x : {-5.0, 0.0, 3.0}) CHECK(posterior_eta(same, std::vector<double>{x}) == 0.5);
  auto far = bayes_coefficients(pair({0.0}, {10.0}, 1.0, 1.0));
  CHECK(posterior_eta(far, std::vector<double>{10.0}) > 0.99);
  CHECK(posterior_eta(far, std::vector<double>{5.0}) == doctest::Approx(0.5).epsilon(1e-15));
  BayesCoefficients huge{0.0, {1.0}, 0.0};
  CHECK(posterior_eta(huge, std::vector<double>{1e6}) == 0.0);
  CHECK(posterior_eta(huge, std::vector<double>{-1e6}) == 1.0);
}

TEST_CASE("pbe closed cases") {
  CHECK(pbe(pair({1.0, 1.0}, {1.0, 1.0}, 0.7, 0.7)) == 0.5);
  CHECK(pbe(pair({0.0}, {10.0}, 1e-4, 1e-4)) < 1e-6);
  // Equal variances: error is Phi(-d / (2 sigma)).
  CHECK(pbe(pair({0.0, 0.0}, {1.0, 1.0}, 1.0, 1.0)) == doctest::Approx(normal_cdf(-std::sqrt(2.0) / 2)).epsilon(1e-12));
  CHECK(pbe(pair({0.0}, {0.0}, 1.0, 1.0), 0.8) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("pbe on the standard model matches Monte Carlo") {
  const double expected_fp = 0.25547;
  for (double h : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    auto f = filtered_params(standard(h));
    for (Channel c : {Channel::FP, Channel::LP, Channel::HP}) {
      const auto mc = monte_carlo_bayes_error(f[c], 0.5, 300000, 7);
      CAPTURE(h);
      CAPTURE(to_string(c));
      CHECK(std::abs(pbe(f[c]) - mc.estimate) <= 0.003);
    }
  }
  CHECK(pbe(filtered_params(standard()).fp) == doctest::Approx(expected_fp).epsilon(2e-4));
}

TEST_CASE("pbe against Monte Carlo on randomized pairs") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> var(0.2, 3.0), prior(0.2, 0.8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t f = 1 + rng() % 8;
    GaussianPair g;
    for (std::size_t i = 0; i < f; ++i) {
      g.mean0.push_back(normal(rng));
      g.mean1.push_back(normal(rng));
    }
    g.var0 = var(rng);
    g.var1 = trial % 5 == 0 ? g.var0 : var(rng);
    const double p0 = trial % 2 ? 0.5 : prior(rng);
    const double value = pbe(g, p0);
    CHECK(value >= 0.0);
    CHECK(value <= std::max(p0, 1 - p0) + 1e-9);
    const auto mc = monte_carlo_bayes_error(g, p0, 200000, 1000 + trial);
    CAPTURE(trial);
    CHECK(std::abs(value - mc.estimate) <= 3 * mc.standard_error + 1e-6);
  }
}

TEST_CASE("monte carlo oracle") {
  auto same = monte_carlo_bayes_error(pair({0.0}, {0.0}, 1.0, 1.0), 0.5, 100000, 3);
  CHECK(std::abs(same.estimate - 0.5) <= 3 * same.standard_error);
  auto sep = monte_carlo_bayes_error(pair({0.0}, {10.0}, 1e-4, 1e-4), 0.5, 100000, 3);
  CHECK(sep.estimate == 0.0);
  auto g = filtered_params(standard(0.3)).hp;
  set_thread_count(1);
  auto a = monte_carlo_bayes_error(g, 0.4, 200000, 11);
  set_thread_count(4);
  auto b = monte_carlo_bayes_error(g, 0.4, 200000, 11);
  set_thread_count(1);
  CHECK(a.estimate == b.estimate);
}

TEST_CASE("jeffreys divergence and its parts") {
  auto z = d_ngj(pair({1.0, 2.0}, {1.0, 2.0}, 1.5, 1.5));
  CHECK(z.total == 0.0);
  CHECK(z.ennd == 0.0);
  CHECK(z.nvr == 0.0);
  auto s = d_ngj(pair({0.0}, {2.0}, 1.0, 1.0));
  CHECK(s.total == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(s.ennd == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(s.nvr == 0.0);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> var(0.1, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    GaussianPair g;
    const std::size_t f = 1 + rng() % 6;
    for (std::size_t i = 0; i < f; ++i) {
      g.mean0.push_back(normal(rng));
      g.mean1.push_back(normal(rng));
    }
    g.var0 = var(rng);
    g.var1 = var(rng);
    auto d = d_ngj(g);
    CHECK(d.total == doctest::Approx(d.ennd + d.nvr).epsilon(1e-12));
    CHECK(d.ennd <= 0.0);
    CHECK(d.nvr <= 0.0);
    CHECK(d.total == doctest::Approx(-0.5 * (kl(g, true) + kl(g, false))).epsilon(1e-12));
    CHECK(d_ngj_prior(g, 0.5) == doctest::Approx(d.total).epsilon(1e-12));
    const double p0 = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    CHECK(d_ngj_prior(g, p0) == doctest::Approx(-(p0 * kl(g, true) + (1 - p0) * kl(g, false))).epsilon(1e-12));
    auto parts = d_ngj_prior_parts(g, p0);
    CHECK(parts.total == doctest::Approx(parts.ennd + parts.nvr).epsilon(1e-12));
    const double hd = nshd(g);
    CHECK(hd >= -1.0);
    CHECK(hd <= 0.0);
  }
}

TEST_CASE("prior-weighted divergence on the standard model") {
  auto fp = filtered_params(standard()).fp;
  // -(5/6 ln 2 + 1/6 (2 - ln 2)) from the Gaussian KL formula.
  const double expected = -(4.0 / 6.0 * std::log(2.0) + 1.0 / 3.0);
  CHECK(d_ngj_prior(fp, 5.0 / 6.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(d_ngj(fp).total == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(d_ngj_prior(pair({3.0}, {3.0}, 2.0, 2.0), 0.2) == 0.0);
}

TEST_CASE("wasserstein and hellinger") {
  auto same = pair({0.5}, {0.5}, 2.0, 2.0);
  CHECK(nswd(same) == 0.0);
  CHECK(nshd(same) == 0.0);
  auto g = pair({0.0}, {2.0}, 1.0, 1.0);
  CHECK(nswd(g) == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(nshd(g) == doctest::Approx(-0.39346934028736658).epsilon(1e-14));
  // Unequal variances, one dimension: BC = sqrt(2 s0 s1 / (s0^2 + s1^2)).
  auto u = pair({0.0}, {0.0}, 1.0, 4.0);
  CHECK(nshd(u) == doctest::Approx(-1.0 + std::sqrt(4.0 / 5.0)).epsilon(1e-14));
  CHECK(nswd(u) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("mean distances across homophily") {
  auto p = standard();
  const double dx = filtered_params(p).fp.squared_distance();
  for (double h : linspace(0.0, 1.0, 101)) {
    p.h = h;
    auto f = filtered_params(p);
    CHECK(f.lp.squared_distance() == doctest::Approx((2 * h - 1) * (2 * h - 1) * dx).epsilon(1e-12).scale(1.0));
    CHECK(f.hp.squared_distance() == doctest::Approx(4 * (1 - h) * (1 - h) * dx).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("standard sweep shape") {
  auto r = sweep(standard(), default_h_grid());
  REQUIRE(r.h_grid.size() == 191);
  CHECK(r.h_grid.front() == 0.005);
  CHECK(r.h_grid.back() == doctest::Approx(0.955).epsilon(1e-15));
  const auto& lp = r.channels[1].pbe;
  const auto& hp = r.channels[2].pbe;
  const auto arg = std::max_element(lp.begin(), lp.end()) - lp.begin();
  CHECK(arg > 0);
  CHECK(arg < 190);
  for (std::size_t i = 1; i < hp.size(); ++i) CHECK(hp[i] >= hp[i - 1] - 1e-9);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 191; ++i) {
      const auto& ch = r.channels[c];
      CHECK(ch.d_ngj[i] == doctest::Approx(ch.ennd[i] + ch.nvr[i]).epsilon(1e-10));
      CHECK(ch.pbe[i] <= 0.5 + 1e-9);
    }
  // Contiguous bands LP, HP, FP, LP in that order.
  std::vector<Channel> bands;
  for (Channel c : r.regime)
    if (bands.empty() || bands.back() != c) bands.push_back(c);
  CHECK(bands == std::vector<Channel>{Channel::LP, Channel::HP, Channel::FP, Channel::LP});
}

TEST_CASE("regime at selected homophily levels") {
  auto r = sweep(standard(), {0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(r.regime == std::vector<Channel>{Channel::LP, Channel::HP, Channel::FP, Channel::LP, Channel::LP});
}

TEST_CASE("balanced model is symmetric in h") {
  CsbmhParams p;
  p.mu0 = {0.3, -0.4, 1.0};
  p.mu1 = {-0.2, 0.5, 0.1};
  p.sigma0_sq = p.sigma1_sq = 0.8;
  p.d0 = p.d1 = 3.0;
  auto grid = linspace(0.0, 1.0, 41);
  auto r = sweep(p, grid);
  const auto& lp = r.channels[1].pbe;
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(lp[i] == doctest::Approx(lp[grid.size() - 1 - i]).epsilon(1e-6).scale(1.0));
  CHECK(lp[20] == 0.5);
  CHECK(r.channels[1].d_ngj[20] == 0.0);
}

TEST_CASE("identical classes give neutral measures") {
  CsbmhParams p;
  p.mu0 = p.mu1 = {0.4, 0.4};
  p.sigma0_sq = p.sigma1_sq = 1.3;
  p.d0 = p.d1 = 4.0;
  auto r = sweep(p, {0.1, 0.6});
  for (const auto& ch : r.channels)
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(ch.pbe[i] == 0.5);
      CHECK(ch.d_ngj[i] == 0.0);
      CHECK(ch.nswd[i] == 0.0);
      CHECK(ch.nshd[i] == 0.0);
    }
}

TEST_CASE("class swap leaves pbe and prior divergence unchanged") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> var(0.3, 3.0), unit(0.1, 0.9);
  for (int trial = 0; trial < 30; ++trial) {
    CsbmhParams p;
    for (int i = 0; i < 3; ++i) {
      p.mu0.push_back(normal(rng));
      p.mu1.push_back(normal(rng));
    }
    p.sigma0_sq = var(rng);
    p.sigma1_sq = var(rng);
    p.d0 = 1 + 5 * unit(rng);
    p.d1 = 1 + 5 * unit(rng);
    p.h = unit(rng);
    p.prior_p0 = unit(rng);
    CsbmhParams q = p;
    std::swap(q.mu0, q.mu1);
    std::swap(q.sigma0_sq, q.sigma1_sq);
    std::swap(q.d0, q.d1);
    q.prior_p0 = 1 - p.prior_p0;
    auto a = filtered_params(p), b = filtered_params(q);
    for (Channel c : {Channel::FP, Channel::LP, Channel::HP}) {
      CHECK(pbe(a[c], p.prior_p0) == doctest::Approx(pbe(b[c], q.prior_p0)).epsilon(3e-6).scale(1.0));
      CHECK(d_ngj_prior(a[c], p.prior_p0) == doctest::Approx(d_ngj_prior(b[c], q.prior_p0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("bound helpers") {
  CHECK(theorem2_bound(1.5, 2.0, 1.5 * std::sqrt(3.0), 3) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(theorem2_bound(3.0, 1e12, 1.0, 2) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(theorem2_bound(3.0, 1.0, 0.0, 2) == doctest::Approx(4.936392163467182e-4).epsilon(1e-14));
  CHECK_THROWS_AS(theorem2_bound(1.0, 0.0, 0.0, 1), Error);
  CHECK(variance_x(-1.0, 2.0) == 9.0);
  CHECK(variance_lp(2.0, 4.0, 0.0, 1.0) == doctest::Approx(0.375));
  CHECK(variance_hp(2.0, 4.0, 0.0, 2.0) == doctest::Approx(4 * 1.375));
  std::vector<double> mv{1, 1}, mtv{0, 0}, mj{0, 0}, mtj{0, 1};
  CHECK(distance_hp(mv, mtv, mj, mtj) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("sweep serialisation") {
  auto r = sweep(standard(), {0.0, 1.0}, parse_measures("pbe,nswd"));
  auto csv = to_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.rfind("h,fp_pbe,", 0) == 0);
  CHECK(csv.find("dngj") == std::string::npos);
  CHECK(csv.find("lp_nswd") != std::string::npos);
  auto j = to_json(r);
  CHECK(j["regime"].size() == 2);
  CHECK_THROWS_AS(parse_measures("pbe,bogus"), Error);
}

TEST_CASE("params from json") {
  auto j = nlohmann::json::parse(R"({"mu0":[-1,0],"mu1":[0,1],"sigma0_sq":1,"sigma1_sq":2,"d0":5,"d1":5,
                                     "h_grid":{"start":0,"stop":1,"num":3}})");
  std::vector<double> grid;
  auto p = params_from_json(j, &grid);
  CHECK(p.prior_p0 == 0.5);
  CHECK(grid == std::vector<double>{0.0, 0.5, 1.0});
  auto bad = nlohmann::json::parse(R"({"mu0":[-1,0],"mu1":[0],"sigma0_sq":1,"sigma1_sq":2,"d0":5,"d1":5})");
  CHECK_THROWS_AS(params_from_json(bad), Error);
}
