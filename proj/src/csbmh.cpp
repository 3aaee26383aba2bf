#include "homoscope/csbmh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "homoscope/error.hpp"
#include "homoscope/gchi2.hpp"
#include "homoscope/parallel.hpp"

namespace homoscope {

namespace {

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate(const CsbmhParams& p) {
  if (p.mu0.empty() || p.mu0.size() != p.mu1.size())
    throw Error(ErrorKind::Validation, "csbmh: mu0 and mu1 must be non-empty with equal dimension");
  if (!(p.sigma0_sq > 0.0) || !(p.sigma1_sq > 0.0)) throw Error(ErrorKind::Validation, "csbmh: variances must be positive");
  if (!(p.d0 > 0.0) || !(p.d1 > 0.0)) throw Error(ErrorKind::Validation, "csbmh: degrees must be positive");
  if (!(p.h >= 0.0 && p.h <= 1.0)) throw Error(ErrorKind::Validation, "csbmh: h must lie in [0, 1]");
  if (!(p.prior_p0 > 0.0 && p.prior_p0 < 1.0)) throw Error(ErrorKind::Validation, "csbmh: prior_p0 must lie in (0, 1)");
}

const char* to_string(Channel c) {
  switch (c) {
    case Channel::FP: return "FP";
    case Channel::LP: return "LP";
    case Channel::HP: return "HP";
  }
  return "?";
}

double GaussianPair::squared_distance() const {
  double s = 0.0;
  for (std::size_t i = 0; i < mean0.size(); ++i) s += (mean0[i] - mean1[i]) * (mean0[i] - mean1[i]);
  return s;
}

FilteredParams filtered_params(const CsbmhParams& p) {
  validate(p);
  const double h = p.h;
  const std::size_t f = p.dim();
  FilteredParams out;
  out.fp = {p.mu0, p.mu1, p.sigma0_sq, p.sigma1_sq, Channel::FP};

  out.lp.label = Channel::LP;
  out.hp.label = Channel::HP;
  out.lp.mean0.resize(f);
  out.lp.mean1.resize(f);
  out.hp.mean0.resize(f);
  out.hp.mean1.resize(f);
  for (std::size_t i = 0; i < f; ++i) {
    const double diff = p.mu0[i] - p.mu1[i];
    out.lp.mean0[i] = h * diff + p.mu1[i];
    out.lp.mean1[i] = h * -diff + p.mu0[i];
    out.hp.mean0[i] = (1.0 - h) * diff;
    out.hp.mean1[i] = (1.0 - h) * -diff;
  }
  out.lp.var0 = (h * (p.sigma0_sq - p.sigma1_sq) + p.sigma1_sq) / p.d0;
  out.lp.var1 = (h * (p.sigma1_sq - p.sigma0_sq) + p.sigma0_sq) / p.d1;
  out.hp.var0 = p.sigma0_sq + out.lp.var0;
  out.hp.var1 = p.sigma1_sq + out.lp.var1;
  return out;
}

BayesCoefficients bayes_coefficients(const GaussianPair& pair, double prior_p0) {
  const double s0 = pair.var0, s1 = pair.var1;
  const auto f = static_cast<double>(pair.dim());
  BayesCoefficients k;
  k.a = 0.5 * (1.0 / s1 - 1.0 / s0);
  k.b.resize(pair.dim());
  for (std::size_t i = 0; i < pair.dim(); ++i) k.b[i] = pair.mean0[i] / s0 - pair.mean1[i] / s1;
  // ln((p0/p1) sigma1^F / sigma0^F) with sigma = sqrt(var).
  k.c = dot(pair.mean1, pair.mean1) / (2.0 * s1) - dot(pair.mean0, pair.mean0) / (2.0 * s0) +
        std::log(prior_p0 / (1.0 - prior_p0)) + 0.5 * f * std::log(s1 / s0);
  return k;
}

double bayes_q(const BayesCoefficients& coef, std::span<const double> x) {
  return coef.a * dot(x, x) + dot(coef.b, x) + coef.c;
}

double posterior_eta(const BayesCoefficients& coef, std::span<const double> x) {
  const double q = bayes_q(coef, x);
  if (q > 700.0) return 0.0;
  if (q < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(q));
}

double pbe(const GaussianPair& pair, double prior_p0) {
  const double p0 = prior_p0, p1 = 1.0 - prior_p0;
  const auto coef = bayes_coefficients(pair, prior_p0);
  const double sd0 = std::sqrt(pair.var0), sd1 = std::sqrt(pair.var1);
  const double b_norm = std::sqrt(dot(coef.b, coef.b));

  // Quadratic term negligible next to the linear one: Q is Gaussian per class.
  const bool linear = std::abs(coef.a) < 1e-12 || (b_norm > 0.0 && std::abs(coef.a) * std::max(sd0, sd1) / b_norm < 1e-8);
  if (linear) {
    if (b_norm == 0.0) return coef.c <= 0.0 ? p0 : p1;
    const double q0 = normal_cdf((-coef.c - dot(coef.b, pair.mean0)) / (sd0 * b_norm));
    const double q1 = normal_cdf((-coef.c - dot(coef.b, pair.mean1)) / (sd1 * b_norm));
    return p0 * q0 + p1 * (1.0 - q1);
  }

  // Q = a ||x + b/(2a)||^2 + xi, so per class Q - xi = a var_c chi2(F, lambda_c).
  const double xi = coef.c - dot(coef.b, coef.b) / (4.0 * coef.a);
  auto class_cdf = [&](const std::vector<double>& mean, double var) {
    const double sd = std::sqrt(var);
    double lambda = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double s = mean[i] / sd + coef.b[i] / (2.0 * coef.a * sd);
      lambda += s * s;
    }
    GChi2Spec spec;
    spec.terms.push_back({coef.a * var, static_cast<int>(mean.size()), lambda});
    return gchi2_cdf(spec, -xi);
  };
  return p0 * class_cdf(pair.mean0, pair.var0) + p1 * (1.0 - class_cdf(pair.mean1, pair.var1));
}

Divergence d_ngj(const GaussianPair& pair) {
  const double d2 = pair.squared_distance();
  const auto f = static_cast<double>(pair.dim());
  const double rho2 = pair.var0 / pair.var1;
  Divergence out;
  out.ennd = -d2 * (1.0 / (4.0 * pair.var1) + 1.0 / (4.0 * pair.var0));
  out.nvr = -(f / 4.0) * (rho2 + 1.0 / rho2 - 2.0);
  out.total = out.ennd + out.nvr;
  return out;
}

Divergence d_ngj_prior_parts(const GaussianPair& pair, double prior_p0) {
  const double p0 = prior_p0, p1 = 1.0 - prior_p0;
  const double d2 = pair.squared_distance();
  const auto f = static_cast<double>(pair.dim());
  const double rho2 = pair.var0 / pair.var1;
  Divergence out;
  out.ennd = -d2 * (p0 / (2.0 * pair.var1) + p1 / (2.0 * pair.var0));
  out.nvr = f * 0.5 * std::log(rho2) * (p0 - p1) - (f / 2.0) * (p0 * rho2 + p1 / rho2 - 1.0);
  out.total = out.ennd + out.nvr;
  return out;
}

double d_ngj_prior(const GaussianPair& pair, double prior_p0) { return d_ngj_prior_parts(pair, prior_p0).total; }

double nswd(const GaussianPair& pair) {
  const double ds = std::sqrt(pair.var0) - std::sqrt(pair.var1);
  return -pair.squared_distance() - static_cast<double>(pair.dim()) * ds * ds;
}

double nshd(const GaussianPair& pair) {
  // Bhattacharyya coefficient of two isotropic Gaussians:
  // (2 s0 s1 / (s0^2 + s1^2))^{F/2} exp(-d^2 / (4 (s0^2 + s1^2))).
  // sqrt(v0 v1) is exact for v0 = v1, so identical classes give exactly 0.
  const double sum = pair.var0 + pair.var1;
  const double ratio = 2.0 * std::sqrt(pair.var0 * pair.var1) / sum;
  return std::expm1(0.5 * static_cast<double>(pair.dim()) * std::log(ratio) - pair.squared_distance() / (4.0 * sum));
}

MeasureSet parse_measures(const std::string& list) {
  MeasureSet m{false, false, false, false};
  std::stringstream ss(list);
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    if (item == "pbe") m.pbe = true;
    else if (item == "dngj") m.dngj = true;
    else if (item == "nswd") m.nswd = true;
    else if (item == "nshd") m.nshd = true;
    else throw Error(ErrorKind::Parse, "unknown measure '" + item + "' (expected pbe, dngj, nswd, nshd)");
    any = true;
  }
  if (!any) throw Error(ErrorKind::Parse, "empty measure list");
  return m;
}

std::vector<double> linspace(double start, double stop, std::size_t num) {
  std::vector<double> g(num);
  if (num == 1) {
    g[0] = start;
    return g;
  }
  for (std::size_t i = 0; i < num; ++i) g[i] = start + static_cast<double>(i) * (stop - start) / static_cast<double>(num - 1);
  g.back() = stop;
  return g;
}

std::vector<double> default_h_grid() { return linspace(0.005, 0.955, 191); }

SweepResult sweep(const CsbmhParams& p, const std::vector<double>& h_grid, const MeasureSet& measures) {
  validate(p);
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (!(h_grid[i] >= 0.0 && h_grid[i] <= 1.0)) throw Error(ErrorKind::Validation, "sweep: grid values must lie in [0, 1]");
    if (i > 0 && !(h_grid[i] > h_grid[i - 1])) throw Error(ErrorKind::Validation, "sweep: grid must be strictly increasing");
  }
  const std::size_t n = h_grid.size();
  SweepResult r;
  r.h_grid = h_grid;
  r.measures = measures;
  r.regime.assign(n, Channel::FP);
  for (auto& ch : r.channels) {
    for (auto* v : {&ch.pbe, &ch.d_ngj, &ch.ennd, &ch.nvr, &ch.nswd, &ch.nshd}) v->assign(n, 0.0);
  }

  parallel_for(n, [&](std::size_t i) {
    CsbmhParams q = p;
    q.h = h_grid[i];
    const auto fp = filtered_params(q);
    double best = 0.0;
    for (int c = 0; c < 3; ++c) {
      const auto& pair = fp[static_cast<Channel>(c)];
      auto& ch = r.channels[c];
      ch.pbe[i] = pbe(pair, p.prior_p0);
      const auto div = d_ngj_prior_parts(pair, p.prior_p0);
      ch.d_ngj[i] = div.total;
      ch.ennd[i] = div.ennd;
      ch.nvr[i] = div.nvr;
      ch.nswd[i] = nswd(pair);
      ch.nshd[i] = nshd(pair);
      if (c == 0 || ch.pbe[i] < best) {
        best = ch.pbe[i];
        r.regime[i] = static_cast<Channel>(c);
      }
    }
  });
  return r;
}

std::string to_csv(const SweepResult& r) {
  static const char* prefix[3] = {"fp", "lp", "hp"};
  std::string out = "h";
  for (const char* pre : prefix) {
    const std::string p(pre);
    if (r.measures.pbe) out += "," + p + "_pbe";
    if (r.measures.dngj) out += "," + p + "_dngj," + p + "_ennd," + p + "_nvr";
    if (r.measures.nswd) out += "," + p + "_nswd";
    if (r.measures.nshd) out += "," + p + "_nshd";
  }
  out += ",regime\n";
  for (std::size_t i = 0; i < r.h_grid.size(); ++i) {
    out += fmt(r.h_grid[i]);
    for (const auto& ch : r.channels) {
      if (r.measures.pbe) out += "," + fmt(ch.pbe[i]);
      if (r.measures.dngj) out += "," + fmt(ch.d_ngj[i]) + "," + fmt(ch.ennd[i]) + "," + fmt(ch.nvr[i]);
      if (r.measures.nswd) out += "," + fmt(ch.nswd[i]);
      if (r.measures.nshd) out += "," + fmt(ch.nshd[i]);
    }
    out += ",";
    out += to_string(r.regime[i]);
    out += "\n";
  }
  return out;
}

nlohmann::ordered_json to_json(const SweepResult& r) {
  static const char* names[3] = {"FP", "LP", "HP"};
  nlohmann::ordered_json j;
  j["h"] = r.h_grid;
  for (int c = 0; c < 3; ++c) {
    const auto& ch = r.channels[c];
    nlohmann::ordered_json cj;
    if (r.measures.pbe) cj["pbe"] = ch.pbe;
    if (r.measures.dngj) {
      cj["dngj"] = ch.d_ngj;
      cj["ennd"] = ch.ennd;
      cj["nvr"] = ch.nvr;
    }
    if (r.measures.nswd) cj["nswd"] = ch.nswd;
    if (r.measures.nshd) cj["nshd"] = ch.nshd;
    j[names[c]] = cj;
  }
  std::vector<std::string> regime;
  for (auto c : r.regime) regime.emplace_back(to_string(c));
  j["regime"] = regime;
  return j;
}

CsbmhParams params_from_json(const nlohmann::json& j, std::vector<double>* h_grid) {
  CsbmhParams p;
  try {
    if (!j.is_object()) throw Error(ErrorKind::Parse, "sweep config must be a JSON object");
    for (const char* key : {"mu0", "mu1", "sigma0_sq", "sigma1_sq", "d0", "d1"})
      if (!j.contains(key)) throw Error(ErrorKind::Parse, std::string("sweep config is missing '") + key + "'");
    p.mu0 = j.at("mu0").get<std::vector<double>>();
    p.mu1 = j.at("mu1").get<std::vector<double>>();
    p.sigma0_sq = j.at("sigma0_sq").get<double>();
    p.sigma1_sq = j.at("sigma1_sq").get<double>();
    p.d0 = j.at("d0").get<double>();
    p.d1 = j.at("d1").get<double>();
    if (j.contains("prior_p0")) p.prior_p0 = j.at("prior_p0").get<double>();
    if (h_grid) {
      if (!j.contains("h_grid")) {
        *h_grid = default_h_grid();
      } else if (j.at("h_grid").is_array()) {
        *h_grid = j.at("h_grid").get<std::vector<double>>();
      } else {
        const auto& g = j.at("h_grid");
        const auto num = g.at("num").get<std::size_t>();
        if (num == 0) throw Error(ErrorKind::Validation, "h_grid.num must be positive");
        *h_grid = linspace(g.at("start").get<double>(), g.at("stop").get<double>(), num);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("sweep config: ") + e.what());
  }
  p.h = 0.5;
  validate(p);
  return p;
}

double theorem2_bound(double distance, double variance, double t, int dim) {
  if (!(variance > 0.0)) throw Error(ErrorKind::Validation, "theorem2_bound: variance must be positive");
  if (dim < 1) throw Error(ErrorKind::Validation, "theorem2_bound: dimension must be positive");
  const double f = static_cast<double>(dim);
  const double gap = distance - t / std::sqrt(f);
  return 2.0 * f * std::exp(-gap * gap / variance);
}

double variance_x(double lo, double hi) { return (hi - lo) * (hi - lo); }

double variance_lp(double d_v, double d_j, double lo, double hi) {
  return (1.0 / (2.0 * d_v) + 1.0 / (2.0 * d_j)) * variance_x(lo, hi);
}

double variance_hp(double d_v, double d_j, double lo, double hi) {
  return (1.0 + 1.0 / (2.0 * d_v) + 1.0 / (2.0 * d_j)) * variance_x(lo, hi);
}

double distance_hp(std::span<const double> mu_v, std::span<const double> mu_tilde_v, std::span<const double> mu_j,
                   std::span<const double> mu_tilde_j) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu_v.size(); ++i) {
    const double d = (mu_v[i] - mu_tilde_v[i]) - (mu_j[i] - mu_tilde_j[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

McEstimate monte_carlo_bayes_error(const GaussianPair& pair, double prior_p0, std::uint64_t n_draws, std::uint64_t seed) {
  if (n_draws == 0) throw Error(ErrorKind::Validation, "monte_carlo_bayes_error: n_draws must be positive");
  constexpr std::uint64_t kChunk = 1 << 16;
  const std::size_t n_chunks = (n_draws + kChunk - 1) / kChunk;
  const auto coef = bayes_coefficients(pair, prior_p0);
  const double sd0 = std::sqrt(pair.var0), sd1 = std::sqrt(pair.var1);
  std::vector<std::uint64_t> errors(n_chunks, 0);
  parallel_for(n_chunks, [&](std::size_t k) {
    std::mt19937_64 rng(mix_seed(seed, k));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(pair.dim());
    const std::uint64_t count = std::min<std::uint64_t>(kChunk, n_draws - k * kChunk);
    std::uint64_t wrong = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
      const bool class1 = unif(rng) >= prior_p0;
      const auto& mean = class1 ? pair.mean1 : pair.mean0;
      const double sd = class1 ? sd1 : sd0;
      for (std::size_t d = 0; d < x.size(); ++d) x[d] = mean[d] + sd * normal(rng);
      const bool predict1 = bayes_q(coef, x) <= 0.0;
      wrong += predict1 != class1 ? 1 : 0;
    }
    errors[k] = wrong;
  });
  std::uint64_t total = 0;
  for (auto e : errors) total += e;
  const double n = static_cast<double>(n_draws);
  const double p = static_cast<double>(total) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

}  // namespace homoscope
