#include "homoscope/gchi2.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "homoscope/error.hpp"

namespace homoscope {

namespace {

constexpr double kPi = std::numbers::pi;
// Poisson mixtures wider than this are inverted from the characteristic
// function instead of summed term by term.
constexpr double kSeriesLambdaLimit = 1e6;
constexpr std::size_t kMaxEvaluations = 20'000'000;

void validate(const GChi2Spec& spec) {
  if (!std::isfinite(spec.gauss_mean) || !std::isfinite(spec.offset) || !std::isfinite(spec.gauss_sd) ||
      spec.gauss_sd < 0.0)
    throw Error(ErrorKind::Validation, "gchi2: Gaussian part must be finite with sd >= 0");
  for (const auto& t : spec.terms) {
    if (t.dof < 1) throw Error(ErrorKind::Validation, "gchi2: term dof must be >= 1");
    if (!(t.noncentrality >= 0.0) || !std::isfinite(t.noncentrality))
      throw Error(ErrorKind::Validation, "gchi2: noncentrality must be finite and >= 0");
    if (t.weight == 0.0 || !std::isfinite(t.weight)) throw Error(ErrorKind::Validation, "gchi2: weights must be finite and nonzero");
  }
  if (spec.terms.empty() && spec.gauss_sd == 0.0) throw Error(ErrorKind::Validation, "gchi2: spec has no random part");
}

// Integrand of F(x) = 1/2 - (1/pi) int_0^inf |phi(t)| sin(theta(t)) / t dt.
struct ImhofIntegrand {
  const GChi2Spec& spec;
  double beta;  // gauss_mean + offset - x

  double operator()(double t) const {
    double log_mod = -0.5 * spec.gauss_sd * spec.gauss_sd * t * t;
    double theta = beta * t;
    for (const auto& term : spec.terms) {
      const double u = 2.0 * term.weight * t;
      const double q = 1.0 + u * u;
      log_mod -= 0.25 * term.dof * std::log1p(u * u) + term.noncentrality * 0.5 * u * u / q;
      theta += 0.5 * term.dof * std::atan(u) + term.noncentrality * 0.5 * u / q;
    }
    return std::exp(log_mod) * std::sin(theta) / t;
  }

  // Upper bound on |theta'(s)| for s >= t.
  double phase_rate(double t) const {
    double r = std::abs(beta);
    for (const auto& term : spec.terms) {
      const double u = 2.0 * term.weight * t;
      r += std::abs(term.weight) * (term.dof + term.noncentrality) / (1.0 + u * u);
    }
    return r;
  }
};

// log of (1/pi) int_U^inf |phi(t)|/t dt upper bound.
double log_truncation_bound(const GChi2Spec& spec, double u_max) {
  double k_total = 0.0;
  double log_c = -0.5 * spec.gauss_sd * spec.gauss_sd * u_max * u_max;
  for (const auto& term : spec.terms) {
    const double u = 2.0 * term.weight * u_max;
    k_total += term.dof;
    log_c += -0.5 * term.dof * std::log(2.0 * std::abs(term.weight)) - term.noncentrality * 0.5 * u * u / (1.0 + u * u);
  }
  if (k_total == 0.0) {
    // Pure Gaussian envelope: int_U^inf e^{-s^2 t^2/2}/t dt <= e^{-s^2U^2/2}/(s^2 U^2).
    const double s2u2 = spec.gauss_sd * spec.gauss_sd * u_max * u_max;
    return -0.5 * s2u2 - std::log(s2u2) - std::log(kPi);
  }
  return log_c + std::log(2.0 / k_total) - 0.5 * k_total * std::log(u_max) - std::log(kPi);
}

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

double invert(const GChi2Spec& spec, double x, double tol) {
  const ImhofIntegrand f{spec, spec.gauss_mean + spec.offset - x};

  // Truncation point: half the budget goes to the tail.
  const double log_tail_budget = std::log(0.5 * tol);
  double u_max = 1.0;
  double w_max = 0.0;
  for (const auto& t : spec.terms) w_max = std::max(w_max, std::abs(t.weight));
  if (w_max > 0.0) u_max = 1.0 / w_max;
  while (log_truncation_bound(spec, u_max) > log_tail_budget) {
    u_max *= 2.0;
    if (u_max > 1e15) throw AccuracyError("gchi2: characteristic function decays too slowly to truncate",
                                          std::exp(log_truncation_bound(spec, u_max)));
  }
  const double tail = std::exp(log_truncation_bound(spec, u_max));

  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  std::size_t evaluations = 0;
  auto integrate = [&](double a, double b) {
    double err = 0.0;
    const double v = GK::integrate(f, a, b, 0, 0.0, &err);
    evaluations += 15;
    return Segment{a, b, v, err};
  };

  // Segments follow the local oscillation and grow geometrically where the
  // phase is slow.
  std::priority_queue<Segment> heap;
  double total = 0.0, total_err = 0.0;
  double a = 0.0;
  const double first = std::min(u_max, 0.5 / std::max(f.phase_rate(0.0), 1e-300));
  while (a < u_max) {
    const double width = std::min(kPi / std::max(f.phase_rate(a), 1e-300), std::max(a, first));
    const double b = std::min(u_max, a + width);
    Segment s = integrate(a, b);
    total += s.value;
    total_err += s.error;
    heap.push(s);
    a = b;
    if (evaluations > kMaxEvaluations)
      throw AccuracyError("gchi2: quadrature evaluation budget exhausted", tail + total_err / kPi);
  }

  const double quad_budget = 0.5 * tol * kPi;
  while (total_err > quad_budget) {
    Segment s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b))
      throw AccuracyError("gchi2: quadrature cannot subdivide further", tail + total_err / kPi);
    Segment l = integrate(s.a, mid), r = integrate(mid, s.b);
    total += l.value + r.value - s.value;
    total_err += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
    if (evaluations > kMaxEvaluations)
      throw AccuracyError("gchi2: quadrature evaluation budget exhausted", tail + total_err / kPi);
  }
  return std::clamp(0.5 - total / kPi, 0.0, 1.0);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double chi2_cdf(double dof, double x) {
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * dof, 0.5 * x);
}

namespace {

// chi2(k, lambda) = (Z + sqrt(lambda))^2 + R^2 with R ~ chi(k - 1). Conditioning
// on R leaves a normal probability, integrated over the chi density.
double large_lambda_cdf(int dof, double lambda, double x) {
  const double root = std::sqrt(lambda);
  auto given = [&](double rest) {
    if (!(rest > 0.0)) return 0.0;
    const double r = std::sqrt(rest);
    return normal_cdf(r - root) - normal_cdf(-r - root);
  };
  if (dof == 1) return std::clamp(given(x), 0.0, 1.0);
  const double k = dof - 1.0;
  const double log_norm = (1.0 - 0.5 * k) * std::numbers::ln2 - std::lgamma(0.5 * k);
  auto integrand = [&](double u) {
    if (u <= 0.0) return k == 1.0 ? std::exp(log_norm) * given(x) : 0.0;
    return std::exp(log_norm + (k - 1.0) * std::log(u) - 0.5 * u * u) * given(x - u * u);
  };
  const double upper = std::min(std::sqrt(x), std::sqrt(k) + 14.0);
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 20, 1e-13);
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace

double noncentral_chi2_cdf(int dof, double lambda, double x) {
  if (dof < 1 || !(lambda >= 0.0)) throw Error(ErrorKind::Validation, "noncentral_chi2_cdf: need dof >= 1 and lambda >= 0");
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (lambda == 0.0) return chi2_cdf(dof, x);
  if (lambda > kSeriesLambdaLimit) return large_lambda_cdf(dof, lambda, x);

  // Poisson(lambda/2) mixture of central chi2(dof + 2j), summed outward from
  // the mode until the unvisited Poisson mass is below 1e-12.
  const double mu = 0.5 * lambda;
  const double half_x = 0.5 * x;
  const auto mode = static_cast<long>(std::floor(mu));
  auto poisson = [&](long j) { return std::exp(-mu + j * std::log(mu) - std::lgamma(j + 1.0)); };
  auto central = [&](long j) { return boost::math::gamma_p(0.5 * dof + j, half_x); };

  double weight_mass = poisson(mode);
  double sum = weight_mass * central(mode);
  long lo = mode - 1, hi = mode + 1;
  double w_lo = lo >= 0 ? poisson(lo) : 0.0;
  double w_hi = poisson(hi);
  while (1.0 - weight_mass > 1e-12 && std::max(w_lo, w_hi) > 1e-20) {
    if (lo >= 0 && w_lo >= w_hi) {
      sum += w_lo * central(lo);
      weight_mass += w_lo;
      w_lo = lo > 0 ? w_lo * lo / mu : 0.0;
      --lo;
    } else {
      if (w_hi == 0.0) break;
      sum += w_hi * central(hi);
      weight_mass += w_hi;
      ++hi;
      w_hi *= mu / hi;
    }
  }
  return std::clamp(sum, 0.0, 1.0);
}

double gchi2_cdf(const GChi2Spec& spec, double x, double tol) {
  validate(spec);
  if (std::isnan(x)) throw Error(ErrorKind::Validation, "gchi2: x is NaN");
  const double s = spec.gauss_sd;

  bool negligible = !spec.terms.empty();
  for (const auto& t : spec.terms) negligible = negligible && std::abs(t.weight) < 1e-12;
  if (spec.terms.empty() || negligible) {
    // Moment-matched Gaussian; exact when there are no terms.
    double mean = spec.gauss_mean + spec.offset, var = s * s;
    for (const auto& t : spec.terms) {
      mean += t.weight * (t.dof + t.noncentrality);
      var += 2.0 * t.weight * t.weight * (t.dof + 2.0 * t.noncentrality);
    }
    if (var == 0.0) return x >= mean ? 1.0 : 0.0;
    return normal_cdf((x - mean) / std::sqrt(var));
  }

  if (s == 0.0) {
    if (spec.terms.size() == 1) {
      const auto& t = spec.terms.front();
      const double y = (x - spec.offset) / t.weight;
      return t.weight > 0.0 ? noncentral_chi2_cdf(t.dof, t.noncentrality, y)
                            : 1.0 - noncentral_chi2_cdf(t.dof, t.noncentrality, y);
    }
    const bool all_pos = std::all_of(spec.terms.begin(), spec.terms.end(), [](auto& t) { return t.weight > 0.0; });
    const bool all_neg = std::all_of(spec.terms.begin(), spec.terms.end(), [](auto& t) { return t.weight < 0.0; });
    if (all_pos && x <= spec.offset) return 0.0;
    if (all_neg && x >= spec.offset) return 1.0;
  }
  return invert(spec, x, tol);
}

}  // namespace homoscope
