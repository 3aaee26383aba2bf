#include "homoscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>

#include "homoscope/error.hpp"

namespace homoscope {

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw Error(ErrorKind::Validation, "student_t_cdf: dof must be positive");
  if (std::isnan(t)) return t;
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  // Lower tail mass beyond |t|.
  const double tail = 0.5 * boost::math::ibeta(0.5 * dof, 0.5, dof / (dof + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

namespace {

double p_from_t(double t, double dof, Alternative alt) {
  switch (alt) {
    case Alternative::Less: return student_t_cdf(t, dof);
    case Alternative::Greater: return student_t_cdf(-t, dof);
    case Alternative::TwoSided: return std::min(1.0, 2.0 * student_t_cdf(-std::abs(t), dof));
  }
  return 1.0;
}

}  // namespace

TTestResult welch_ttest(std::span<const double> a, std::span<const double> b, Alternative alt, bool pooled) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorKind::Validation, "t-test needs at least two values per sample");
  const double ma = mean(a), mb = mean(b);
  const double va = sample_variance(a), vb = sample_variance(b);

  TTestResult r;
  r.alternative = alt;
  if (va == 0.0 && vb == 0.0) {
    r.dof = na + nb - 2.0;
    if (ma == mb) {
      r.t_stat = 0.0;
    } else {
      r.t_stat = ma < mb ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    }
    r.p_value = p_from_t(r.t_stat, r.dof, alt);
    return r;
  }

  double se2 = 0.0;
  if (pooled) {
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    se2 = sp2 * (1.0 / na + 1.0 / nb);
    r.dof = na + nb - 2.0;
  } else {
    const double qa = va / na, qb = vb / nb;
    se2 = qa + qb;
    r.dof = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  }
  r.t_stat = (ma - mb) / std::sqrt(se2);
  r.p_value = p_from_t(r.t_stat, r.dof, alt);
  return r;
}

const char* to_string(Alternative alt) {
  switch (alt) {
    case Alternative::Less: return "less";
    case Alternative::Greater: return "greater";
    case Alternative::TwoSided: return "two-sided";
  }
  return "?";
}

}  // namespace homoscope
