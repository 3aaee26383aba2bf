#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace homoscope {

struct CsbmhParams {
  std::vector<double> mu0, mu1;
  double sigma0_sq = 1.0;
  double sigma1_sq = 1.0;
  // Expected degrees; non-integer values are allowed.
  double d0 = 1.0;
  double d1 = 1.0;
  double h = 0.5;
  double prior_p0 = 0.5;

  std::size_t dim() const { return mu0.size(); }
};

// Throws Error(Validation) on mismatched dimensions, non-positive variances
// or degrees, h outside [0,1] or a prior outside (0,1).
void validate(const CsbmhParams& p);

enum class Channel { FP, LP, HP };
const char* to_string(Channel c);

struct GaussianPair {
  std::vector<double> mean0, mean1;
  double var0 = 1.0;
  double var1 = 1.0;
  Channel label = Channel::FP;

  std::size_t dim() const { return mean0.size(); }
  double squared_distance() const;
};

struct FilteredParams {
  GaussianPair fp, lp, hp;
  const GaussianPair& operator[](Channel c) const { return c == Channel::FP ? fp : c == Channel::LP ? lp : hp; }
};

FilteredParams filtered_params(const CsbmhParams& p);

// Q(x) = a x'x + b'x + c; the optimal classifier predicts class 1 when Q <= 0.
struct BayesCoefficients {
  double a = 0.0;
  std::vector<double> b;
  double c = 0.0;
};

BayesCoefficients bayes_coefficients(const GaussianPair& pair, double prior_p0 = 0.5);
double bayes_q(const BayesCoefficients& coef, std::span<const double> x);
// P(z = 1 | x) = 1 / (1 + exp(Q(x))).
double posterior_eta(const BayesCoefficients& coef, std::span<const double> x);

// Bayes error of the optimal classifier on the two-Gaussian model.
double pbe(const GaussianPair& pair, double prior_p0 = 0.5);

struct Divergence {
  double total = 0.0;
  double ennd = 0.0;
  double nvr = 0.0;
};

// Balanced-prior negative Jeffreys divergence and its two parts.
Divergence d_ngj(const GaussianPair& pair);
// -(p0 KL(P0||P1) + p1 KL(P1||P0)), split the same way: ennd holds the mean
// distance term, nvr the variance term.
Divergence d_ngj_prior_parts(const GaussianPair& pair, double prior_p0);
double d_ngj_prior(const GaussianPair& pair, double prior_p0);

double nswd(const GaussianPair& pair);
double nshd(const GaussianPair& pair);

struct MeasureSet {
  bool pbe = true;
  bool dngj = true;
  bool nswd = true;
  bool nshd = true;
};
// Comma-separated subset of pbe,dngj,nswd,nshd. Throws Error(Parse) on an unknown name.
MeasureSet parse_measures(const std::string& list);

struct ChannelCurves {
  std::vector<double> pbe, d_ngj, ennd, nvr, nswd, nshd;
};

struct SweepResult {
  std::vector<double> h_grid;
  std::array<ChannelCurves, 3> channels;  // indexed by Channel
  std::vector<Channel> regime;
  MeasureSet measures;
};

std::vector<double> linspace(double start, double stop, std::size_t num);
// 191 points on [0.005, 0.955].
std::vector<double> default_h_grid();

// Regime is the channel of lowest PBE, ties resolved FP, then LP, then HP.
// PBE is always computed since the regime depends on it.
SweepResult sweep(const CsbmhParams& p, const std::vector<double>& h_grid, const MeasureSet& measures = {});

std::string to_csv(const SweepResult& r);
nlohmann::ordered_json to_json(const SweepResult& r);

// Reads mu0, mu1, sigma0_sq, sigma1_sq, d0, d1 and optional prior_p0 and
// h_grid (array, or object with start/stop/num). Missing h_grid yields the
// default grid.
CsbmhParams params_from_json(const nlohmann::json& j, std::vector<double>* h_grid = nullptr);

// 2F exp(-(D - t/sqrt(F))^2 / V), unclamped.
double theorem2_bound(double distance, double variance, double t, int dim);
double variance_x(double lo, double hi);
double variance_lp(double d_v, double d_j, double lo, double hi);
double variance_hp(double d_v, double d_j, double lo, double hi);
// Relative center distance ||mu_v - mu~_v - (mu_j - mu~_j)||.
double distance_hp(std::span<const double> mu_v, std::span<const double> mu_tilde_v, std::span<const double> mu_j,
                   std::span<const double> mu_tilde_j);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Sampled Bayes error; deterministic in seed and independent of thread count.
McEstimate monte_carlo_bayes_error(const GaussianPair& pair, double prior_p0, std::uint64_t n_draws, std::uint64_t seed);

}  // namespace homoscope
