#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "homoscope/graph.hpp"
#include "homoscope/stats.hpp"

namespace homoscope {

// ReLU NNGP kernel (arc-cosine, degree 1). Zero-norm inputs give 0.
double nngp_kernel(std::span<const double> u, std::span<const double> v);
// Cosine similarity. Zero-norm inputs give 0.
double linear_kernel(std::span<const double> u, std::span<const double> v);

// Solves (K_train + ridge I) alpha = Z_train with a Cholesky factorisation and
// returns argmax_c (K_test_train alpha)_c per test row, lowest class on ties.
// Throws Error(Numerical) when the factorisation fails.
std::vector<ClassId> kernel_regression_predict(const Eigen::MatrixXd& k_train, const Eigen::MatrixXd& k_test_train,
                                               const Eigen::MatrixXd& z_train, double ridge);

// Per-class diagonal Gaussians with variance floor 1e-9 * max feature
// variance and empirical priors. Throws Error(Validation) when a class id
// below max(y_train) has no training row.
std::vector<ClassId> gnb_fit_predict(const Eigen::MatrixXd& x_train, std::span<const ClassId> y_train,
                                     const Eigen::MatrixXd& x_test);

enum class Classifier { KrNngp, KrLinear, Gnb };
const char* to_string(Classifier c);
// Accepts kr-nngp, kr-linear, gnb. Throws Error(Parse) otherwise.
Classifier parse_classifier(const std::string& name);

struct CpmConfig {
  std::size_t n_sample = 500;
  double train_fraction = 0.6;
  std::size_t repeats = 100;
  std::uint64_t seed = 0;
  Classifier classifier = Classifier::KrNngp;
  AggregationKind aggregation{};
  // Relative to the mean diagonal of the training Gram matrix.
  double ridge = 1e-8;
};

enum class Verdict { GraphAware, GraphAgnostic, NoDecision };
const char* to_string(Verdict v);

struct CpmReport {
  std::vector<double> acc_x, acc_h;
  double t_stat = 0.0;
  double dof = 0.0;
  // p of "Acc(H) < Acc(X)". Near 1 means the aggregated features win; this
  // is also the reported score.
  double p_value = 0.0;
  double paper_score = 0.0;
  // p of "Acc(H) > Acc(X)".
  double p_value_greater = 0.0;
  Verdict verdict_nt05 = Verdict::NoDecision;
  Verdict verdict_sst005 = Verdict::NoDecision;
  std::size_t n_sample_used = 0;
  std::vector<std::string> warnings;
};

Verdict verdict_nt05(double score);
Verdict verdict_sst005(double score);

CpmReport cpm_pvalue(const Graph& g, const FeatureMatrix& x, const CpmConfig& cfg);

struct PropConfig {
  std::size_t pairs_per_node = 300;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

struct PropReport {
  // n_significant / (N - n_excluded).
  double prop = 0.0;
  std::size_t n_significant = 0;
  // Neither direction significant; kept in the denominator.
  std::size_t n_marginal = 0;
  // Fewer than two intra- or inter-class partners.
  std::size_t n_excluded = 0;
  // NaN for excluded nodes.
  std::vector<double> per_node_pvalues;
};

PropReport prop_statistic(const FeatureMatrix& emb, std::span<const ClassId> labels, const PropConfig& cfg = {});
TTestResult prop_pvalue(std::span<const double> props_a, std::span<const double> props_b);

nlohmann::ordered_json to_json(const CpmReport& r);
nlohmann::ordered_json to_json(const PropReport& r, bool include_per_node = false);

}  // namespace homoscope
