#include "homoscope/cpm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "homoscope/error.hpp"
#include "homoscope/parallel.hpp"

namespace homoscope {

namespace {

constexpr double kPi = std::numbers::pi;

double nngp_from_dot(double dot, double nu, double nv) {
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double c = std::clamp(dot / (nu * nv), -1.0, 1.0);
  return (dot * (kPi - std::acos(c)) + nu * nv * std::sqrt(std::max(0.0, 1.0 - c * c))) / (2.0 * kPi);
}

double cosine_from_dot(double dot, double nu, double nv) {
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

Eigen::MatrixXd gather_rows(const FeatureMatrix& x, std::span<const NodeId> rows) {
  Eigen::MatrixXd m(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto r = x.row(rows[i]);
    for (std::size_t j = 0; j < x.cols(); ++j) m(i, j) = r[j];
  }
  return m;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Classifier kind) {
  Eigen::MatrixXd d = a * b.transpose();
  const Eigen::VectorXd na = a.rowwise().norm(), nb = b.rowwise().norm();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      d(i, j) = kind == Classifier::KrNngp ? nngp_from_dot(d(i, j), na(i), nb(j)) : cosine_from_dot(d(i, j), na(i), nb(j));
    }
  }
  return d;
}

// Distinct uniform draws from [0, n); sorted so the result does not depend
// on container iteration order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  if (k >= n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  std::set<std::size_t> chosen;
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  out.assign(chosen.begin(), chosen.end());
  return out;
}

}  // namespace

double nngp_kernel(std::span<const double> u, std::span<const double> v) {
  return nngp_from_dot(dot(u, v), std::sqrt(dot(u, u)), std::sqrt(dot(v, v)));
}

double linear_kernel(std::span<const double> u, std::span<const double> v) {
  return cosine_from_dot(dot(u, v), std::sqrt(dot(u, u)), std::sqrt(dot(v, v)));
}

std::vector<ClassId> kernel_regression_predict(const Eigen::MatrixXd& k_train, const Eigen::MatrixXd& k_test_train,
                                               const Eigen::MatrixXd& z_train, double ridge) {
  if (k_train.rows() != k_train.cols() || k_test_train.cols() != k_train.rows() || z_train.rows() != k_train.rows())
    throw Error(ErrorKind::Validation, "kernel regression: matrix dimensions do not agree");
  Eigen::MatrixXd a = k_train;
  a.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Numerical, "kernel regression: training Gram matrix is singular to working precision; increase the ridge");
  const Eigen::MatrixXd alpha = llt.solve(z_train);
  const Eigen::MatrixXd f = k_test_train * alpha;
  std::vector<ClassId> out(f.rows(), 0);
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < f.cols(); ++c)
      if (f(i, c) > f(i, best)) best = c;
    out[i] = static_cast<ClassId>(best);
  }
  return out;
}

std::vector<ClassId> gnb_fit_predict(const Eigen::MatrixXd& x_train, std::span<const ClassId> y_train,
                                     const Eigen::MatrixXd& x_test) {
  const auto n = static_cast<std::size_t>(x_train.rows());
  const auto f = static_cast<std::size_t>(x_train.cols());
  if (n == 0 || y_train.size() != n) throw Error(ErrorKind::Validation, "gnb: training rows and labels disagree");
  const std::size_t c = *std::max_element(y_train.begin(), y_train.end()) + 1;

  std::vector<double> count(c, 0.0);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(c, f), vars = Eigen::MatrixXd::Zero(c, f);
  for (std::size_t i = 0; i < n; ++i) {
    count[y_train[i]] += 1.0;
    means.row(y_train[i]) += x_train.row(i);
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (count[k] == 0.0) throw Error(ErrorKind::Validation, "gnb: class " + std::to_string(k) + " has no training rows");
    means.row(k) /= count[k];
  }
  for (std::size_t i = 0; i < n; ++i) vars.row(y_train[i]) += (x_train.row(i) - means.row(y_train[i])).array().square().matrix();
  for (std::size_t k = 0; k < c; ++k) vars.row(k) /= count[k];

  const Eigen::RowVectorXd overall_mean = x_train.colwise().mean();
  const double max_var = ((x_train.rowwise() - overall_mean).array().square().colwise().sum() / static_cast<double>(n)).maxCoeff();
  const double floor = max_var > 0.0 ? 1e-9 * max_var : 1e-9;
  vars.array() += floor;

  Eigen::VectorXd base(c);
  for (std::size_t k = 0; k < c; ++k)
    base(k) = std::log(count[k] / static_cast<double>(n)) - 0.5 * (2.0 * kPi * vars.row(k).array()).log().sum();

  std::vector<ClassId> out(x_test.rows(), 0);
  for (Eigen::Index i = 0; i < x_test.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) {
      const double s = base(k) - 0.5 * ((x_test.row(i) - means.row(k)).array().square() / vars.row(k).array()).sum();
      if (s > best) {
        best = s;
        out[i] = static_cast<ClassId>(k);
      }
    }
  }
  return out;
}

const char* to_string(Classifier c) {
  switch (c) {
    case Classifier::KrNngp: return "kr-nngp";
    case Classifier::KrLinear: return "kr-linear";
    case Classifier::Gnb: return "gnb";
  }
  return "?";
}

Classifier parse_classifier(const std::string& name) {
  if (name == "kr-nngp") return Classifier::KrNngp;
  if (name == "kr-linear") return Classifier::KrLinear;
  if (name == "gnb") return Classifier::Gnb;
  throw Error(ErrorKind::Parse, "unknown classifier '" + name + "' (expected kr-nngp, kr-linear or gnb)");
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::GraphAware: return "graph-aware";
    case Verdict::GraphAgnostic: return "graph-agnostic";
    case Verdict::NoDecision: return "none";
  }
  return "?";
}

Verdict verdict_nt05(double score) {
  if (score > 0.5) return Verdict::GraphAware;
  if (score < 0.5) return Verdict::GraphAgnostic;
  return Verdict::NoDecision;
}

Verdict verdict_sst005(double score) {
  if (score > 0.95) return Verdict::GraphAware;
  if (score < 0.05) return Verdict::GraphAgnostic;
  return Verdict::NoDecision;
}

CpmReport cpm_pvalue(const Graph& g, const FeatureMatrix& x, const CpmConfig& cfg) {
  const std::size_t n_nodes = g.num_nodes();
  if (x.rows() != n_nodes) throw Error(ErrorKind::Validation, "cpm: feature rows do not match node count");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    throw Error(ErrorKind::Validation, "cpm: train fraction must lie in (0, 1)");
  if (cfg.repeats < 2) throw Error(ErrorKind::Validation, "cpm: at least two repeats are needed");
  if (!(cfg.ridge >= 0.0)) throw Error(ErrorKind::Validation, "cpm: ridge must be non-negative");

  CpmReport rep;
  std::size_t n = cfg.n_sample;
  if (n > n_nodes) {
    rep.warnings.push_back("sample size " + std::to_string(n) + " exceeds the " + std::to_string(n_nodes) +
                           " labeled nodes; using all of them");
    n = n_nodes;
  }
  const auto n_train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(cfg.train_fraction * n)), 1, n - 1);
  if (n < 2) throw Error(ErrorKind::Validation, "cpm: need at least two labeled nodes");
  rep.n_sample_used = n;

  const FeatureMatrix h = aggregate_low_pass(g, x, cfg.aggregation);
  rep.acc_x.assign(cfg.repeats, 0.0);
  rep.acc_h.assign(cfg.repeats, 0.0);

  parallel_for(cfg.repeats, [&](std::size_t round) {
    try {
      std::mt19937_64 rng(mix_seed(cfg.seed, round));
      std::vector<NodeId> idx(n_nodes);
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(i, n_nodes - 1)(rng);
        std::swap(idx[i], idx[j]);
      }
      const std::span<const NodeId> train(idx.data(), n_train), test(idx.data() + n_train, n - n_train);

      // Classes are those seen in this round's training split.
      std::vector<ClassId> seen;
      for (NodeId v : train) seen.push_back(g.label(v));
      std::sort(seen.begin(), seen.end());
      seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
      auto compact = [&](ClassId c) -> long {
        auto it = std::lower_bound(seen.begin(), seen.end(), c);
        return it != seen.end() && *it == c ? it - seen.begin() : -1;
      };
      std::vector<ClassId> y_train(n_train);
      for (std::size_t i = 0; i < n_train; ++i) y_train[i] = static_cast<ClassId>(compact(g.label(train[i])));

      auto accuracy = [&](const FeatureMatrix& feats) {
        const Eigen::MatrixXd a = gather_rows(feats, train), b = gather_rows(feats, test);
        std::vector<ClassId> pred;
        if (cfg.classifier == Classifier::Gnb) {
          pred = gnb_fit_predict(a, y_train, b);
        } else {
          const Eigen::MatrixXd k_train = gram(a, a, cfg.classifier);
          const Eigen::MatrixXd k_test = gram(b, a, cfg.classifier);
          Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n_train, seen.size());
          for (std::size_t i = 0; i < n_train; ++i) z(i, y_train[i]) = 1.0;
          const double mean_diag = k_train.diagonal().mean();
          pred = kernel_regression_predict(k_train, k_test, z, cfg.ridge * (mean_diag > 0.0 ? mean_diag : 1.0));
        }
        std::size_t correct = 0;
        for (std::size_t i = 0; i < test.size(); ++i) correct += compact(g.label(test[i])) == static_cast<long>(pred[i]) ? 1 : 0;
        return static_cast<double>(correct) / static_cast<double>(test.size());
      };
      rep.acc_x[round] = accuracy(x);
      rep.acc_h[round] = accuracy(h);
    } catch (const Error& e) {
      throw Error(e.kind(), "cpm round " + std::to_string(round) + ": " + e.what());
    }
  });

  const auto t = welch_ttest(rep.acc_h, rep.acc_x, Alternative::Less);
  rep.t_stat = t.t_stat;
  rep.dof = t.dof;
  rep.p_value = t.p_value;
  rep.paper_score = t.p_value;
  rep.p_value_greater = welch_ttest(rep.acc_h, rep.acc_x, Alternative::Greater).p_value;
  rep.verdict_nt05 = verdict_nt05(rep.paper_score);
  rep.verdict_sst005 = verdict_sst005(rep.paper_score);
  return rep;
}

PropReport prop_statistic(const FeatureMatrix& emb, std::span<const ClassId> labels, const PropConfig& cfg) {
  const std::size_t n = emb.rows();
  if (labels.size() != n) throw Error(ErrorKind::Validation, "prop: label count does not match embedding rows");
  if (n == 0) throw Error(ErrorKind::Validation, "prop: empty embedding");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(ErrorKind::Validation, "prop: alpha must lie in (0, 1)");
  const std::size_t c = *std::max_element(labels.begin(), labels.end()) + 1;

  // Nodes in class-major order; class k occupies [start[k], start[k + 1]).
  std::vector<std::size_t> start(c + 1, 0);
  for (ClassId l : labels) ++start[l + 1];
  std::size_t present = 0;
  for (std::size_t k = 0; k < c; ++k) present += start[k + 1] > 0 ? 1 : 0;
  if (present < 2) throw Error(ErrorKind::UndefinedMetric, "prop: needs at least two classes");
  for (std::size_t k = 0; k < c; ++k) start[k + 1] += start[k];
  std::vector<NodeId> order(n);
  std::vector<std::size_t> pos(n);
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (NodeId v = 0; v < n; ++v) {
      pos[v] = fill[labels[v]]++;
      order[pos[v]] = v;
    }
  }

  auto distance = [&](NodeId u, NodeId v) {
    auto a = emb.row(u), b = emb.row(v);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };

  PropReport rep;
  rep.per_node_pvalues.assign(n, std::numeric_limits<double>::quiet_NaN());
  // 0 excluded, 1 significant, 2 marginal, 3 significant the other way.
  std::vector<int> status(n, 0);
  parallel_for(n, [&](std::size_t vi) {
    const auto v = static_cast<NodeId>(vi);
    const ClassId k = labels[v];
    const std::size_t lo = start[k], hi = start[k + 1];
    const std::size_t n_intra = hi - lo - 1, n_inter = n - (hi - lo);
    if (n_intra < 2 || n_inter < 2) return;
    std::mt19937_64 rng(mix_seed(cfg.seed, v));
    std::vector<double> intra, inter;
    for (std::size_t i : sample_indices(n_intra, cfg.pairs_per_node, rng)) {
      const std::size_t p = lo + i;
      intra.push_back(distance(v, order[p >= pos[v] ? p + 1 : p]));
    }
    for (std::size_t i : sample_indices(n_inter, cfg.pairs_per_node, rng)) {
      inter.push_back(distance(v, order[i < lo ? i : i + (hi - lo)]));
    }
    const auto t = welch_ttest(intra, inter, Alternative::Less);
    rep.per_node_pvalues[v] = t.p_value;
    if (t.p_value < cfg.alpha) status[v] = 1;
    else if (welch_ttest(intra, inter, Alternative::Greater).p_value < cfg.alpha) status[v] = 3;
    else status[v] = 2;
  });

  for (int s : status) {
    rep.n_excluded += s == 0 ? 1 : 0;
    rep.n_significant += s == 1 ? 1 : 0;
    rep.n_marginal += s == 2 ? 1 : 0;
  }
  const std::size_t denom = n - rep.n_excluded;
  if (denom == 0) throw Error(ErrorKind::UndefinedMetric, "prop: every node lacks enough intra- or inter-class partners");
  rep.prop = static_cast<double>(rep.n_significant) / static_cast<double>(denom);
  return rep;
}

TTestResult prop_pvalue(std::span<const double> props_a, std::span<const double> props_b) {
  return welch_ttest(props_a, props_b, Alternative::Less);
}

nlohmann::ordered_json to_json(const CpmReport& r) {
  nlohmann::ordered_json j;
  j["acc_x"] = r.acc_x;
  j["acc_h"] = r.acc_h;
  j["t_stat"] = r.t_stat;
  j["dof"] = r.dof;
  j["p_value"] = r.p_value;
  j["p_value_alternative"] = "acc_h < acc_x";
  j["paper_score"] = r.paper_score;
  j["p_value_greater"] = r.p_value_greater;
  j["verdict_nt05"] = to_string(r.verdict_nt05);
  j["verdict_sst005"] = to_string(r.verdict_sst005);
  j["n_sample_used"] = r.n_sample_used;
  j["warnings"] = r.warnings;
  return j;
}

nlohmann::ordered_json to_json(const PropReport& r, bool include_per_node) {
  nlohmann::ordered_json j;
  j["prop"] = r.prop;
  j["n_significant"] = r.n_significant;
  j["n_marginal"] = r.n_marginal;
  j["n_excluded"] = r.n_excluded;
  if (include_per_node) {
    nlohmann::ordered_json p = nlohmann::ordered_json::array();
    for (double v : r.per_node_pvalues) p.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v));
    j["per_node_pvalues"] = p;
  }
  return j;
}

}  // namespace homoscope
