#include "homoscope/homophily.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "homoscope/error.hpp"
#include "homoscope/parallel.hpp"

namespace homoscope {

namespace {

void require_edges(const Graph& g, const char* metric) {
  if (g.num_arcs() == 0) throw Error(ErrorKind::UndefinedMetric, std::string(metric) + " is undefined on an edgeless graph");
}

// Degree mass per class (D_c) and the class-pair incidence counts, both
// over CSR entries, i.e. normalised later by 2|E| for undirected graphs.
struct IncidenceCounts {
  std::vector<double> class_degree;
  std::vector<double> pair;  // C x C, row = label of source
  double total = 0.0;
};

IncidenceCounts incidence_counts(const Graph& g) {
  const std::size_t c = g.num_classes();
  IncidenceCounts out{std::vector<double>(c, 0.0), std::vector<double>(c * c, 0.0), 0.0};
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    const ClassId cu = g.label(u);
    for (NodeId v : g.neighbors(u)) {
      out.pair[cu * c + g.label(v)] += 1.0;
      out.class_degree[cu] += 1.0;
    }
  }
  out.total = static_cast<double>(g.num_arcs());
  return out;
}

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

double h_edge(const Graph& g) {
  require_edges(g, "h_edge");
  std::size_t same = 0;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) same += g.label(u) == g.label(v) ? 1 : 0;
  }
  // Undirected edges appear twice in CSR, both in numerator and denominator.
  return static_cast<double>(same) / static_cast<double>(g.num_arcs());
}

NodeHomophily h_node(const Graph& g) {
  NodeHomophily out;
  out.per_node.assign(g.num_nodes(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t counted = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    auto nb = g.neighbors(v);
    if (nb.empty()) {
      ++out.excluded_zero_degree;
      continue;
    }
    std::size_t same = 0;
    for (NodeId u : nb) same += g.label(u) == g.label(v) ? 1 : 0;
    out.per_node[v] = static_cast<double>(same) / static_cast<double>(nb.size());
    sum += out.per_node[v];
    ++counted;
  }
  if (counted == 0) throw Error(ErrorKind::UndefinedMetric, "h_node is undefined: every node has degree zero");
  out.value = sum / static_cast<double>(counted);
  return out;
}

double h_class(const Graph& g) {
  const std::size_t c = g.num_classes();
  if (c < 2) throw Error(ErrorKind::UndefinedMetric, "h_class needs at least two classes");
  std::vector<double> same(c, 0.0), degree(c, 0.0), size(c, 0.0);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const ClassId k = g.label(v);
    size[k] += 1.0;
    for (NodeId u : g.neighbors(v)) {
      degree[k] += 1.0;
      same[k] += g.label(u) == k ? 1.0 : 0.0;
    }
  }
  const double n = static_cast<double>(g.num_nodes());
  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    if (degree[k] == 0.0) continue;
    sum += std::max(0.0, same[k] / degree[k] - size[k] / n);
  }
  return sum / static_cast<double>(c - 1);
}

double h_ge(const Graph& g, const FeatureMatrix& x) {
  require_edges(g, "h_ge");
  if (x.rows() != g.num_nodes()) throw Error(ErrorKind::Validation, "feature rows do not match node count");
  std::vector<double> norm(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    double s = 0.0;
    for (double f : x.row(v)) s += f * f;
    norm[v] = std::sqrt(s);
  }
  std::vector<double> row_sum(g.num_nodes(), 0.0);
  parallel_for(g.num_nodes(), [&](std::size_t i) {
    const auto u = static_cast<NodeId>(i);
    auto xu = x.row(u);
    double acc = 0.0;
    for (NodeId v : g.neighbors(u)) {
      if (norm[u] == 0.0 || norm[v] == 0.0) continue;
      auto xv = x.row(v);
      double dot = 0.0;
      for (std::size_t k = 0; k < xu.size(); ++k) dot += xu[k] * xv[k];
      acc += dot / (norm[u] * norm[v]);
    }
    row_sum[u] = acc;
  });
  double total = 0.0;
  for (double s : row_sum) total += s;
  return total / static_cast<double>(g.num_arcs());
}

double h_agg(const Graph& g, const AggHomophilyOptions& options) {
  const std::size_t n = g.num_nodes();
  const std::size_t c = g.num_classes();
  if (n == 0) throw Error(ErrorKind::UndefinedMetric, "h_agg is undefined on an empty graph");
  // M = A_hat Z; S = M M^T is never formed. Row sums of S over a class
  // follow from the per-class column totals of M.
  const FeatureMatrix m = aggregate_low_pass(g, one_hot_labels(g), options.kind);
  std::vector<double> class_total(c * c, 0.0);  // class_total[k*c + j] = sum_{u in k} M[u, j]
  std::vector<double> class_size(c, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    const ClassId k = g.label(u);
    class_size[k] += 1.0;
    for (std::size_t j = 0; j < c; ++j) class_total[k * c + j] += m(u, j);
  }
  std::vector<double> all_total(c, 0.0);
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t j = 0; j < c; ++j) all_total[j] += class_total[k * c + j];

  std::size_t satisfied = 0;
  for (NodeId v = 0; v < n; ++v) {
    const ClassId k = g.label(v);
    auto mv = m.row(v);
    double same_sum = 0.0, all_sum = 0.0, self = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      same_sum += mv[j] * class_total[k * c + j];
      all_sum += mv[j] * all_total[j];
      self += mv[j] * mv[j];
    }
    double other_sum = all_sum - same_sum;
    double same_count = class_size[k];
    if (!options.include_self) {
      same_sum -= self;
      same_count -= 1.0;
    }
    const double other_count = static_cast<double>(n) - class_size[k];
    if (same_count <= 0.0 || other_count <= 0.0) {
      ++satisfied;
      continue;
    }
    // Compare means without dividing: same/ns >= other/no. Uniform rows of M
    // give exact ties that rounding would otherwise split at random.
    const double lhs = same_sum * other_count, rhs = other_sum * same_count;
    if (lhs >= rhs - 1e-12 * (std::abs(lhs) + std::abs(rhs))) ++satisfied;
  }
  return static_cast<double>(satisfied) / static_cast<double>(n);
}

double h_adj(const Graph& g) {
  const double he = h_edge(g);
  const auto counts = incidence_counts(g);
  double sq = 0.0;
  for (double d : counts.class_degree) sq += (d / counts.total) * (d / counts.total);
  const double denom = 1.0 - sq;
  if (!(denom > 0.0)) throw Error(ErrorKind::UndefinedMetric, "h_adj is undefined: all edge mass lies in one class");
  return (he - sq) / denom;
}

double label_informativeness(const Graph& g) {
  require_edges(g, "label_informativeness");
  const auto counts = incidence_counts(g);
  double marginal = 0.0;
  for (double d : counts.class_degree) marginal += xlogx(d / counts.total);
  if (marginal == 0.0) throw Error(ErrorKind::UndefinedMetric, "label_informativeness is undefined: all edge mass lies in one class");
  double joint = 0.0;
  for (double p : counts.pair) joint += xlogx(p / counts.total);
  return 2.0 - joint / marginal;
}

HomophilyReport homophily_report(const Graph& g, const FeatureMatrix* x, const AggHomophilyOptions& agg) {
  HomophilyReport r;
  r.h_edge = h_edge(g);
  auto node = h_node(g);
  r.h_node = node.value;
  r.per_node_homophily = std::move(node.per_node);
  r.h_class = h_class(g);
  r.h_agg = h_agg(g, agg);
  if (x) r.h_ge = h_ge(g, *x);
  r.h_adj = h_adj(g);
  r.li = label_informativeness(g);
  return r;
}

nlohmann::ordered_json to_json(const HomophilyReport& r) {
  nlohmann::ordered_json j;
  j["h_edge"] = r.h_edge;
  j["h_node"] = r.h_node;
  j["h_class"] = r.h_class;
  j["h_agg"] = r.h_agg;
  if (r.h_ge) j["h_ge"] = *r.h_ge;
  j["h_adj"] = r.h_adj;
  j["li"] = r.li;
  return j;
}

std::string to_csv(const HomophilyReport& r) {
  std::string header = "h_edge,h_node,h_class,h_agg";
  std::vector<double> values{r.h_edge, r.h_node, r.h_class, r.h_agg};
  if (r.h_ge) {
    header += ",h_ge";
    values.push_back(*r.h_ge);
  }
  header += ",h_adj,li\n";
  values.push_back(r.h_adj);
  values.push_back(r.li);
  std::string row;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    row += (i ? "," : "") + std::string(buf);
  }
  return header + row + "\n";
}

}  // namespace homoscope
