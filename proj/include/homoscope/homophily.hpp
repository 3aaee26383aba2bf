#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "homoscope/graph.hpp"

namespace homoscope {

// Local homophily of each node plus their mean. Zero-degree nodes carry NaN
// in per_node and are left out of the mean.
struct NodeHomophily {
  double value = 0.0;
  std::vector<double> per_node;
  std::size_t excluded_zero_degree = 0;
};

struct AggHomophilyOptions {
  AggregationKind kind{};
  // Whether u = v belongs to the same-label multiset of node v.
  bool include_self = true;
};

struct HomophilyReport {
  double h_edge = 0.0;
  double h_node = 0.0;
  double h_class = 0.0;
  double h_agg = 0.0;
  std::optional<double> h_ge;
  double h_adj = 0.0;
  double li = 0.0;
  std::vector<double> per_node_homophily;
};

// Same-label fraction of edges. Throws Error(UndefinedMetric) on an edgeless graph.
double h_edge(const Graph& g);
NodeHomophily h_node(const Graph& g);
// A class with zero total degree contributes 0 to the sum.
double h_class(const Graph& g);
// Mean edge cosine similarity; zero-norm rows have cosine 0.
double h_ge(const Graph& g, const FeatureMatrix& x);
double h_agg(const Graph& g, const AggHomophilyOptions& options = {});
double h_adj(const Graph& g);
double label_informativeness(const Graph& g);

HomophilyReport homophily_report(const Graph& g, const FeatureMatrix* x, const AggHomophilyOptions& agg = {});

nlohmann::ordered_json to_json(const HomophilyReport& r);
std::string to_csv(const HomophilyReport& r);

}  // namespace homoscope
