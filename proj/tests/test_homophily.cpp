#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "homoscope/error.hpp"
#include "homoscope/homophily.hpp"
#include "naive_homophily.hpp"

using namespace homoscope;

namespace {

using naive::Dense;
using naive::Edges;
using naive::random_graph;

Graph relabel(const Graph& g, const std::vector<NodeId>& perm, const std::vector<ClassId>& class_perm) {
  Edges e;
  for (auto [u, v] : g.edge_list()) e.emplace_back(perm[u], perm[v]);
  std::vector<ClassId> labels(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) labels[perm[v]] = class_perm[g.label(v)];
  return Graph::from_edges(g.num_nodes(), e, labels, false);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("small hand examples") {
  Edges tri{{0, 1}, {1, 2}, {0, 2}};
  CHECK(h_edge(Graph::from_edges(3, tri, {0, 0, 0}, false)) == 1.0);

  Edges cycle{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  CHECK(h_edge(Graph::from_edges(4, cycle, {0, 1, 0, 1}, false)) == 0.0);

  Edges star{{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  CHECK(h_node(Graph::from_edges(5, star, {0, 0, 0, 0, 0}, false)).value == 1.0);
  // Every leaf sees only the differently labelled centre.
  CHECK(h_node(Graph::from_edges(5, star, {0, 1, 1, 1, 1}, false)).value == 0.0);

  Edges two_tri{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
  auto g = Graph::from_edges(6, two_tri, {0, 0, 0, 1, 1, 1}, false);
  CHECK(h_class(g) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(h_agg(g) == 1.0);
  CHECK(h_adj(g) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(label_informativeness(g) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("h_class clamps negative terms") {
  Edges cycle{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  CHECK(h_class(Graph::from_edges(4, cycle, {0, 1, 0, 1}, false)) == 0.0);
}

TEST_CASE("h_ge on identical and orthogonal features") {
  Edges cycle{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  auto g = Graph::from_edges(4, cycle, {0, 1, 0, 1}, false);
  FeatureMatrix same(4, 2, 1.0 / std::sqrt(2.0));
  CHECK(h_ge(g, same) == doctest::Approx(1.0).epsilon(1e-15));
  FeatureMatrix orth(4, 2, std::vector<double>{1, 0, 0, 1, 1, 0, 0, 1});
  CHECK(h_ge(g, orth) == 0.0);
  FeatureMatrix zero(4, 2, 0.0);
  CHECK(h_ge(g, zero) == 0.0);
}

TEST_CASE("zero-degree nodes are excluded from h_node") {
  Edges e{{0, 1}};
  auto r = h_node(Graph::from_edges(4, e, {0, 0, 1, 1}, false));
  CHECK(r.value == 1.0);
  CHECK(r.excluded_zero_degree == 2);
  CHECK(std::isnan(r.per_node[3]));
}

TEST_CASE("undefined metrics") {
  Edges none;
  auto empty = Graph::from_edges(3, none, {0, 1, 0}, false);
  CHECK(kind_of([&] { h_edge(empty); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([&] { h_node(empty); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([&] { label_informativeness(empty); }) == ErrorKind::UndefinedMetric);
  Edges tri{{0, 1}, {1, 2}, {0, 2}};
  auto one = Graph::from_edges(3, tri, {0, 0, 0}, false);
  CHECK(kind_of([&] { h_class(one); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([&] { h_adj(one); }) == ErrorKind::UndefinedMetric);
  CHECK(kind_of([&] { label_informativeness(one); }) == ErrorKind::UndefinedMetric);
}

TEST_CASE("streaming metrics equal dense definitions on random graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 5 + rng() % 46, c = 2 + rng() % 4;
    auto g = random_graph(rng, n, c, std::uniform_real_distribution<double>(0.02, 0.4)(rng));
    Dense d(g);
    FeatureMatrix x(n, 3);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 3; ++j) x(i, j) = std::normal_distribution<double>()(rng);
    CHECK(h_edge(g) == doctest::Approx(d.h_edge()).epsilon(1e-12));
    CHECK(h_node(g).value == doctest::Approx(d.h_node()).epsilon(1e-12));
    CHECK(h_class(g) == doctest::Approx(d.h_class()).epsilon(1e-12));
    CHECK(h_ge(g, x) == doctest::Approx(d.h_ge(x)).epsilon(1e-12));
    CHECK(h_agg(g) == d.h_agg(true));
    CHECK(h_agg(g, {{}, false}) == d.h_agg(false));
    CHECK(h_adj(g) == doctest::Approx(d.h_adj()).epsilon(1e-12));
    CHECK(label_informativeness(g) == doctest::Approx(d.li()).epsilon(1e-12));
  }
}

TEST_CASE("metrics are invariant under node and class relabelling") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 8 + rng() % 40, c = 2 + rng() % 3;
    auto g = random_graph(rng, n, c, 0.15);
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<ClassId> cp(c);
    std::iota(cp.begin(), cp.end(), 0);
    std::shuffle(cp.begin(), cp.end(), rng);
    auto h = relabel(g, perm, cp);
    CHECK(h_edge(h) == doctest::Approx(h_edge(g)).epsilon(1e-12));
    CHECK(h_node(h).value == doctest::Approx(h_node(g).value).epsilon(1e-12));
    CHECK(h_class(h) == doctest::Approx(h_class(g)).epsilon(1e-12));
    CHECK(h_agg(h) == h_agg(g));
    CHECK(h_adj(h) == doctest::Approx(h_adj(g)).epsilon(1e-12));
    CHECK(label_informativeness(h) == doctest::Approx(label_informativeness(g)).epsilon(1e-12));
  }
}

TEST_CASE("fully homophilous graphs give h_adj = li = 1") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 2 + rng() % 3;
    std::vector<ClassId> labels;
    Edges e;
    NodeId next = 0;
    for (std::size_t k = 0; k < c; ++k) {
      const std::size_t size = 2 + rng() % 8;
      for (std::size_t i = 0; i < size; ++i) labels.push_back(k);
      for (std::size_t i = 0; i + 1 < size; ++i) e.emplace_back(next + i, next + i + 1);
      for (int extra = 0; extra < 3; ++extra) {
        NodeId u = next + rng() % size, v = next + rng() % size;
        if (u != v) e.emplace_back(u, v);
      }
      next += size;
    }
    auto g = Graph::from_edges(labels.size(), e, labels, false);
    REQUIRE(h_edge(g) == 1.0);
    CHECK(h_adj(g) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(label_informativeness(g) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h_agg(g) == 1.0);
  }
}

TEST_CASE("bounded metrics stay in [0, 1]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = random_graph(rng, 5 + rng() % 30, 2 + rng() % 4, 0.2);
    for (double v : {h_edge(g), h_node(g).value, h_class(g), h_agg(g)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(h_adj(g) <= 1.0);
    CHECK(std::isfinite(label_informativeness(g)));
  }
}

TEST_CASE("report serialisation uses fixed keys") {
  Edges two_tri{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}};
  auto g = Graph::from_edges(6, two_tri, {0, 0, 0, 1, 1, 1}, false);
  auto r = homophily_report(g, nullptr);
  auto j = to_json(r);
  std::vector<std::string> keys;
  for (auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"h_edge", "h_node", "h_class", "h_agg", "h_adj", "li"});
  CHECK(j["h_edge"].get<double>() == doctest::Approx(6.0 / 7.0));
  auto csv = to_csv(r);
  CHECK(csv.rfind("h_edge,h_node,h_class,h_agg,h_adj,li\n", 0) == 0);
  FeatureMatrix x(6, 1, 1.0);
  CHECK(to_json(homophily_report(g, &x)).contains("h_ge"));
}
