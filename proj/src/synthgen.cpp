#include "homoscope/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "homoscope/error.hpp"
#include "homoscope/homophily.hpp"

namespace homoscope {

namespace {

using Rng = std::mt19937_64;

std::size_t uniform_below(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

// k distinct values from [0, n), in draw order.
std::vector<std::size_t> distinct_sample(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> out;
  out.reserve(k);
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = n - k; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    const std::size_t pick = seen.insert(t).second ? t : j;
    if (pick == j) seen.insert(j);
    out.push_back(pick);
  }
  return out;
}

// Undirected pair set keyed by (min, max).
class PairSet {
 public:
  explicit PairSet(std::size_t n) : n_(n) {}
  bool insert(NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return set_.insert(static_cast<std::uint64_t>(u) * n_ + v).second;
  }
  bool contains(NodeId u, NodeId v) const {
    if (u > v) std::swap(u, v);
    return set_.count(static_cast<std::uint64_t>(u) * n_ + v) > 0;
  }

 private:
  std::uint64_t n_;
  std::unordered_set<std::uint64_t> set_;
};

FeatureMatrix blob_features(const std::vector<ClassId>& labels, std::size_t n_classes, const FeatureSource& src, Rng& rng) {
  if (src.dim == 0) throw Error(ErrorKind::Validation, "feature dimension must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix centres(n_classes, src.dim);
  for (std::size_t k = 0; k < n_classes; ++k)
    for (std::size_t j = 0; j < src.dim; ++j) centres(k, j) = normal(rng);
  FeatureMatrix x(labels.size(), src.dim);
  for (std::size_t v = 0; v < labels.size(); ++v)
    for (std::size_t j = 0; j < src.dim; ++j) x(v, j) = centres(labels[v], j) + src.spread * normal(rng);
  return x;
}

FeatureMatrix file_features(const std::vector<ClassId>& labels, std::size_t n_classes, const FeatureSource& src, Rng& rng) {
  const auto src_labels = load_labels(src.labels_path);
  const FeatureMatrix src_x = load_features(src.features_path, src_labels.size());
  std::vector<std::vector<std::size_t>> rows_of(n_classes);
  for (std::size_t i = 0; i < src_labels.size(); ++i)
    if (src_labels[i] < n_classes) rows_of[src_labels[i]].push_back(i);
  std::vector<std::size_t> demand(n_classes, 0);
  for (ClassId l : labels) ++demand[l];

  std::vector<std::vector<std::size_t>> assigned(n_classes);
  for (std::size_t k = 0; k < n_classes; ++k) {
    auto& pool = rows_of[k];
    if (pool.empty()) throw Error(ErrorKind::Validation, "feature source has no rows for class " + std::to_string(k));
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < demand[k]; ++i)
      assigned[k].push_back(i < pool.size() ? pool[i] : pool[uniform_below(rng, pool.size())]);
  }
  FeatureMatrix x(labels.size(), src_x.cols());
  std::vector<std::size_t> next(n_classes, 0);
  for (std::size_t v = 0; v < labels.size(); ++v) {
    auto row = src_x.row(assigned[labels[v]][next[labels[v]]++]);
    std::copy(row.begin(), row.end(), x.row(v).begin());
  }
  return x;
}

}  // namespace

CsbmhGraph generate_csbmh_graph(const CsbmhParams& p, std::size_t n0, std::size_t n1, std::uint64_t seed) {
  validate(p);
  const std::size_t n = n0 + n1;
  const std::size_t size[2] = {n0, n1};
  const std::size_t first[2] = {0, n0};
  const double degree[2] = {p.d0, p.d1};
  std::size_t intra[2], inter[2];
  for (int c = 0; c < 2; ++c) {
    const auto d = static_cast<std::size_t>(std::llround(degree[c]));
    intra[c] = static_cast<std::size_t>(std::floor(p.h * static_cast<double>(d) + 0.5));
    inter[c] = d - intra[c];
    if (size[c] > 0 && (intra[c] > size[c] - 1 || inter[c] > size[1 - c]))
      throw Error(ErrorKind::Validation, "class " + std::to_string(c) + " degree " + std::to_string(d) +
                                             " exceeds the available neighbour pool");
  }

  Rng rng(seed);
  std::vector<ClassId> labels(n);
  std::vector<std::pair<NodeId, NodeId>> arcs;
  std::size_t same = 0;
  for (std::size_t v = 0; v < n; ++v) {
    const int c = v < n0 ? 0 : 1;
    labels[v] = static_cast<ClassId>(c);
    const std::size_t own = v - first[c];
    for (std::size_t i : distinct_sample(rng, size[c] - 1, intra[c])) {
      const std::size_t u = first[c] + (i >= own ? i + 1 : i);
      arcs.emplace_back(static_cast<NodeId>(v), static_cast<NodeId>(u));
    }
    for (std::size_t i : distinct_sample(rng, size[1 - c], inter[c]))
      arcs.emplace_back(static_cast<NodeId>(v), static_cast<NodeId>(first[1 - c] + i));
    same += intra[c];
  }

  CsbmhGraph out;
  out.realized_h = arcs.empty() ? std::nan("") : static_cast<double>(same) / static_cast<double>(arcs.size());
  out.graph = Graph::from_edges(n, arcs, labels, true);

  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t f = p.dim();
  out.features = FeatureMatrix(n, f);
  const double sd[2] = {std::sqrt(p.sigma0_sq), std::sqrt(p.sigma1_sq)};
  for (std::size_t v = 0; v < n; ++v) {
    const int c = v < n0 ? 0 : 1;
    const auto& mu = c == 0 ? p.mu0 : p.mu1;
    for (std::size_t j = 0; j < f; ++j) out.features(v, j) = mu[j] + sd[c] * normal(rng);
  }
  return out;
}

HomophilyGraph generate_homophily_graph(const HomophilyGenSpec& spec) {
  const std::size_t c = spec.n_classes, m = spec.nodes_per_class;
  if (c < 2 || m < 2) throw Error(ErrorKind::Validation, "need at least two classes with two nodes each");
  if (!(spec.target_h_edge > 0.0 && spec.target_h_edge <= 1.0))
    throw Error(ErrorKind::Validation, "target edge homophily must lie in (0, 1]");
  const std::size_t n = c * m;
  const std::size_t intra = spec.intra_edges_per_class;
  const double inter_real = static_cast<double>(intra) / spec.target_h_edge - static_cast<double>(intra);
  const auto inter = static_cast<std::size_t>(std::llround(inter_real));

  const std::size_t intra_pool = m * (m - 1) / 2;
  const std::size_t inter_pool_class = m * (n - m);
  const std::size_t inter_pool_total = c * (c - 1) / 2 * m * m;
  if (intra > intra_pool)
    throw Error(ErrorKind::Validation, "requested " + std::to_string(intra) + " intra-class edges per class but only " +
                                           std::to_string(intra_pool) + " node pairs exist");
  if (inter > inter_pool_class || c * inter > inter_pool_total)
    throw Error(ErrorKind::Validation, "node pairs exhausted: requested " + std::to_string(inter) +
                                           " inter-class edges per class (" + std::to_string(c * inter) + " total) but only " +
                                           std::to_string(inter_pool_total) + " inter-class node pairs exist for " +
                                           std::to_string(n) + " nodes");

  Rng rng(spec.seed);
  PairSet used(n);
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::size_t> inter_touching(c, 0);
  auto cls = [&](std::size_t v) { return v / m; };

  // Draws `count` unused pairs from a candidate space. Sparse requests use
  // rejection; dense ones enumerate what is left and shuffle.
  auto draw = [&](std::size_t count, std::size_t free_pairs, auto&& random_pair, auto&& enumerate) {
    if (count > free_pairs) throw Error(ErrorKind::Validation, "node pairs exhausted while drawing edges");
    if (2 * count <= free_pairs) {
      for (std::size_t got = 0; got < count;) {
        auto [u, v] = random_pair();
        if (used.insert(u, v)) {
          edges.emplace_back(u, v);
          ++got;
        }
      }
    } else {
      std::vector<std::pair<NodeId, NodeId>> cand;
      enumerate([&](NodeId u, NodeId v) {
        if (!used.contains(u, v)) cand.emplace_back(u, v);
      });
      for (std::size_t i = 0; i < count; ++i) {
        std::swap(cand[i], cand[i + uniform_below(rng, cand.size() - i)]);
        used.insert(cand[i].first, cand[i].second);
        edges.push_back(cand[i]);
      }
    }
  };

  for (std::size_t k = 0; k < c; ++k) {
    const auto base = static_cast<NodeId>(k * m);
    draw(
        intra, intra_pool,
        [&] {
          NodeId u, v;
          do {
            u = base + static_cast<NodeId>(uniform_below(rng, m));
            v = base + static_cast<NodeId>(uniform_below(rng, m));
          } while (u == v);
          return std::pair{u, v};
        },
        [&](auto&& emit) {
          for (NodeId u = base; u < base + m; ++u)
            for (NodeId v = u + 1; v < base + m; ++v) emit(u, v);
        });
  }

  for (std::size_t k = 0; k < c; ++k) {
    const auto base = static_cast<NodeId>(k * m);
    const std::size_t before = edges.size();
    draw(
        inter, inter_pool_class - inter_touching[k],
        [&] {
          const NodeId u = base + static_cast<NodeId>(uniform_below(rng, m));
          const std::size_t r = uniform_below(rng, n - m);
          const auto v = static_cast<NodeId>(r < base ? r : r + m);
          return std::pair{u, v};
        },
        [&](auto&& emit) {
          for (NodeId u = base; u < base + m; ++u)
            for (NodeId v = 0; v < n; ++v)
              if (cls(v) != k) emit(u, v);
        });
    for (std::size_t i = before; i < edges.size(); ++i) {
      ++inter_touching[cls(edges[i].first)];
      ++inter_touching[cls(edges[i].second)];
    }
  }

  std::vector<ClassId> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<ClassId>(cls(v));

  HomophilyGraph out;
  out.intra_edges = c * intra;
  out.inter_edges = c * inter;
  out.graph = Graph::from_edges(n, edges, labels, false);
  out.realized_h_edge = h_edge(out.graph);
  out.features = spec.features.kind == FeatureSource::Kind::GaussianBlobs ? blob_features(labels, c, spec.features, rng)
                                                                          : file_features(labels, c, spec.features, rng);
  return out;
}

}  // namespace homoscope
