#pragma once

#include <cstdint>
#include <filesystem>

#include "homoscope/csbmh.hpp"
#include "homoscope/graph.hpp"

namespace homoscope {

struct CsbmhGraph {
  Graph graph;
  FeatureMatrix features;
  // Fraction of arcs that stay inside the class after degree rounding.
  double realized_h = 0.0;
};

// Directed graph, nodes [0, n0) in class 0 and [n0, n0 + n1) in class 1.
// Node v of class c gets D = round(d_c) distinct out-neighbours, floor(h D + 1/2)
// of them from its own class. Throws Error(Validation) when a pool is too small.
CsbmhGraph generate_csbmh_graph(const CsbmhParams& p, std::size_t n0, std::size_t n1, std::uint64_t seed);

struct FeatureSource {
  enum class Kind { GaussianBlobs, FromFile };
  Kind kind = Kind::GaussianBlobs;
  // GaussianBlobs: class centres ~ N(0, I), rows = centre + spread * N(0, I).
  std::size_t dim = 16;
  double spread = 1.0;
  // FromFile: rows of source class k are permuted onto synthetic class k,
  // drawn with replacement when the source class is smaller.
  std::filesystem::path features_path;
  std::filesystem::path labels_path;
};

struct HomophilyGenSpec {
  std::size_t n_classes = 5;
  std::size_t nodes_per_class = 400;
  std::size_t intra_edges_per_class = 4000;
  double target_h_edge = 0.5;
  FeatureSource features;
  std::uint64_t seed = 0;
};

struct HomophilyGraph {
  Graph graph;
  FeatureMatrix features;
  double realized_h_edge = 0.0;
  std::size_t intra_edges = 0;
  std::size_t inter_edges = 0;
};

// Undirected graph. Each class draws its intra-class edges and then
// round(intra / target - intra) edges to other classes; duplicates are
// redrawn. Throws Error(Validation) when the requested edges exceed the
// available node pairs.
HomophilyGraph generate_homophily_graph(const HomophilyGenSpec& spec);

}  // namespace homoscope
