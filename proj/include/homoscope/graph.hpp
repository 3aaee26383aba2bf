#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace homoscope {

using NodeId = std::uint32_t;
using ClassId = std::uint32_t;

// Immutable graph in CSR form. Undirected graphs store both directions, so
// neighbors(v) is always the full neighborhood of v.
class Graph {
 public:
  Graph() = default;

  // Builds a graph from an arc list. Arcs are sorted and deduplicated; when
  // directed is false every arc is mirrored first. Throws Error(Format) on an
  // out-of-range endpoint or label, Error(Validation) on a self-loop when
  // allow_self_loops is false.
  static Graph from_edges(std::size_t n_nodes, std::span<const std::pair<NodeId, NodeId>> arcs,
                          std::vector<ClassId> labels, bool directed, bool allow_self_loops = false);

  std::size_t num_nodes() const { return labels_.size(); }
  std::size_t num_classes() const { return n_classes_; }
  bool directed() const { return directed_; }

  // Number of stored CSR entries. For undirected graphs this is 2|E|.
  std::size_t num_arcs() const { return col_idx_.size(); }
  // |E|: undirected edges counted once (self-loops count once), arcs for directed graphs.
  std::size_t num_edges() const;

  std::size_t degree(NodeId v) const { return row_ptr_[v + 1] - row_ptr_[v]; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {col_idx_.data() + row_ptr_[v], col_idx_.data() + row_ptr_[v + 1]};
  }
  ClassId label(NodeId v) const { return labels_[v]; }
  std::span<const ClassId> labels() const { return labels_; }
  std::span<const std::size_t> row_offsets() const { return row_ptr_; }
  std::span<const NodeId> column_indices() const { return col_idx_; }

  bool has_self_loops() const;

  // Edge list as written to disk: each undirected edge once with u <= v.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const;

 private:
  std::vector<std::size_t> row_ptr_{0};
  std::vector<NodeId> col_idx_;
  std::vector<ClassId> labels_;
  std::size_t n_classes_ = 0;
  bool directed_ = false;
};

// Dense row-major node feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const { return data_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Normalization { RandomWalk, Symmetric };

// Aggregation operator: RandomWalk is D~^-1 A~, Symmetric is
// D~^-1/2 A~ D~^-1/2, where A~ = A (+ I when add_self_loops).
struct AggregationKind {
  Normalization normalization = Normalization::RandomWalk;
  bool add_self_loops = false;
};

struct LoadOptions {
  bool directed = true;
  bool allow_self_loops = false;
};

Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& label_path,
                 const LoadOptions& options = {});
// One non-negative integer per non-blank line.
std::vector<ClassId> load_labels(const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path, std::size_t n_nodes);

void write_edges(const Graph& g, const std::filesystem::path& path);
void write_labels(const Graph& g, const std::filesystem::path& path);
void write_features(const FeatureMatrix& x, const std::filesystem::path& path);

// Row i of the result is the operator row i applied to x. Throws
// Error(DegenerateNode) listing zero-degree nodes under RandomWalk. Under
// Symmetric, zero-degree rows are zero.
FeatureMatrix aggregate_low_pass(const Graph& g, const FeatureMatrix& x, const AggregationKind& kind = {});
// x - aggregate_low_pass(g, x, kind).
FeatureMatrix aggregate_high_pass(const Graph& g, const FeatureMatrix& x, const AggregationKind& kind = {});

// Dense one-hot label matrix Z (N x C).
FeatureMatrix one_hot_labels(const Graph& g);

}  // namespace homoscope
