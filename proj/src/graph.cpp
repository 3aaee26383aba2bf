#include "homoscope/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "homoscope/error.hpp"
#include "homoscope/parallel.hpp"

namespace homoscope {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

template <typename T>
bool parse_integer(std::string_view token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

std::string location(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw Error(ErrorKind::Format, "feature buffer size does not match shape");
}

Graph Graph::from_edges(std::size_t n_nodes, std::span<const std::pair<NodeId, NodeId>> arcs,
                        std::vector<ClassId> labels, bool directed, bool allow_self_loops) {
  if (labels.size() != n_nodes) throw Error(ErrorKind::Format, "label count does not match node count");
  Graph g;
  g.directed_ = directed;
  g.labels_ = std::move(labels);
  g.n_classes_ = g.labels_.empty() ? 0 : *std::max_element(g.labels_.begin(), g.labels_.end()) + 1;

  std::vector<std::pair<NodeId, NodeId>> all;
  all.reserve(directed ? arcs.size() : 2 * arcs.size());
  for (auto [u, v] : arcs) {
    if (u >= n_nodes || v >= n_nodes) {
      throw Error(ErrorKind::Format, "edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                         ") references a node >= node count " + std::to_string(n_nodes));
    }
    if (u == v && !allow_self_loops) {
      throw Error(ErrorKind::Validation, "self-loop on node " + std::to_string(u));
    }
    all.emplace_back(u, v);
    if (!directed && u != v) all.emplace_back(v, u);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  g.row_ptr_.assign(n_nodes + 1, 0);
  for (auto [u, v] : all) ++g.row_ptr_[u + 1];
  for (std::size_t i = 0; i < n_nodes; ++i) g.row_ptr_[i + 1] += g.row_ptr_[i];
  g.col_idx_.reserve(all.size());
  for (auto [u, v] : all) g.col_idx_.push_back(v);
  return g;
}

std::size_t Graph::num_edges() const {
  if (directed_) return col_idx_.size();
  std::size_t loops = 0;
  for (NodeId v = 0; v < num_nodes(); ++v) {
    auto nb = neighbors(v);
    loops += std::binary_search(nb.begin(), nb.end(), v) ? 1 : 0;
  }
  return (col_idx_.size() - loops) / 2 + loops;
}

bool Graph::has_self_loops() const {
  for (NodeId v = 0; v < num_nodes(); ++v) {
    auto nb = neighbors(v);
    if (std::binary_search(nb.begin(), nb.end(), v)) return true;
  }
  return false;
}

std::vector<std::pair<NodeId, NodeId>> Graph::edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (directed_ || u <= v) out.emplace_back(u, v);
    }
  }
  return out;
}

std::vector<ClassId> load_labels(const std::filesystem::path& label_path) {
  std::vector<ClassId> labels;
  auto in = open_input(label_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    ClassId c{};
    if (!parse_integer(t, c)) {
      throw Error(ErrorKind::Parse, location(label_path, line_no) + ": expected a non-negative integer label, got '" +
                                        std::string(t) + "'");
    }
    labels.push_back(c);
  }
  return labels;
}

Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& label_path,
                 const LoadOptions& options) {
  std::vector<ClassId> labels = load_labels(label_path);
  const std::size_t n = labels.size();

  std::vector<std::pair<NodeId, NodeId>> arcs;
  {
    auto in = open_input(edge_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      std::istringstream tokens{std::string(t)};
      std::string a, b, extra;
      tokens >> a >> b;
      if (b.empty() || (tokens >> extra)) {
        throw Error(ErrorKind::Parse, location(edge_path, line_no) + ": expected two node ids");
      }
      NodeId u{}, v{};
      if (!parse_integer(a, u) || !parse_integer(b, v)) {
        throw Error(ErrorKind::Parse, location(edge_path, line_no) + ": non-integer node id");
      }
      if (u >= n || v >= n) {
        throw Error(ErrorKind::Format, location(edge_path, line_no) + ": node index exceeds node count " +
                                           std::to_string(n) + " inferred from " + label_path.string());
      }
      if (u == v && !options.allow_self_loops) {
        throw Error(ErrorKind::Validation, location(edge_path, line_no) + ": self-loop on node " + std::to_string(u));
      }
      arcs.emplace_back(u, v);
    }
  }
  return Graph::from_edges(n, arcs, std::move(labels), options.directed, options.allow_self_loops);
}

FeatureMatrix load_features(const std::filesystem::path& path, std::size_t n_nodes) {
  auto in = open_input(path);
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    std::size_t row_cols = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = t.find(',', start);
      auto field = trim(t.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (field.size() >= 2 && field.front() == '"' && field.back() == '"') field = trim(field.substr(1, field.size() - 2));
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw Error(ErrorKind::Parse, location(path, line_no) + ": cannot parse '" + std::string(field) + "' as a number");
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorKind::Format, location(path, line_no) + ": non-finite value '" + std::string(field) + "'");
      }
      data.push_back(value);
      ++row_cols;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw Error(ErrorKind::Format, location(path, line_no) + ": ragged row with " + std::to_string(row_cols) +
                                         " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows != n_nodes) {
    throw Error(ErrorKind::Format, path.string() + ": " + std::to_string(rows) + " feature rows for " +
                                       std::to_string(n_nodes) + " nodes");
  }
  return FeatureMatrix(rows, cols, std::move(data));
}

void write_edges(const Graph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (auto [u, v] : g.edge_list()) out << u << ' ' << v << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void write_labels(const Graph& g, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (ClassId c : g.labels()) out << c << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void write_features(const FeatureMatrix& x, const std::filesystem::path& path) {
  auto out = open_output(path);
  char buf[32];
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", x(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

FeatureMatrix aggregate_low_pass(const Graph& g, const FeatureMatrix& x, const AggregationKind& kind) {
  const std::size_t n = g.num_nodes();
  if (x.rows() != n) {
    throw Error(ErrorKind::Validation, "feature matrix has " + std::to_string(x.rows()) + " rows, graph has " +
                                           std::to_string(n) + " nodes");
  }
  const bool loops = kind.add_self_loops;
  auto tilde_degree = [&](NodeId v) {
    auto nb = g.neighbors(v);
    std::size_t d = nb.size();
    // An existing self-loop is not doubled by add_self_loops.
    if (loops && !std::binary_search(nb.begin(), nb.end(), v)) ++d;
    return d;
  };

  if (kind.normalization == Normalization::RandomWalk) {
    std::vector<NodeId> degenerate;
    for (NodeId v = 0; v < n; ++v) {
      if (tilde_degree(v) == 0) degenerate.push_back(v);
    }
    if (!degenerate.empty()) {
      std::string list;
      for (std::size_t i = 0; i < degenerate.size() && i < 20; ++i) list += (i ? ", " : "") + std::to_string(degenerate[i]);
      if (degenerate.size() > 20) list += ", ...";
      throw Error(ErrorKind::DegenerateNode, std::to_string(degenerate.size()) +
                                                 " zero-degree node(s) under random-walk aggregation: " + list);
    }
  }

  std::vector<double> inv_sqrt;
  if (kind.normalization == Normalization::Symmetric) {
    inv_sqrt.resize(n);
    for (NodeId v = 0; v < n; ++v) {
      auto d = tilde_degree(v);
      inv_sqrt[v] = d ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0;
    }
  }

  FeatureMatrix out(n, x.cols());
  parallel_for(n, [&](std::size_t i) {
    const auto v = static_cast<NodeId>(i);
    auto dst = out.row(v);
    auto nb = g.neighbors(v);
    const bool add_own = loops && !std::binary_search(nb.begin(), nb.end(), v);
    auto accumulate = [&](NodeId u, double w) {
      auto src = x.row(u);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
    };
    if (kind.normalization == Normalization::RandomWalk) {
      const double w = 1.0 / static_cast<double>(tilde_degree(v));
      for (NodeId u : nb) accumulate(u, w);
      if (add_own) accumulate(v, w);
    } else {
      for (NodeId u : nb) accumulate(u, inv_sqrt[v] * inv_sqrt[u]);
      if (add_own) accumulate(v, inv_sqrt[v] * inv_sqrt[v]);
    }
  });
  return out;
}

FeatureMatrix aggregate_high_pass(const Graph& g, const FeatureMatrix& x, const AggregationKind& kind) {
  FeatureMatrix out = aggregate_low_pass(g, x, kind);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    auto src = x.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = src[c] - dst[c];
  }
  return out;
}

FeatureMatrix one_hot_labels(const Graph& g) {
  FeatureMatrix z(g.num_nodes(), g.num_classes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) z(v, g.label(v)) = 1.0;
  return z;
}

}  // namespace homoscope
