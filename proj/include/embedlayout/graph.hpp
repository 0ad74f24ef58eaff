#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace embedlayout {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Raised for malformed input files; carries the offending line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Undirected simple graph. Immutable after construction.
class Graph {
 public:
  /// Validates and normalizes the edge list: every pair is stored as (i, j)
  /// with i < j, sorted lexicographically. Throws std::invalid_argument on
  /// self-loops, duplicates or out-of-range endpoints.
  Graph(std::size_t node_count, std::vector<Edge> edges);

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<NodeId>& neighbors(NodeId v) const { return adjacency_.at(v); }
  std::size_t degree(NodeId v) const { return adjacency_.at(v).size(); }
  bool has_edge(NodeId a, NodeId b) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.node_count() == b.node_count() && a.edges_ == b.edges_;
  }

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<Edge> edges_;
};

/// Erdős–Rényi G(n, p). Potential edges are visited in lexicographic (i, j)
/// order and each consumes exactly one uniform draw.
Graph generate_er(std::size_t n, double p, std::uint64_t seed);

/// All-pairs hop distances. Unreachable pairs hold std::nullopt.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * n) {
    for (std::size_t i = 0; i < n; ++i) values_[i * n + i] = 0.0;
  }

  std::size_t size() const noexcept { return n_; }
  const std::optional<double>& at(std::size_t i, std::size_t j) const {
    return values_.at(i * n_ + j);
  }
  bool reachable(std::size_t i, std::size_t j) const { return at(i, j).has_value(); }
  /// Writes both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, std::optional<double> d);

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::optional<double>> values_;
};

DistanceMatrix bfs_all_pairs(const Graph& g);

// Edge-list text format: optional "n <count>" header, then one "i j" per line.
// Blank lines and lines starting with '#' are ignored.
Graph parse_edge_list(const std::string& text);
std::string format_edge_list(const Graph& g);
Graph read_edge_list(const std::filesystem::path& path);
void write_edge_list(const Graph& g, const std::filesystem::path& path);

// JSON interchange: {"n": int, "edges": [[i, j], ...]}.
std::string graph_to_json(const Graph& g);
Graph graph_from_json(const std::string& text);

}  // namespace embedlayout
