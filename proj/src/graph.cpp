#include "embedlayout/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include "embedlayout/rng.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace embedlayout {

Graph::Graph(std::size_t node_count, std::vector<Edge> edges) : adjacency_(node_count) {
  if (node_count == 0) throw std::invalid_argument("graph must have at least one node");
  for (auto& [a, b] : edges) {
    if (a >= node_count || b >= node_count) {
      throw std::invalid_argument("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                  ") out of range for " + std::to_string(node_count) +
                                  " nodes");
    }
    if (a == b) throw std::invalid_argument("self-loop at node " + std::to_string(a));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    throw std::invalid_argument("duplicate edge (" + std::to_string(dup->first) + ", " +
                                std::to_string(dup->second) + ")");
  }
  for (const auto& [a, b] : edges) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
  edges_ = std::move(edges);
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  const auto& nbrs = adjacency_.at(a);
  return std::binary_search(nbrs.begin(), nbrs.end(), b);
}

Graph generate_er(std::size_t n, double p, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_er: n must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("generate_er: p must lie in [0, 1]");
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) edges.emplace_back(i, j);
    }
  }
  return Graph(n, std::move(edges));
}

void DistanceMatrix::set(std::size_t i, std::size_t j, std::optional<double> d) {
  values_.at(i * n_ + j) = d;
  values_.at(j * n_ + i) = d;
}

DistanceMatrix bfs_all_pairs(const Graph& g) {
  const std::size_t n = g.node_count();
  DistanceMatrix dist(n);
  std::vector<std::size_t> hops(n);
  std::vector<bool> seen(n);
  std::deque<NodeId> queue;
  for (NodeId src = 0; src < n; ++src) {
    std::fill(seen.begin(), seen.end(), false);
    seen[src] = true;
    hops[src] = 0;
    queue.assign(1, src);
    while (!queue.empty()) {
      NodeId v = queue.front();
      queue.pop_front();
      for (NodeId w : g.neighbors(v)) {
        if (seen[w]) continue;
        seen[w] = true;
        hops[w] = hops[v] + 1;
        queue.push_back(w);
      }
    }
    for (NodeId dst = src + 1; dst < n; ++dst) {
      if (seen[dst]) dist.set(src, dst, static_cast<double>(hops[dst]));
    }
  }
  return dist;
}

namespace {

std::optional<std::size_t> parse_index(const std::string& token) {
  if (token.empty() || token.size() > 18) return std::nullopt;
  std::size_t value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value;
}

}  // namespace

Graph parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> declared_n;
  std::size_t max_index = 0;
  bool any_edge = false;
  std::vector<Edge> edges;
  std::set<Edge> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.front() == "n") {
      if (declared_n || any_edge) throw ParseError(line_no, "header \"n <count>\" must be the first entry");
      auto count = tokens.size() == 2 ? parse_index(tokens[1]) : std::nullopt;
      if (!count || *count == 0) throw ParseError(line_no, "malformed header, expected \"n <count>\"");
      declared_n = count;
      continue;
    }
    if (tokens.size() != 2) throw ParseError(line_no, "expected \"i j\"");
    auto a = parse_index(tokens[0]);
    auto b = parse_index(tokens[1]);
    if (!a || !b) throw ParseError(line_no, "node indices must be non-negative integers");
    if (*a == *b) throw ParseError(line_no, "self-loop at node " + tokens[0]);
    if (declared_n && (*a >= *declared_n || *b >= *declared_n)) {
      throw ParseError(line_no, "node index out of range for n = " + std::to_string(*declared_n));
    }
    Edge e{std::min(*a, *b), std::max(*a, *b)};
    if (!seen.insert(e).second) throw ParseError(line_no, "duplicate edge");
    max_index = std::max({max_index, *a, *b});
    any_edge = true;
    edges.push_back(e);
  }
  std::size_t n = declared_n ? *declared_n : (any_edge ? max_index + 1 : 0);
  if (n == 0) throw ParseError(line_no, "empty graph: no header and no edges");
  return Graph(n, std::move(edges));
}

std::string format_edge_list(const Graph& g) {
  std::string out = "n " + std::to_string(g.node_count()) + "\n";
  for (const auto& [a, b] : g.edges()) {
    out += std::to_string(a) + " " + std::to_string(b) + "\n";
  }
  return out;
}

Graph read_edge_list(const std::filesystem::path& path) {
  return parse_edge_list(detail::read_file(path));
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  detail::write_file(path, format_edge_list(g));
}

std::string graph_to_json(const Graph& g) {
  nlohmann::json j;
  j["n"] = g.node_count();
  j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : g.edges()) j["edges"].push_back({a, b});
  return j.dump() + "\n";
}

Graph graph_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
  return Graph(j.at("n").get<std::size_t>(), std::move(edges));
}

}  // namespace embedlayout
