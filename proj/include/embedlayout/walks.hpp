#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "embedlayout/graph.hpp"

namespace embedlayout {

struct WalkConfig {
  std::size_t walk_length = 40;  ///< steps per walk; a full walk has walk_length + 1 nodes
  std::size_t walks_per_node = 10;
};

/// Random walks used as training sentences. Walks are ordered by repeat
/// index, then by start node: walk r * n + v starts at node v.
struct WalkCorpus {
  std::vector<std::vector<NodeId>> walks;
  std::size_t walk_length = 0;
  std::size_t walks_per_node = 0;

  std::size_t token_count() const noexcept;
};

/// Uniform random walks. Each walk draws from its own substream keyed by
/// (seed, start node, repeat index), so the corpus does not depend on the
/// order walks are produced in. A walk that reaches a node without neighbors
/// stops there.
WalkCorpus generate_walks(const Graph& g, const WalkConfig& cfg, std::uint64_t seed);

/// One walk per line, space-separated node indices.
std::string format_corpus(const WalkCorpus& corpus);

}  // namespace embedlayout
