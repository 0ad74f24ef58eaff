#include "embedlayout/walks.hpp"

#include <stdexcept>

#include "embedlayout/rng.hpp"

namespace embedlayout {

std::size_t WalkCorpus::token_count() const noexcept {
  std::size_t total = 0;
  for (const auto& w : walks) total += w.size();
  return total;
}

WalkCorpus generate_walks(const Graph& g, const WalkConfig& cfg, std::uint64_t seed) {
  if (cfg.walk_length < 1) throw std::invalid_argument("walk length must be at least 1");
  if (cfg.walks_per_node < 1) throw std::invalid_argument("walks per node must be at least 1");
  const std::size_t n = g.node_count();
  WalkCorpus corpus;
  corpus.walk_length = cfg.walk_length;
  corpus.walks_per_node = cfg.walks_per_node;
  corpus.walks.reserve(n * cfg.walks_per_node);
  for (std::size_t rep = 0; rep < cfg.walks_per_node; ++rep) {
    for (NodeId start = 0; start < n; ++start) {
      Rng rng(derive_seed(seed, {start, rep}));
      std::vector<NodeId> walk;
      walk.reserve(cfg.walk_length + 1);
      walk.push_back(start);
      NodeId current = start;
      for (std::size_t step = 0; step < cfg.walk_length; ++step) {
        const auto& nbrs = g.neighbors(current);
        if (nbrs.empty()) break;
        current = nbrs[rng.below(nbrs.size())];
        walk.push_back(current);
      }
      corpus.walks.push_back(std::move(walk));
    }
  }
  return corpus;
}

std::string format_corpus(const WalkCorpus& corpus) {
  std::string out;
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(walk[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace embedlayout
