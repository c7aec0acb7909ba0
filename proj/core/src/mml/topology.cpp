#include <algorithm>
#include <functional>
#include <queue>

#include "mmsf/mml/analysis.hpp"

namespace mmsf::mml {

namespace {

using Adjacency = std::vector<std::vector<std::size_t>>;

Adjacency build_graph(const ModelDescription& model) {
  Adjacency adj(model.submodels.size());
  for (const auto& c : model.conduits) {
    auto from = model.submodel_index(c.from.submodel);
    auto to = model.submodel_index(c.to.submodel);
    if (from && to) adj[*from].push_back(*to);
  }
  for (auto& out : adj) {
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return adj;
}

// Tarjan's strongly connected components.
std::vector<std::vector<std::size_t>> strongly_connected(const Adjacency& adj) {
  const std::size_t n = adj.size();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;

  std::function<void(std::size_t)> connect = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (auto w : adj[v]) {
      if (index[w] == kUnvisited) {
        connect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> comp;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      components.push_back(std::move(comp));
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] == kUnvisited) connect(v);
  }
  return components;
}

}  // namespace

TopologyReport classify_topology(const ModelDescription& model) {
  const Adjacency adj = build_graph(model);
  const std::size_t n = adj.size();
  TopologyReport report;

  std::vector<std::vector<std::size_t>> cyclic;
  for (auto& comp : strongly_connected(adj)) {
    bool self_loop = comp.size() == 1 &&
                     std::binary_search(adj[comp[0]].begin(), adj[comp[0]].end(), comp[0]);
    if (comp.size() >= 2 || self_loop) cyclic.push_back(std::move(comp));
  }

  if (!cyclic.empty()) {
    std::sort(cyclic.begin(), cyclic.end());
    report.kind = TopologyKind::kCyclic;
    for (const auto& comp : cyclic) {
      std::vector<std::string> ids;
      for (auto v : comp) ids.push_back(model.submodels[v].id);
      report.cycles.push_back(std::move(ids));
    }
    return report;
  }

  // Kahn's algorithm; ties broken by declaration order.
  std::vector<std::size_t> in_degree(n, 0);
  for (const auto& out : adj) {
    for (auto w : out) ++in_degree[w];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (in_degree[v] == 0) ready.push(v);
  }
  while (!ready.empty()) {
    auto v = ready.top();
    ready.pop();
    report.order.push_back(model.submodels[v].id);
    for (auto w : adj[v]) {
      if (--in_degree[w] == 0) ready.push(w);
    }
  }
  report.kind = TopologyKind::kAcyclic;
  return report;
}

}  // namespace mmsf::mml
