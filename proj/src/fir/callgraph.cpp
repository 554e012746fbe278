#include "rehost/fir/callgraph.hpp"

#include <deque>

namespace rehost::fir {

bool CallGraph::has_edge(const std::string& from, const std::string& to) const {
  auto it = edges.find(from);
  return it != edges.end() && it->second.contains(to);
}

std::vector<std::pair<std::string, std::string>> CallGraph::edge_list() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [from, tos] : edges) {
    for (const auto& to : tos) out.emplace_back(from, to);
  }
  return out;
}

CallGraph call_graph(const Program& p) {
  CallGraph g;
  for (const auto& [name, fn] : p.functions) {
    g.nodes.insert(name);
    for (const auto& bb : fn.blocks) {
      for (const auto& ins : bb.instructions) {
        if (ins.op == Instruction::Op::kCall && !is_builtin(ins.callee)) {
          g.edges[name].insert(ins.callee);
        }
      }
    }
  }
  return g;
}

std::set<std::string> reachable_functions(const Program& p,
                                          const std::vector<std::string>& roots) {
  for (const auto& r : roots) {
    if (!p.functions.contains(r)) throw UnknownRoot("unknown root function '" + r + "'");
  }
  const CallGraph g = call_graph(p);
  std::set<std::string> seen(roots.begin(), roots.end());
  std::deque<std::string> work(roots.begin(), roots.end());
  while (!work.empty()) {
    std::string f = std::move(work.front());
    work.pop_front();
    auto it = g.edges.find(f);
    if (it == g.edges.end()) continue;
    for (const auto& callee : it->second) {
      if (seen.insert(callee).second) work.push_back(callee);
    }
  }
  return seen;
}

}  // namespace rehost::fir
