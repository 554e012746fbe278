#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rehost/fir/ast.hpp"

namespace rehost::fir {

struct CallGraph {
  std::set<std::string> nodes;
  // caller -> callees; both sides iterate lexicographically.
  std::map<std::string, std::set<std::string>> edges;

  bool has_edge(const std::string& from, const std::string& to) const;
  std::vector<std::pair<std::string, std::string>> edge_list() const;
};

class UnknownRoot : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

CallGraph call_graph(const Program& p);

std::set<std::string> reachable_functions(const Program& p,
                                          const std::vector<std::string>& roots);

}  // namespace rehost::fir
