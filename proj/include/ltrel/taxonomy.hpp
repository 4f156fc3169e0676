#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ltrel {

/// Rooted is-a tree over label names. Depth counts nodes along the path from
/// the root, so the root has depth 1.
struct Taxonomy {
  std::vector<std::string> names;
  std::vector<int> parent;  // -1 at the root
  std::vector<int> depth;
  std::unordered_map<std::string, int> index;
  int root = -1;
  int max_depth = 0;

  int size() const { return static_cast<int>(names.size()); }

  int node(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end())
      throw std::invalid_argument("unknown taxonomy node: '" + name + "'");
    return it->second;
  }

  bool contains(const std::string& name) const {
    return index.count(name) != 0;
  }
};

/// Builds a taxonomy from child -> parent edges. Exactly one node may appear
/// only as a parent; it becomes the root. Cycles and forests are rejected.
inline Taxonomy make_taxonomy(
    const std::vector<std::pair<std::string, std::string>>& edges) {
  if (edges.empty()) throw std::invalid_argument("taxonomy: no edges");
  Taxonomy t;
  auto intern = [&](const std::string& name) {
    auto it = t.index.find(name);
    if (it != t.index.end()) return it->second;
    int id = t.size();
    t.index.emplace(name, id);
    t.names.push_back(name);
    t.parent.push_back(-1);
    return id;
  };
  std::vector<bool> has_parent;
  for (const auto& [child, parent] : edges) {
    if (child.empty() || parent.empty())
      throw std::invalid_argument("taxonomy: empty node name in edge list");
    int c = intern(child);
    int p = intern(parent);
    if (has_parent.size() < static_cast<std::size_t>(t.size()))
      has_parent.resize(t.size(), false);
    if (has_parent[c])
      throw std::invalid_argument("taxonomy: node '" + child +
                                  "' has two parents");
    if (c == p)
      throw std::invalid_argument("taxonomy: self-loop at '" + child + "'");
    has_parent[c] = true;
    t.parent[c] = p;
  }
  has_parent.resize(t.size(), false);
  for (int i = 0; i < t.size(); ++i) {
    if (has_parent[i]) continue;
    if (t.root != -1)
      throw std::invalid_argument("taxonomy: multiple roots ('" +
                                  t.names[t.root] + "' and '" + t.names[i] +
                                  "')");
    t.root = i;
  }
  if (t.root == -1) throw std::invalid_argument("taxonomy: no root (cycle)");
  t.depth.assign(t.size(), 0);
  for (int i = 0; i < t.size(); ++i) {
    // Walk to the root, guarding against cycles off the main trunk.
    int steps = 0;
    int cur = i;
    while (cur != -1) {
      ++steps;
      if (steps > t.size())
        throw std::invalid_argument("taxonomy: cycle involving '" +
                                    t.names[i] + "'");
      cur = t.parent[cur];
    }
    t.depth[i] = steps;
    if (steps > t.max_depth) t.max_depth = steps;
  }
  return t;
}

/// Reads a `child<TAB>parent` edge file.
inline Taxonomy load_taxonomy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open taxonomy file: " + path);
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected child<TAB>parent");
    edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return make_taxonomy(edges);
}

inline void save_taxonomy(const Taxonomy& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write taxonomy file: " + path);
  for (int i = 0; i < t.size(); ++i)
    if (t.parent[i] != -1) out << t.names[i] << '\t' << t.names[t.parent[i]] << '\n';
}

/// Lowest common subsumer of two nodes.
inline int lowest_common_subsumer(const Taxonomy& t, int a, int b) {
  while (a != b) {
    if (t.depth[a] >= t.depth[b])
      a = t.parent[a];
    else
      b = t.parent[b];
  }
  return a;
}

/// Number of edges on the path between two nodes.
inline int path_edges(const Taxonomy& t, int a, int b) {
  int l = lowest_common_subsumer(t, a, b);
  return (t.depth[a] - t.depth[l]) + (t.depth[b] - t.depth[l]);
}

/// Information content per taxonomy node.
struct ICTable {
  std::vector<double> ic;  // indexed by node id

  double at(int node) const {
    if (node < 0 || node >= static_cast<int>(ic.size()))
      throw std::invalid_argument("IC table: node id out of range");
    return ic[node];
  }
};

inline ICTable make_ic(const Taxonomy& t,
                       const std::unordered_map<std::string, double>& values) {
  ICTable table;
  table.ic.assign(t.size(), -1.0);
  for (const auto& [name, v] : values) {
    if (!t.contains(name))
      throw std::invalid_argument("IC table: unknown node '" + name + "'");
    if (v < 0.0)
      throw std::invalid_argument("IC table: negative value for '" + name + "'");
    table.ic[t.node(name)] = v;
  }
  for (int i = 0; i < t.size(); ++i)
    if (table.ic[i] < 0.0)
      throw std::invalid_argument("IC table: missing value for '" + t.names[i] +
                                  "'");
  return table;
}

/// Reads a `node<TAB>ic` file covering every taxonomy node.
inline ICTable load_ic(const std::string& path, const Taxonomy& t) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open IC file: " + path);
  std::unordered_map<std::string, double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected node<TAB>ic");
    values[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
  }
  return make_ic(t, values);
}

inline void save_ic(const ICTable& table, const Taxonomy& t,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write IC file: " + path);
  char buf[64];
  for (int i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", table.ic[i]);
    out << t.names[i] << '\t' << buf << '\n';
  }
}

}  // namespace ltrel
