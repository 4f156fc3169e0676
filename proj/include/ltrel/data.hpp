#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ltrel/matrix.hpp"
#include "ltrel/vocab.hpp"

namespace ltrel {

/// One subject-relation-object instance: a feature vector per branch plus the
/// three gold class ids.
struct TripletExample {
  Vec x_s, x_r, x_o;
  int y_s = -1;
  int y_r = -1;
  int y_o = -1;
};

/// A split of triplet examples. `scenes` groups examples that came from the
/// same image; it is empty when the source provides no grouping.
struct Dataset {
  std::vector<TripletExample> examples;
  std::vector<long long> ids;
  std::vector<int> scenes;
  int dim = 0;

  int size() const { return static_cast<int>(examples.size()); }
  bool has_scenes() const { return !scenes.empty(); }
};

inline void validate_dataset(const Dataset& d, int k_ent, int k_rel) {
  if (d.ids.size() != d.examples.size())
    throw std::invalid_argument("dataset: ids/examples size mismatch");
  if (!d.scenes.empty() && d.scenes.size() != d.examples.size())
    throw std::invalid_argument("dataset: scenes/examples size mismatch");
  for (int i = 0; i < d.size(); ++i) {
    const TripletExample& e = d.examples[i];
    auto check_dim = [&](const Vec& x, const char* which) {
      if (static_cast<int>(x.size()) != d.dim)
        throw std::invalid_argument("dataset: example " + std::to_string(i) +
                                    " has wrong " + which + " dimension");
      if (!all_finite(x))
        throw std::invalid_argument("dataset: example " + std::to_string(i) +
                                    " has non-finite " + which + " features");
    };
    check_dim(e.x_s, "subject");
    check_dim(e.x_r, "relation");
    check_dim(e.x_o, "object");
    if (e.y_s < 0 || e.y_s >= k_ent || e.y_o < 0 || e.y_o >= k_ent)
      throw std::invalid_argument("dataset: example " + std::to_string(i) +
                                  " has entity label out of range");
    if (e.y_r < 0 || e.y_r >= k_rel)
      throw std::invalid_argument("dataset: example " + std::to_string(i) +
                                  " has relation label out of range");
  }
}

/// One JSON object per line:
/// {"id":..,"scene":..,"ys":..,"yr":..,"yo":..,"xs":[..],"xr":[..],"xo":[..]}
inline void save_dataset_jsonl(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (int i = 0; i < d.size(); ++i) {
    const TripletExample& e = d.examples[i];
    nlohmann::json j{{"id", d.ids[i]},       {"ys", e.y_s}, {"yr", e.y_r},
                     {"yo", e.y_o},          {"xs", e.x_s}, {"xr", e.x_r},
                     {"xo", e.x_o}};
    if (d.has_scenes()) j["scene"] = d.scenes[i];
    out << j.dump() << '\n';
  }
}

inline Dataset load_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  Dataset d;
  std::string line;
  int lineno = 0;
  bool any_scene = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
    TripletExample e;
    try {
      e.y_s = j.at("ys").get<int>();
      e.y_r = j.at("yr").get<int>();
      e.y_o = j.at("yo").get<int>();
      e.x_s = j.at("xs").get<Vec>();
      e.x_r = j.at("xr").get<Vec>();
      e.x_o = j.at("xo").get<Vec>();
      d.ids.push_back(j.at("id").get<long long>());
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               ex.what());
    }
    if (j.contains("scene")) {
      any_scene = true;
      d.scenes.push_back(j["scene"].get<int>());
    } else if (any_scene) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": some examples have scene ids, some do not");
    }
    if (d.dim == 0) d.dim = static_cast<int>(e.x_s.size());
    d.examples.push_back(std::move(e));
  }
  if (any_scene && d.scenes.size() != d.examples.size())
    throw std::runtime_error(path + ": some examples have scene ids, some do not");
  return d;
}

}  // namespace ltrel
