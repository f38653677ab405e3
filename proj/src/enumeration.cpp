// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/enumeration.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "gwest/errors.hpp"
#include "json.hpp"

namespace gwest {

namespace {

void check_dims(int height, int width) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("tree space needs height >= 1 and width >= 1");
}

}  // namespace

BigInt count_all(int height, int width) {
  check_dims(height, width);
  BigInt prev = width;  // |G_{1,W}| = W
  for (int lvl = 2; lvl <= height; ++lvl) {
    BigInt acc = 0;
    BigInt power = 1;
    for (int i = 1; i <= width; ++i) {
      power *= prev;
      acc += power;
    }
    prev = acc;
  }
  return prev;
}

BigInt count_noniso(int height, int width) {
  check_dims(height, width);
  BigInt prev = width;
  for (int lvl = 2; lvl <= height; ++lvl) {
    // (W+1) * binom(W + K, W+1) / K - 1; the division is exact.
    BigInt t = binomial(prev + width, static_cast<unsigned>(width + 1));
    t *= width + 1;
    if (t % prev != 0)
      throw std::logic_error("count_noniso: inexact division");
    prev = t / prev - 1;
  }
  return prev;
}

BigInt catalog_multiplicity(std::span<const int> child_ids,
                            const std::vector<CatalogEntry>& prev_level) {
  BigInt m = factorial(static_cast<unsigned>(child_ids.size()));
  for (int id : child_ids)
    m *= prev_level[static_cast<std::size_t>(id)].multiplicity;
  std::size_t i = 0;
  while (i < child_ids.size()) {
    std::size_t j = i;
    while (j < child_ids.size() && child_ids[j] == child_ids[i]) ++j;
    m /= factorial(static_cast<unsigned>(j - i));
    i = j;
  }
  return m;
}

NonIsoCatalog NonIsoCatalog::enumerate(int height, int width,
                                       std::int64_t budget) {
  check_dims(height, width);
  for (int lvl = 1; lvl <= height; ++lvl) {
    const BigInt n = count_noniso(lvl, width);
    if (n > budget)
      throw CapacityError("catalog for (L=" + std::to_string(lvl) +
                          ", W=" + std::to_string(width) + ") has " +
                          n.str() + " entries, over the budget of " +
                          std::to_string(budget));
  }

  NonIsoCatalog cat;
  cat.height_ = height;
  cat.width_ = width;
  cat.levels_.resize(static_cast<std::size_t>(height) + 1);

  // Level 0: the single-node tree.
  CatalogEntry unit;
  unit.id = 0;
  unit.multiplicity = 1;
  unit.census.assign(static_cast<std::size_t>(width), 0);
  unit.node_count = 1;
  cat.levels_[0].push_back(unit);

  for (int lvl = 1; lvl <= height; ++lvl) {
    const auto& prev = cat.levels_[static_cast<std::size_t>(lvl - 1)];
    auto& cur = cat.levels_[static_cast<std::size_t>(lvl)];
    const int prev_count = static_cast<int>(prev.size());
    std::vector<int> stack;
    // Non-increasing id tuples, sizes ascending, descending lexicographic.
    const auto emit = [&]() {
      CatalogEntry e;
      e.id = static_cast<int>(cur.size());
      e.child_ids = stack;
      e.multiplicity = catalog_multiplicity(e.child_ids, prev);
      e.census.assign(static_cast<std::size_t>(width), 0);
      e.census[stack.size() - 1] += 1;  // the root's own offspring count
      e.node_count = 1;
      for (int id : stack) {
        const auto& c = prev[static_cast<std::size_t>(id)];
        e.node_count += c.node_count;
        for (std::size_t j = 0; j < e.census.size(); ++j)
          e.census[j] += c.census[j];
      }
      cur.push_back(std::move(e));
    };
    const auto recurse = [&](auto&& self, int max_id, int remaining) -> void {
      if (remaining == 0) {
        emit();
        return;
      }
      for (int id = max_id; id >= 0; --id) {
        stack.push_back(id);
        self(self, id, remaining - 1);
        stack.pop_back();
      }
    };
    for (int j = 1; j <= width; ++j) recurse(recurse, prev_count - 1, j);

    const BigInt expected = count_noniso(lvl, width);
    if (BigInt(cur.size()) != expected)
      throw std::logic_error("enumeration disagrees with count_noniso");
  }
  cat.build_index();
  return cat;
}

void NonIsoCatalog::build_index() {
  top_index_.clear();
  for (const auto& e : entries()) top_index_[e.child_ids] = e.id;
}

std::optional<int> NonIsoCatalog::find_by_children(
    std::span<const int> child_ids) const {
  std::vector<int> key(child_ids.begin(), child_ids.end());
  std::sort(key.begin(), key.end(), std::greater<>());
  auto it = top_index_.find(key);
  if (it == top_index_.end()) return std::nullopt;
  return it->second;
}

Tree NonIsoCatalog::materialize(int level, int id) const {
  Tree t(level);
  const auto append = [&](auto&& self, int parent, int lvl, int eid) -> void {
    for (int cid : levels_[static_cast<std::size_t>(lvl)]
                       [static_cast<std::size_t>(eid)]
                           .child_ids) {
      const int node = t.add_child(parent);
      self(self, node, lvl - 1, cid);
    }
  };
  append(append, t.root(), level, id);
  return t;
}

Tree NonIsoCatalog::materialize(int id) const {
  return materialize(height_, id);
}

std::string NonIsoCatalog::filename(int height, int width) {
  return "catalog_L" + std::to_string(height) + "_W" + std::to_string(width) +
         ".json";
}

void NonIsoCatalog::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["L"] = height_;
  j["W"] = width_;
  nlohmann::json levels = nlohmann::json::array();
  for (int lvl = 1; lvl <= height_; ++lvl) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : levels_[static_cast<std::size_t>(lvl)]) {
      arr.push_back({{"id", e.id},
                     {"children", e.child_ids},
                     {"multiplicity", e.multiplicity.str()},
                     {"census", e.census},
                     {"node_count", e.node_count}});
    }
    levels.push_back(std::move(arr));
  }
  j["levels"] = std::move(levels);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << "\n";
}

NonIsoCatalog NonIsoCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  in >> j;
  NonIsoCatalog cat;
  cat.height_ = j.at("L").get<int>();
  cat.width_ = j.at("W").get<int>();
  check_dims(cat.height_, cat.width_);
  cat.levels_.resize(static_cast<std::size_t>(cat.height_) + 1);
  CatalogEntry unit;
  unit.multiplicity = 1;
  unit.census.assign(static_cast<std::size_t>(cat.width_), 0);
  cat.levels_[0].push_back(unit);
  const auto& levels = j.at("levels");
  if (static_cast<int>(levels.size()) != cat.height_)
    throw std::runtime_error("catalog file: wrong level count");
  for (int lvl = 1; lvl <= cat.height_; ++lvl) {
    for (const auto& je : levels[static_cast<std::size_t>(lvl - 1)]) {
      CatalogEntry e;
      e.id = je.at("id").get<int>();
      e.child_ids = je.at("children").get<std::vector<int>>();
      e.multiplicity = BigInt(je.at("multiplicity").get<std::string>());
      e.census = je.at("census").get<std::vector<std::int64_t>>();
      e.node_count = je.at("node_count").get<std::int64_t>();
      cat.levels_[static_cast<std::size_t>(lvl)].push_back(std::move(e));
    }
  }
  cat.build_index();
  return cat;
}

NonIsoCatalog NonIsoCatalog::load_or_enumerate(
    int height, int width, std::int64_t budget,
    const std::optional<std::filesystem::path>& cache_dir) {
  if (cache_dir) {
    const auto path = *cache_dir / filename(height, width);
    if (std::filesystem::exists(path)) return load(path);
    NonIsoCatalog cat = enumerate(height, width, budget);
    std::filesystem::create_directories(*cache_dir);
    cat.save(path);
    return cat;
  }
  return enumerate(height, width, budget);
}

}  // namespace gwest
