// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwest/numeric.hpp"
#include "gwest/tree.hpp"

namespace gwest {

// |G_{L,W}|: all trees of exactly `height` generations with 1..width
// children per internal node, counted with ordered child lists.
BigInt count_all(int height, int width);

// |G^non-iso_{L,W}|: the same space counted up to isomorphism.
BigInt count_noniso(int height, int width);

struct CatalogEntry {
  int id = 0;
  std::vector<int> child_ids;        // one level down, non-increasing
  BigInt multiplicity = 1;           // ordered trees collapsing to this shape
  std::vector<std::int64_t> census;  // c_1..c_W
  std::int64_t node_count = 1;
};

// Number of ordered trees collapsing to the shape with these root subtrees:
// j! times the product of subtree multiplicities, divided by the factorials
// of the duplicate counts.
BigInt catalog_multiplicity(std::span<const int> child_ids,
                            const std::vector<CatalogEntry>& prev_level);

// Maximal pairwise non-isomorphic set of trees for (height, width), with
// multiplicities and offspring censuses, built level by level by attaching
// lower catalogs to a root with ids in non-increasing order.
class NonIsoCatalog {
 public:
  static constexpr std::int64_t kDefaultBudget = 100000;

  static NonIsoCatalog enumerate(int height, int width,
                                 std::int64_t budget = kDefaultBudget);

  int height() const { return height_; }
  int width() const { return width_; }

  // Top-level entries; entries().size() == count_noniso(height, width).
  const std::vector<CatalogEntry>& entries() const {
    return levels_[static_cast<std::size_t>(height_)];
  }
  // Entries of an intermediate level, 1 <= level <= height. Level 0 is the
  // implicit single-node tree.
  const std::vector<CatalogEntry>& level(int lvl) const {
    return levels_[static_cast<std::size_t>(lvl)];
  }

  // Top-level id of the entry with this child multiset, if any.
  std::optional<int> find_by_children(std::span<const int> child_ids) const;

  Tree materialize(int id) const;
  Tree materialize(int level, int id) const;

  void save(const std::filesystem::path& path) const;
  static NonIsoCatalog load(const std::filesystem::path& path);
  static std::string filename(int height, int width);
  // Loads `catalog_L{h}_W{w}.json` from cache_dir when present, enumerating
  // and persisting otherwise. No cache_dir means enumerate in memory.
  static NonIsoCatalog load_or_enumerate(
      int height, int width, std::int64_t budget,
      const std::optional<std::filesystem::path>& cache_dir);

 private:
  NonIsoCatalog() = default;
  void build_index();

  int height_ = 0;
  int width_ = 0;
  std::vector<std::vector<CatalogEntry>> levels_;  // [0..height]
  std::map<std::vector<int>, int> top_index_;
};

}  // namespace gwest
