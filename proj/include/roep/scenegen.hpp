#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "roep/catalog.hpp"
#include "roep/geometry.hpp"
#include "roep/rng.hpp"

namespace roep::scene {

enum class SceneType { OneVisible, TwoVisible, TwoOccluded };

enum class DataLevel { L1_1vis, L2_2vis, L3_2occ, L4_overall };

inline constexpr DataLevel kAllLevels[] = {DataLevel::L1_1vis, DataLevel::L2_2vis, DataLevel::L3_2occ,
                                           DataLevel::L4_overall};

std::string to_string(SceneType type);
std::string to_string(DataLevel level);
/// Accepts "L1-1-vis", "L1_1vis" or "L1" style names.
DataLevel parse_level(const std::string& text);

/// Unordered pair of catalog ids stored as (min, max).
using ObjectPair = std::pair<int, int>;
ObjectPair make_pair_key(int a, int b);

class HoldoutSet {
public:
  void insert(int a, int b) { pairs_.insert(make_pair_key(a, b)); }
  bool contains(int a, int b) const { return pairs_.count(make_pair_key(a, b)) != 0; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::set<ObjectPair>& pairs() const { return pairs_; }

  /// One `name name` line per pair.
  std::string to_text(const Catalog& catalog) const;
  static HoldoutSet parse(const std::string& text, const Catalog& catalog);

  friend bool operator==(const HoldoutSet&, const HoldoutSet&) = default;

private:
  std::set<ObjectPair> pairs_;
};

/// All unordered pairs whose members belong to different size categories.
std::vector<ObjectPair> cross_category_pairs(const Catalog& catalog);

/// Holds out `per_pair_count` pairs from each of the three category-pair
/// families. Redraws until every object still appears in a training pair.
HoldoutSet make_holdout(Rng& rng, int per_pair_count, const Catalog& catalog);

/// Which two-object combinations a generator may use.
enum class PairFilter { All, TrainingOnly, HoldoutOnly };

std::string to_string(PairFilter filter);

struct Sample {
  std::vector<geometry::PlacedObject> objects;  // TwoOccluded scenes list the occluder first
  SceneType type = SceneType::OneVisible;
  int query = 0;
  bool label = false;
  std::uint64_t seed = 0;
};

class SceneGenerator {
public:
  explicit SceneGenerator(const Catalog& catalog, geometry::SceneLayout layout = {}, HoldoutSet holdout = {},
                          PairFilter filter = PairFilter::TrainingOnly);

  Sample generate(DataLevel level, Rng& rng) const;
  /// Generates from a private stream seeded with `seed` and records the seed.
  Sample generate_seeded(DataLevel level, std::uint64_t seed) const;

  const Catalog& catalog() const { return *catalog_; }
  const geometry::SceneLayout& layout() const { return layout_; }
  const HoldoutSet& holdout() const { return holdout_; }
  PairFilter filter() const { return filter_; }

  static constexpr int kPlacementRetries = 1000;
  static constexpr int kIdentityRetries = 50;

private:
  bool allowed(int a, int b) const;
  std::optional<std::vector<geometry::PlacedObject>> build(SceneType type, int query, bool label, Rng& rng) const;
  geometry::PlacedObject place_uniform(int id, Rng& rng) const;
  std::optional<std::vector<geometry::PlacedObject>> place_visible_pair(int a, int b, Rng& rng) const;
  std::optional<std::vector<geometry::PlacedObject>> place_occluded_pair(int occluder, int occludee, Rng& rng) const;

  const Catalog* catalog_;
  geometry::SceneLayout layout_;
  HoldoutSet holdout_;
  PairFilter filter_;
};

/// One JSON object (no trailing newline) describing the sample.
std::string sample_to_json(const Sample& sample, const Catalog& catalog);

}  // namespace roep::scene
