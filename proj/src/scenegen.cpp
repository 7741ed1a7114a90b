#include "roep/scenegen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace roep::scene {

using geometry::PlacedObject;
using geometry::SizeCategory;

std::string to_string(SceneType type) {
  switch (type) {
    case SceneType::OneVisible: return "1-vis";
    case SceneType::TwoVisible: return "2-vis";
    case SceneType::TwoOccluded: return "2-occ";
  }
  return "?";
}

std::string to_string(DataLevel level) {
  switch (level) {
    case DataLevel::L1_1vis: return "L1-1-vis";
    case DataLevel::L2_2vis: return "L2-2-vis";
    case DataLevel::L3_2occ: return "L3-2-occ";
    case DataLevel::L4_overall: return "L4-overall";
  }
  return "?";
}

DataLevel parse_level(const std::string& text) {
  std::string key;
  for (char c : text) {
    if (c != '-' && c != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "l1" || key == "l11vis") return DataLevel::L1_1vis;
  if (key == "l2" || key == "l22vis") return DataLevel::L2_2vis;
  if (key == "l3" || key == "l32occ") return DataLevel::L3_2occ;
  if (key == "l4" || key == "l4overall") return DataLevel::L4_overall;
  throw std::invalid_argument("unknown data level '" + text + "'");
}

std::string to_string(PairFilter filter) {
  switch (filter) {
    case PairFilter::All: return "all";
    case PairFilter::TrainingOnly: return "training";
    case PairFilter::HoldoutOnly: return "holdout";
  }
  return "?";
}

ObjectPair make_pair_key(int a, int b) { return a < b ? ObjectPair{a, b} : ObjectPair{b, a}; }

std::string HoldoutSet::to_text(const Catalog& catalog) const {
  std::ostringstream out;
  for (const auto& [a, b] : pairs_) {
    out << catalog.at(a).name << ' ' << catalog.at(b).name << '\n';
  }
  return out.str();
}

HoldoutSet HoldoutSet::parse(const std::string& text, const Catalog& catalog) {
  HoldoutSet set;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string a, b;
    if (!(fields >> a)) continue;
    if (!(fields >> b)) throw std::runtime_error("holdout: expected two object names in '" + line + "'");
    const auto ia = catalog.find(a);
    const auto ib = catalog.find(b);
    if (!ia || !ib) throw std::runtime_error("holdout: unknown object in '" + line + "'");
    if (catalog.category_of(*ia) == catalog.category_of(*ib)) {
      throw std::runtime_error("holdout: pair '" + line + "' does not span two categories");
    }
    set.insert(*ia, *ib);
  }
  return set;
}

std::vector<ObjectPair> cross_category_pairs(const Catalog& catalog) {
  std::vector<ObjectPair> pairs;
  for (std::size_t a = 0; a < catalog.size(); ++a) {
    for (std::size_t b = a + 1; b < catalog.size(); ++b) {
      if (catalog.objects()[a].category != catalog.objects()[b].category) {
        pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
      }
    }
  }
  return pairs;
}

namespace {

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.index(i)]);
  }
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.index(items.size())];
}

}  // namespace

HoldoutSet make_holdout(Rng& rng, int per_pair_count, const Catalog& catalog) {
  if (per_pair_count < 0 || per_pair_count > 49) {
    throw std::invalid_argument("make_holdout: per-pair count must be in [0, 49]");
  }
  const std::pair<SizeCategory, SizeCategory> families[] = {{SizeCategory::Large, SizeCategory::Medium},
                                                            {SizeCategory::Large, SizeCategory::Small},
                                                            {SizeCategory::Medium, SizeCategory::Small}};
  const auto all_pairs = cross_category_pairs(catalog);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    HoldoutSet holdout;
    for (const auto& [first, second] : families) {
      std::vector<ObjectPair> family;
      for (const auto& [a, b] : all_pairs) {
        const auto ca = catalog.category_of(a);
        const auto cb = catalog.category_of(b);
        if ((ca == first && cb == second) || (ca == second && cb == first)) family.emplace_back(a, b);
      }
      if (static_cast<std::size_t>(per_pair_count) > family.size()) {
        throw std::invalid_argument("make_holdout: per-pair count exceeds the family size");
      }
      shuffle(family, rng);
      for (int i = 0; i < per_pair_count; ++i) holdout.insert(family[i].first, family[i].second);
    }
    std::vector<bool> seen(catalog.size(), false);
    for (const auto& [a, b] : all_pairs) {
      if (!holdout.contains(a, b)) seen[a] = seen[b] = true;
    }
    if (std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) return holdout;
  }
  throw std::runtime_error("make_holdout: could not keep every object in the training pairs");
}

SceneGenerator::SceneGenerator(const Catalog& catalog, geometry::SceneLayout layout, HoldoutSet holdout,
                               PairFilter filter)
    : catalog_(&catalog), layout_(layout), holdout_(std::move(holdout)), filter_(filter) {
  layout_.validate();
  if (catalog.size() == 0) throw std::invalid_argument("scene generator: empty catalog");
  if (filter_ == PairFilter::HoldoutOnly && holdout_.empty()) {
    throw std::invalid_argument("scene generator: holdout-only generation needs a non-empty holdout set");
  }
}

bool SceneGenerator::allowed(int a, int b) const {
  if (a == b || catalog_->category_of(a) == catalog_->category_of(b)) return false;
  switch (filter_) {
    case PairFilter::All: return true;
    case PairFilter::TrainingOnly: return !holdout_.contains(a, b);
    case PairFilter::HoldoutOnly: return holdout_.contains(a, b);
  }
  return false;
}

PlacedObject SceneGenerator::place_uniform(int id, Rng& rng) const {
  PlacedObject object;
  object.spec = catalog_->at(id);
  const double reach = layout_.table_radius - object.spec.footprint_radius();
  if (!(reach > 0.0)) throw std::runtime_error("object '" + object.spec.name + "' does not fit on the table");
  const double r = reach * std::sqrt(rng.uniform());
  const double a = rng.uniform(0.0, 2.0 * geometry::kPi);
  object.center = {r * std::cos(a), r * std::sin(a), layout_.table_height};
  object.yaw = rng.uniform(0.0, 2.0 * geometry::kPi);
  return object;
}

namespace {

constexpr double kClearance = 0.002;  // meters between footprint circles

}  // namespace

std::optional<std::vector<PlacedObject>> SceneGenerator::place_visible_pair(int a, int b, Rng& rng) const {
  for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
    std::vector<PlacedObject> objects = {place_uniform(a, rng), place_uniform(b, rng)};
    if (geometry::footprints_overlap(objects[0], objects[1], kClearance)) continue;
    if (geometry::visible_set(geometry::Viewpoint(0), objects, layout_).size() == 2) return objects;
  }
  return std::nullopt;
}

std::optional<std::vector<PlacedObject>> SceneGenerator::place_occluded_pair(int occluder, int occludee,
                                                                             Rng& rng) const {
  const geometry::Point3 camera = geometry::camera_pose(geometry::Viewpoint(0), layout_).position;
  for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
    PlacedObject front = place_uniform(occluder, rng);
    PlacedObject back;
    back.spec = catalog_->at(occludee);
    // Propose the hidden object uniformly in a box behind the occluder, aligned
    // with the sight line from the initial viewpoint. The box covers every
    // position where full occlusion is possible.
    const double dx = front.center.x - camera.x;
    const double dy = front.center.y - camera.y;
    const double len = std::hypot(dx, dy);
    const double ux = dx / len;
    const double uy = dy / len;
    const double r_front = front.spec.footprint_radius();
    const double r_back = back.spec.footprint_radius();
    const double along = rng.uniform(r_front + r_back + kClearance, 2.0 * layout_.table_radius);
    const double lateral = rng.uniform(-2.0 * r_front, 2.0 * r_front);
    back.center = {front.center.x + along * ux - lateral * uy, front.center.y + along * uy + lateral * ux,
                   layout_.table_height};
    back.yaw = rng.uniform(0.0, 2.0 * geometry::kPi);
    if (!geometry::footprint_inside_table(back, layout_)) continue;
    if (geometry::footprints_overlap(front, back, kClearance)) continue;
    if (geometry::occlusion_level(camera, front, back) == geometry::OcclusionLevel::FullyOccluded) {
      return std::vector<PlacedObject>{front, back};
    }
  }
  return std::nullopt;
}

std::optional<std::vector<PlacedObject>> SceneGenerator::build(SceneType type, int query, bool label,
                                                               Rng& rng) const {
  const auto& catalog = *catalog_;
  const int n = static_cast<int>(catalog.size());

  if (type == SceneType::OneVisible) {
    int id = query;
    if (!label) {
      id = static_cast<int>(rng.index(static_cast<std::size_t>(n - 1)));
      if (id >= query) ++id;
    }
    return std::vector<PlacedObject>{place_uniform(id, rng)};
  }

  // Candidate identity assignments. For occluded scenes the first id is the
  // occluder and must belong to the larger category.
  std::vector<ObjectPair> candidates;
  if (label) {
    for (int p = 0; p < n; ++p) {
      if (!allowed(query, p)) continue;
      candidates.emplace_back(query, p);
    }
  } else {
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (a != query && b != query && allowed(a, b)) candidates.emplace_back(a, b);
      }
    }
  }
  if (type == SceneType::TwoOccluded) {
    for (auto& [a, b] : candidates) {
      if (catalog.category_of(a) < catalog.category_of(b)) std::swap(a, b);
    }
    if (label && catalog.category_of(query) == SizeCategory::Medium) {
      // A medium target may be either the occluder or the hidden object.
      const bool as_occluder = rng.bernoulli(0.5);
      std::vector<ObjectPair> role;
      for (const auto& c : candidates) {
        if ((c.first == query) == as_occluder) role.push_back(c);
      }
      if (!role.empty()) candidates = std::move(role);
    }
  }
  if (candidates.empty()) return std::nullopt;

  for (int draw = 0; draw < kIdentityRetries; ++draw) {
    const auto [a, b] = pick(candidates, rng);
    auto placed = type == SceneType::TwoOccluded ? place_occluded_pair(a, b, rng) : place_visible_pair(a, b, rng);
    if (placed) return placed;
  }
  return std::nullopt;
}

Sample SceneGenerator::generate(DataLevel level, Rng& rng) const {
  constexpr int kDraws = 1000;
  for (int draw = 0; draw < kDraws; ++draw) {
    Sample sample;
    sample.query = static_cast<int>(rng.index(catalog_->size()));
    sample.label = rng.bernoulli(0.5);
    switch (level) {
      case DataLevel::L1_1vis: sample.type = SceneType::OneVisible; break;
      case DataLevel::L2_2vis: sample.type = SceneType::TwoVisible; break;
      case DataLevel::L3_2occ: sample.type = SceneType::TwoOccluded; break;
      case DataLevel::L4_overall: sample.type = static_cast<SceneType>(rng.index(3)); break;
    }
    if (auto objects = build(sample.type, sample.query, sample.label, rng)) {
      sample.objects = std::move(*objects);
      return sample;
    }
  }
  throw std::runtime_error("scene generator: level " + to_string(level) +
                           " is unsatisfiable with this catalog and holdout set");
}

Sample SceneGenerator::generate_seeded(DataLevel level, std::uint64_t seed) const {
  Rng rng(seed);
  Sample sample = generate(level, rng);
  sample.seed = seed;
  return sample;
}

std::string sample_to_json(const Sample& sample, const Catalog& catalog) {
  nlohmann::ordered_json j;
  j["seed"] = sample.seed;
  j["scene_type"] = to_string(sample.type);
  j["query"] = catalog.at(sample.query).name;
  j["label"] = sample.label;
  auto objects = nlohmann::ordered_json::array();
  for (const auto& o : sample.objects) {
    objects.push_back({{"name", o.spec.name},
                       {"category", geometry::to_string(o.spec.category)},
                       {"position", {o.center.x, o.center.y, o.center.z}},
                       {"yaw", o.yaw}});
  }
  j["objects"] = std::move(objects);
  return j.dump();
}

}  // namespace roep::scene
