#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "roep/catalog.hpp"
#include "roep/geometry.hpp"
#include "roep/rng.hpp"
#include "roep/scenegen.hpp"

namespace roep::env {

enum class Action : int { CircleLeft = 0, CircleRight = 1, Stop = 2 };

inline constexpr int kActionCount = 3;
inline constexpr int kMaxMoves = 6;

std::string to_string(Action action);

// Observation layout: two slots ordered by bearing, each holding a one-hot
// identity block followed by apparent height and bearing, then the visible
// object count divided by two.
inline constexpr int kIdentityWidth = 21;
inline constexpr int kSlotCount = 2;
inline constexpr int kSlotWidth = kIdentityWidth + 2;
inline constexpr int kObservationSize = kSlotCount * kSlotWidth + 1;

using Observation = std::array<double, kObservationSize>;

Observation observe(const scene::Sample& sample, geometry::Viewpoint viewpoint, const geometry::SceneLayout& layout);

struct SlotView {
  int identity = -1;
  double apparent_height = 0.0;
  double bearing = 0.0;
};

/// Populated slots of an observation, in slot order.
std::vector<SlotView> decode(const Observation& observation);

/// Terminal reward: accuracy term (+1 / -1) plus the latency bonus 1/(T+2).
/// Throws std::out_of_range unless 0 <= moves <= kMaxMoves.
double reward(bool correct, int moves);

struct Outcome {
  bool prediction = false;
  bool correct = false;
  int moves = 0;
  double total_reward = 0.0;
};

struct StepResult {
  Observation observation{};
  bool done = false;
};

/// One episode on a fixed sample. Construction is the reset: the camera starts
/// at viewpoint 0 with no moves taken.
class Episode {
public:
  explicit Episode(scene::Sample sample, geometry::SceneLayout layout = {});

  const Observation& observation() const { return observation_; }
  /// Throws std::logic_error once the episode is done.
  StepResult step(Action action);
  /// Scores the prediction. Requires done().
  Outcome finish(bool prediction) const;

  const scene::Sample& sample() const { return sample_; }
  geometry::Viewpoint viewpoint() const { return viewpoint_; }
  int moves() const { return moves_; }
  bool done() const { return done_; }
  const std::vector<Action>& actions() const { return actions_; }
  /// Viewpoint indices visited, starting with 0.
  const std::vector<int>& viewpoints() const { return viewpoints_; }

private:
  scene::Sample sample_;
  geometry::SceneLayout layout_;
  geometry::Viewpoint viewpoint_{0};
  int moves_ = 0;
  bool done_ = false;
  Observation observation_{};
  std::vector<Action> actions_;
  std::vector<int> viewpoints_;
};

/// Either a movement or a prediction.
struct Decision {
  std::optional<Action> action;
  bool prediction = false;

  bool predicts() const { return !action.has_value(); }
};

/// Rule agent following the reasoning table: predict once the answer is
/// determined by what is visible, move while a visible object is larger than
/// the queried one and could hide it.
Decision oracle_policy(const scene::Catalog& catalog, int query, const Observation& observation, int t);

/// Plays a whole episode with the oracle.
Outcome run_oracle_episode(Episode& episode, const scene::Catalog& catalog);

enum class ScriptedKind { Passive, Random, Exhaustive };

std::string to_string(ScriptedKind kind);

/// Fixed action strategies used as comparison baselines. Predictions come
/// from elsewhere.
class ScriptedPolicy {
public:
  explicit ScriptedPolicy(ScriptedKind kind) : kind_(kind) {}
  Action next(int t, Rng& rng) const;
  ScriptedKind kind() const { return kind_; }

private:
  ScriptedKind kind_;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  scene::SceneType scene_type = scene::SceneType::OneVisible;
  std::string query;
  bool label = false;
  std::vector<Action> actions;
  std::vector<int> viewpoints;
  bool prediction = false;
  int moves = 0;
  double reward = 0.0;
};

EpisodeTrace make_trace(const Episode& episode, const Outcome& outcome, const scene::Catalog& catalog);
std::string trace_to_json(const EpisodeTrace& trace);

}  // namespace roep::env
