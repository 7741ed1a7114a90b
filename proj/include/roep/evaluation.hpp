#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "roep/agent.hpp"
#include "roep/config.hpp"
#include "roep/env.hpp"
#include "roep/scenegen.hpp"

namespace roep::training {

/// Who chooses the actions and makes the prediction during evaluation.
///  Model      - greedy rollout of the agent.
///  Passive / Random / Exhaustive - scripted actions, agent's prediction head.
///  Oracle     - the rule agent; no model needed.
enum class PolicyKind { Model, Passive, Random, Exhaustive, Oracle };

std::string to_string(PolicyKind kind);
PolicyKind parse_policy(const std::string& text);

struct LevelReport {
  scene::DataLevel level = scene::DataLevel::L1_1vis;
  scene::PairFilter filter = scene::PairFilter::All;
  long episodes = 0;
  long correct = 0;
  long moves = 0;

  double accuracy() const;   // in [0, 1]
  double avg_steps() const;  // in [0, 6]
  /// Sums the counts of another report over the same level and filter.
  void merge(const LevelReport& other);

  friend bool operator==(const LevelReport&, const LevelReport&) = default;
};

struct EvalReport {
  std::string name;
  std::vector<LevelReport> rows;

  const LevelReport& row(scene::DataLevel level, scene::PairFilter filter = scene::PairFilter::All) const;
  /// One JSON object: {"name": ..., "rows": [{"level", "filter", "episodes", "accuracy", "avg_steps"}, ...]}.
  std::string to_json() const;
};

struct EvalSettings {
  long episodes = 10000;
  scene::PairFilter filter = scene::PairFilter::All;
  scene::HoldoutSet holdout;
  std::uint64_t seed = 1;
  int workers = 1;
  geometry::SceneLayout layout;
};

/// Plays `settings.episodes` fresh episodes at `level`. Samples and action
/// randomness come from per-episode streams of `settings.seed`, so the report
/// is independent of the worker count. `model` may be null only for the
/// oracle. Throws std::invalid_argument for a non-positive episode count, a
/// missing model, or HoldoutOnly with an empty holdout set.
LevelReport evaluate(const agent::AgentModel* model, PolicyKind kind, scene::DataLevel level,
                     const EvalSettings& settings);

/// Traces of the first `count` episodes `evaluate` would play.
std::vector<env::EpisodeTrace> evaluation_traces(const agent::AgentModel* model, PolicyKind kind,
                                                 scene::DataLevel level, const EvalSettings& settings, long count);

/// Every level, in order.
EvalReport evaluate_levels(const agent::AgentModel* model, PolicyKind kind, const EvalSettings& settings,
                           const std::string& name);

// --- cross-stage matrix --------------------------------------------------------

inline constexpr std::array<const char*, 4> kStageCheckpoints = {"Model_L1", "Model_L2", "Model_L3", "Final_Model"};

/// Evaluates each of the four stage checkpoints in `dir` on every level.
/// Throws std::runtime_error when a checkpoint is missing.
std::vector<EvalReport> cross_stage_matrix(const std::filesystem::path& dir, const EvalSettings& settings);

// --- scripted baselines --------------------------------------------------------

struct BaselineSettings {
  long finetune_episodes = 50000;
  scene::DataLevel level = scene::DataLevel::L4_overall;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

/// A baseline shares the agent's architecture but acts with a fixed scripted
/// strategy. Starting from `start`, the perception, word, memory and
/// prediction modules are trained with the prediction loss on episodes whose
/// actions come from `kind`, so the prediction head matches the observation
/// sequences that strategy produces.
agent::AgentModel train_scripted_baseline(const agent::AgentModel& start, env::ScriptedKind kind,
                                          const BaselineSettings& baseline, const scene::HoldoutSet& holdout,
                                          const geometry::SceneLayout& layout);

/// Rows Passive, Random, Exhaustive, Ours; every level.
std::vector<EvalReport> baseline_comparison(const agent::AgentModel& model, const BaselineSettings& baseline,
                                            const EvalSettings& settings, std::ostream* log = nullptr);

// --- holdout generalization ----------------------------------------------------

/// The five evaluation rows: L1, L2 (training pairs), L3 (training pairs),
/// L2 (holdout pairs), L3 (holdout pairs).
EvalReport holdout_rows(const agent::AgentModel& model, const scene::HoldoutSet& holdout, EvalSettings settings,
                        const std::string& name);

struct HoldoutResult {
  int per_pair = 0;
  std::vector<EvalReport> per_seed;
  EvalReport mean;  // accuracy and steps averaged over seeds (counts summed)
};

/// Trains the curriculum of `base` once per seed with `per_pair` pairs of every
/// family held out, then evaluates the five holdout rows. Each seed writes to
/// `base.output_dir / ("holdout<3*per_pair>_seed<seed>")`.
HoldoutResult holdout_experiment(const RunConfig& base, int per_pair, const std::vector<std::uint64_t>& seeds,
                                 const EvalSettings& settings, std::ostream* log = nullptr);

/// Human-readable table: one line per report, accuracy % and steps per row.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace roep::training
