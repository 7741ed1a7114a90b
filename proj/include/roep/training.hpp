#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "roep/agent.hpp"
#include "roep/config.hpp"
#include "roep/scenegen.hpp"

namespace roep::training {

/// Raised when a loss or logit turns non-finite. Carries the seed of the
/// episode's sample so the failure can be replayed.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, long episode, std::uint64_t sample_seed)
      : std::runtime_error(what), episode_(episode), sample_seed_(sample_seed) {}
  long episode() const { return episode_; }
  std::uint64_t sample_seed() const { return sample_seed_; }

private:
  long episode_;
  std::uint64_t sample_seed_;
};

struct MetricsRow {
  long episode = 0;  // global episode count at the time of the row
  int stage = 0;     // 1-based
  scene::DataLevel level = scene::DataLevel::L1_1vis;
  double accuracy = 0.0;   // over the rolling window
  double avg_steps = 0.0;  // over the same window
  double loss_p = 0.0;
  double loss_a = 0.0;
  double loss_b = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr const char* kMetricsHeader = "episode,stage,level,acc,avg_steps,loss_p,loss_a,loss_b";
std::string to_csv(const MetricsRow& row);

/// Fixed-size window of recent episodes; accuracy, steps and losses are all
/// averaged over the same set.
class RollingWindow {
public:
  explicit RollingWindow(std::size_t capacity);
  void add(bool correct, int moves, const agent::LossBreakdown& loss);
  void clear();
  std::size_t size() const { return entries_.size(); }
  double accuracy() const;
  double avg_steps() const;
  double loss_p() const;
  double loss_a() const;
  double loss_b() const;

private:
  struct Entry {
    bool correct;
    int moves;
    double lp, la, lb;
  };
  double mean(double Entry::*field) const;
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Entry> entries_;
};

struct StageResult {
  CurriculumStage stage;
  std::filesystem::path checkpoint;
  MetricsRow last;  // final metrics row of the stage
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<StageResult> stages;
  std::vector<MetricsRow> metrics;
  scene::HoldoutSet holdout;
  std::filesystem::path final_checkpoint;
  double seconds = 0.0;
};

/// Runs the curriculum. Writes into `config.output_dir`: one checkpoint per
/// stage (plus its model-config sidecar), `metrics.csv`, `holdout.txt` and
/// `run.cfg`. Each stage starts from the checkpoint the previous one saved.
/// Progress lines go to `log` when given. Throws DivergenceError on a
/// non-finite loss.
TrainResult train(const RunConfig& config, std::ostream* log = nullptr);

/// Seed of the sample used for global training episode `episode`.
std::uint64_t training_sample_seed(std::uint64_t root, long episode);

}  // namespace roep::training
