#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "roep/agent.hpp"
#include "roep/geometry.hpp"
#include "roep/scenegen.hpp"

namespace roep::training {

struct CurriculumStage {
  scene::DataLevel level = scene::DataLevel::L1_1vis;
  long episodes = 0;
  double alpha = 1e-2;
  double beta = 1.0;
  double lr = 1e-4;

  /// Throws std::invalid_argument unless episodes >= 1 and alpha, beta, lr > 0.
  void validate() const;

  friend bool operator==(const CurriculumStage&, const CurriculumStage&) = default;
};

/// Checkpoint stem of stage `index` out of `count`: "Model_L1", "Model_L2", ...
/// for intermediate stages and "Final_Model" for the last one.
std::string stage_checkpoint_name(std::size_t index, std::size_t count, scene::DataLevel level);

/// L1 -> L2 -> L3 -> L4 with alpha = 1e-2 on the first three stages and 1e-4
/// on the last, beta = 1.
std::vector<CurriculumStage> default_curriculum(const std::vector<long>& episodes, double lr);

struct RunConfig {
  std::uint64_t seed = 1;
  agent::ModelConfig model;
  std::vector<CurriculumStage> stages;
  int holdout_per_pair = 0;  // pairs held out from each category-pair family
  int eval_window = 2000;    // rolling window of the metrics stream
  int metrics_every = 1000;  // episodes between metrics rows
  std::filesystem::path output_dir = "runs/desk";
  geometry::SceneLayout layout;

  static RunConfig desk();
  static RunConfig full();

  void validate() const;

  /// Flat `key = value` text with one `[stage <level>]` section per stage.
  /// Parsing starts from the desk preset; `preset = full` (before any other
  /// key) starts from the full-scale preset instead. Stage sections, when present,
  /// replace the preset's stages in the order given.
  std::string to_text() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Applies the ROEP_SEED environment variable, if set, to `config.seed`.
/// Throws std::invalid_argument when the variable is not an unsigned integer.
void apply_seed_override(RunConfig& config);

}  // namespace roep::training
