#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roep/checkpoint.hpp"
#include "roep/env.hpp"
#include "roep/gradcheck.hpp"
#include "roep/nn.hpp"
#include "roep/rng.hpp"
#include "roep/scenegen.hpp"

namespace roep::agent {

struct ModelConfig {
  int observation_size = env::kObservationSize;
  int visual_width = 64;
  int word_width = 10;
  int memory_width = 64;
  int action_hidden = 128;
  int vocab = env::kIdentityWidth;

  static ModelConfig desk() { return {}; }
  static ModelConfig full();

  void validate() const;
  /// `key = value` lines.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Parameter groups, one per submodule.
enum class Module { Perception, Word, Memory, Action, Prediction, Baseline };

inline constexpr Module kAllModules[] = {Module::Perception, Module::Word,       Module::Memory,
                                         Module::Action,     Module::Prediction, Module::Baseline};

std::string to_string(Module module);

/// Recurrent agent: perception encoder, word embedding, memory cell, action
/// head, existence-prediction head and the value baseline head.
class AgentModel {
public:
  /// Affine weights ~ U(+-1/sqrt(fan_in)), biases zero, embeddings ~ U(+-0.1).
  AgentModel(ModelConfig config, Rng& init);

  const ModelConfig& config() const { return config_; }

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  std::vector<nn::Parameter*> parameters(Module module);
  nn::Parameter& parameter(const std::string& name);
  const nn::Parameter& parameter(const std::string& name) const;
  void zero_grad();

  // Forward pieces. Vectors returned are post-activation.
  struct Encoding {
    std::vector<double> hidden;
    std::vector<double> visual;
  };
  Encoding encode(std::span<const double> observation) const;
  std::span<const double> word(int query) const;
  std::vector<double> memory_step(std::span<const double> previous, std::span<const double> visual,
                                  std::span<const double> word) const;
  struct ActionHead {
    std::vector<double> hidden;
    std::vector<double> logits;
  };
  ActionHead action_logits(std::span<const double> memory) const;
  std::vector<double> prediction_logits(std::span<const double> memory) const;
  double baseline(std::span<const double> memory) const;

  /// Parameter values, plus Adam moments and step count when `optimizer` is given.
  std::vector<nn::NamedTensor> to_tensors(const nn::Adam* optimizer = nullptr) const;
  /// Rebuilds a model from checkpoint tensors. Moments are restored when
  /// present; the Adam step count is written to `optimizer_steps` if asked.
  static AgentModel from_tensors(const std::vector<nn::NamedTensor>& tensors, long* optimizer_steps = nullptr);

  void save(const std::filesystem::path& path, const nn::Adam* optimizer = nullptr) const;
  static AgentModel load(const std::filesystem::path& path, long* optimizer_steps = nullptr);

private:
  explicit AgentModel(ModelConfig config);
  void build();

  ModelConfig config_;
  std::vector<nn::Parameter> params_;
  std::vector<Module> groups_;
};

/// Path of the key=value model description written next to a checkpoint.
std::filesystem::path model_config_path(const std::filesystem::path& checkpoint);

struct StepRecord {
  env::Observation observation{};
  int viewpoint = 0;
  std::vector<double> hidden;
  std::vector<double> visual;
  std::vector<double> memory;
  std::vector<double> action_hidden;
  std::vector<double> action_logits;
  std::optional<env::Action> action;  // empty on the forced terminal step
  double log_prob = 0.0;
  double baseline = 0.0;
};

struct Trajectory {
  std::uint64_t seed = 0;
  scene::SceneType scene_type = scene::SceneType::OneVisible;
  int query = 0;
  bool label = false;
  std::vector<StepRecord> steps;  // moves + 1 records
  std::vector<double> prediction_logits;
  double y_hat = 0.0;
  bool prediction = false;
  env::Outcome outcome;
  std::vector<double> returns;  // R_t for every record
  std::vector<env::Action> actions;
  std::vector<int> viewpoints;
};

enum class ActionMode { Sample, Greedy };

/// Plays one episode with the model's own action head.
Trajectory rollout(const AgentModel& model, const scene::Sample& sample, const geometry::SceneLayout& layout,
                   ActionMode mode, Rng& rng);

/// Plays one episode with a scripted action strategy; the model still builds
/// its memory and makes the final prediction.
Trajectory rollout_scripted(const AgentModel& model, const scene::Sample& sample,
                            const geometry::SceneLayout& layout, const env::ScriptedPolicy& policy, Rng& rng);

struct LossBreakdown {
  double total = 0.0;
  double prediction = 0.0;  // L_p
  double action = 0.0;      // L_a
  double baseline = 0.0;    // L_b
};

/// Accumulates the gradients of L_p + alpha * L_a + beta * L_b into the
/// model. L_p reaches the prediction head, memory, perception and word
/// embedding; L_a reaches only the action head and L_b only the baseline head.
LossBreakdown total_loss(AgentModel& model, const Trajectory& trajectory, double alpha, double beta);

/// Recomputes the three losses from the recorded observations and actions
/// under the current parameters. Used for finite-difference checks.
LossBreakdown replay_losses(const AgentModel& model, const Trajectory& trajectory);

/// Finite-difference check of every parameter against the loss that is routed
/// to it, on random small models and episodes.
std::vector<nn::GradcheckEntry> model_gradchecks(Rng& rng, int episodes = 3);

env::EpisodeTrace make_trace(const Trajectory& trajectory, const scene::Catalog& catalog);

}  // namespace roep::agent
