#include "roep/agent.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace roep::agent {

namespace {

enum Slot : std::size_t {
  kPerception1Weight,
  kPerception1Bias,
  kPerception2Weight,
  kPerception2Bias,
  kWordEmbedding,
  kMemoryRecurrent,
  kMemoryInput,
  kMemoryBias,
  kAction1Weight,
  kAction1Bias,
  kAction2Weight,
  kAction2Bias,
  kPredictionWeight,
  kPredictionBias,
  kBaselineWeight,
  kBaselineBias,
  kSlotCount
};

constexpr const char* kNames[kSlotCount] = {
    "perception.fc1.weight", "perception.fc1.bias",     "perception.fc2.weight", "perception.fc2.bias",
    "word.embedding",        "memory.recurrent_weight", "memory.input_weight",   "memory.bias",
    "action.fc1.weight",     "action.fc1.bias",         "action.fc2.weight",     "action.fc2.bias",
    "prediction.weight",     "prediction.bias",         "baseline.weight",       "baseline.bias",
};

constexpr Module kGroups[kSlotCount] = {
    Module::Perception, Module::Perception, Module::Perception, Module::Perception, Module::Word,
    Module::Memory,     Module::Memory,     Module::Memory,     Module::Action,     Module::Action,
    Module::Action,     Module::Action,     Module::Prediction, Module::Prediction, Module::Baseline,
    Module::Baseline,
};

constexpr int kPredictionOutputs = 2;

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

std::string to_string(Module module) {
  switch (module) {
    case Module::Perception: return "perception";
    case Module::Word: return "word";
    case Module::Memory: return "memory";
    case Module::Action: return "action";
    case Module::Prediction: return "prediction";
    case Module::Baseline: return "baseline";
  }
  return "?";
}

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.visual_width = 256;
  c.memory_width = 256;
  return c;
}

void ModelConfig::validate() const {
  if (observation_size < 1 || visual_width < 1 || word_width < 1 || memory_width < 1 || action_hidden < 1 ||
      vocab < 1) {
    throw std::invalid_argument("model config: every width must be at least 1");
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << "observation_size = " << observation_size << '\n'
      << "visual_width = " << visual_width << '\n'
      << "word_width = " << word_width << '\n'
      << "memory_width = " << memory_width << '\n'
      << "action_hidden = " << action_hidden << '\n'
      << "vocab = " << vocab << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  const std::map<std::string, int*> fields = {
      {"observation_size", &c.observation_size}, {"visual_width", &c.visual_width},
      {"word_width", &c.word_width},             {"memory_width", &c.memory_width},
      {"action_hidden", &c.action_hidden},       {"vocab", &c.vocab},
  };
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw std::runtime_error("model config: expected key = value, got '" + line + "'");
      }
      continue;
    }
    std::istringstream key_in(line.substr(0, eq));
    std::istringstream value_in(line.substr(eq + 1));
    std::string key;
    int value = 0;
    key_in >> key;
    if (!(value_in >> value)) throw std::runtime_error("model config: bad value for '" + key + "'");
    const auto it = fields.find(key);
    if (it == fields.end()) throw std::runtime_error("model config: unknown key '" + key + "'");
    *it->second = value;
  }
  c.validate();
  return c;
}

AgentModel::AgentModel(ModelConfig config) : config_(config) {
  config_.validate();
  build();
}

void AgentModel::build() {
  const std::size_t obs = sz(config_.observation_size);
  const std::size_t dv = sz(config_.visual_width);
  const std::size_t dw = sz(config_.word_width);
  const std::size_t dm = sz(config_.memory_width);
  const std::size_t ha = sz(config_.action_hidden);
  const std::size_t vocab = sz(config_.vocab);
  const std::vector<std::size_t> shapes[kSlotCount] = {
      {dv, obs}, {dv}, {dv, dv}, {dv},  // perception
      {vocab, dw},                      // word
      {dm, dm}, {dm, dv + dw}, {dm},    // memory
      {ha, dm}, {ha}, {sz(env::kActionCount), ha}, {sz(env::kActionCount)},
      {sz(kPredictionOutputs), dm}, {sz(kPredictionOutputs)},
      {1, dm}, {1},
  };
  params_.clear();
  groups_.clear();
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    params_.emplace_back(kNames[i], nn::Tensor(shapes[i]));
    groups_.push_back(kGroups[i]);
  }
}

AgentModel::AgentModel(ModelConfig config, Rng& init) : AgentModel(config) {
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    auto& p = params_[i];
    if (i == kWordEmbedding) {
      nn::init_uniform(p.value, 0.1, init);
    } else if (p.value.rank() == 2) {
      nn::init_uniform(p.value, 1.0 / std::sqrt(static_cast<double>(p.value.cols())), init);
    }
  }
}

std::vector<nn::Parameter*> AgentModel::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const nn::Parameter*> AgentModel::parameters() const {
  std::vector<const nn::Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<nn::Parameter*> AgentModel::parameters(Module module) {
  std::vector<nn::Parameter*> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (groups_[i] == module) out.push_back(&params_[i]);
  }
  return out;
}

nn::Parameter& AgentModel::parameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

const nn::Parameter& AgentModel::parameter(const std::string& name) const {
  return const_cast<AgentModel*>(this)->parameter(name);
}

void AgentModel::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

AgentModel::Encoding AgentModel::encode(std::span<const double> observation) const {
  Encoding e;
  e.hidden = nn::affine_forward(params_[kPerception1Weight].value, params_[kPerception1Bias].value, observation);
  nn::relu_inplace(e.hidden);
  e.visual = nn::affine_forward(params_[kPerception2Weight].value, params_[kPerception2Bias].value, e.hidden);
  nn::relu_inplace(e.visual);
  return e;
}

std::span<const double> AgentModel::word(int query) const {
  return nn::embedding_lookup(params_[kWordEmbedding].value, static_cast<std::size_t>(query));
}

std::vector<double> AgentModel::memory_step(std::span<const double> previous, std::span<const double> visual,
                                            std::span<const double> word) const {
  const nn::RecurrentWeights w{params_[kMemoryRecurrent].value, params_[kMemoryInput].value,
                               params_[kMemoryBias].value};
  return nn::recurrent_cell_forward(w, previous, concat(visual, word));
}

AgentModel::ActionHead AgentModel::action_logits(std::span<const double> memory) const {
  ActionHead head;
  head.hidden = nn::affine_forward(params_[kAction1Weight].value, params_[kAction1Bias].value, memory);
  nn::relu_inplace(head.hidden);
  head.logits = nn::affine_forward(params_[kAction2Weight].value, params_[kAction2Bias].value, head.hidden);
  return head;
}

std::vector<double> AgentModel::prediction_logits(std::span<const double> memory) const {
  return nn::affine_forward(params_[kPredictionWeight].value, params_[kPredictionBias].value, memory);
}

double AgentModel::baseline(std::span<const double> memory) const {
  return nn::affine_forward(params_[kBaselineWeight].value, params_[kBaselineBias].value, memory)[0];
}

std::vector<nn::NamedTensor> AgentModel::to_tensors(const nn::Adam* optimizer) const {
  std::vector<nn::NamedTensor> out;
  for (const auto& p : params_) out.push_back({p.name, p.value});
  if (optimizer) {
    for (const auto& p : params_) {
      out.push_back({p.name + ".m", p.adam_m});
      out.push_back({p.name + ".v", p.adam_v});
    }
    out.push_back({"adam.step", nn::Tensor({1}, {static_cast<double>(optimizer->steps())})});
  }
  return out;
}

AgentModel AgentModel::from_tensors(const std::vector<nn::NamedTensor>& tensors, long* optimizer_steps) {
  std::map<std::string, const nn::Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.tensor;
  auto find = [&](const std::string& name) -> const nn::Tensor& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
    return *it->second;
  };

  ModelConfig config;
  const auto& p1 = find(kNames[kPerception1Weight]);
  const auto& emb = find(kNames[kWordEmbedding]);
  const auto& rec = find(kNames[kMemoryRecurrent]);
  const auto& a1 = find(kNames[kAction1Weight]);
  if (p1.rank() != 2 || emb.rank() != 2 || rec.rank() != 2 || a1.rank() != 2) {
    throw std::runtime_error("checkpoint: weight tensors must be matrices");
  }
  config.visual_width = static_cast<int>(p1.rows());
  config.observation_size = static_cast<int>(p1.cols());
  config.vocab = static_cast<int>(emb.rows());
  config.word_width = static_cast<int>(emb.cols());
  config.memory_width = static_cast<int>(rec.rows());
  config.action_hidden = static_cast<int>(a1.rows());

  AgentModel model(config);
  for (auto& p : model.params_) {
    const auto& value = find(p.name);
    if (value.shape() != p.value.shape()) {
      throw std::runtime_error("checkpoint tensor '" + p.name + "' has an unexpected shape");
    }
    p.value = value;
    if (by_name.count(p.name + ".m") && by_name.count(p.name + ".v")) {
      p.adam_m = find(p.name + ".m");
      p.adam_v = find(p.name + ".v");
      if (p.adam_m.shape() != p.value.shape() || p.adam_v.shape() != p.value.shape()) {
        throw std::runtime_error("checkpoint moments of '" + p.name + "' have an unexpected shape");
      }
    }
  }
  if (optimizer_steps) {
    *optimizer_steps = by_name.count("adam.step") ? static_cast<long>(find("adam.step")[0]) : 0;
  }
  return model;
}

std::filesystem::path model_config_path(const std::filesystem::path& checkpoint) {
  return std::filesystem::path(checkpoint.string() + ".cfg");
}

void AgentModel::save(const std::filesystem::path& path, const nn::Adam* optimizer) const {
  nn::save_checkpoint(path, to_tensors(optimizer));
  std::ofstream cfg(model_config_path(path), std::ios::trunc);
  if (!cfg) throw std::runtime_error("cannot write " + model_config_path(path).string());
  cfg << config_.to_text();
}

AgentModel AgentModel::load(const std::filesystem::path& path, long* optimizer_steps) {
  AgentModel model = from_tensors(nn::load_checkpoint(path), optimizer_steps);
  const auto cfg_path = model_config_path(path);
  if (std::filesystem::exists(cfg_path)) {
    std::ifstream in(cfg_path);
    std::stringstream text;
    text << in.rdbuf();
    if (!(ModelConfig::from_text(text.str()) == model.config())) {
      throw std::runtime_error("model config " + cfg_path.string() + " does not match the checkpoint shapes");
    }
  }
  return model;
}

namespace {

using Chooser = std::function<env::Action(int t, std::span<const double> logits, Rng& rng)>;

Trajectory run_episode(const AgentModel& model, const scene::Sample& sample, const geometry::SceneLayout& layout,
                       const Chooser& choose, Rng& rng) {
  Trajectory traj;
  traj.seed = sample.seed;
  traj.scene_type = sample.type;
  traj.query = sample.query;
  traj.label = sample.label;

  env::Episode episode(sample, layout);
  const auto word = model.word(sample.query);
  std::vector<double> memory(sz(model.config().memory_width), 0.0);

  while (true) {
    StepRecord rec;
    rec.observation = episode.observation();
    rec.viewpoint = episode.viewpoint().index();
    auto enc = model.encode(rec.observation);
    rec.hidden = std::move(enc.hidden);
    rec.visual = std::move(enc.visual);
    rec.memory = model.memory_step(memory, rec.visual, word);
    rec.baseline = model.baseline(rec.memory);
    memory = rec.memory;

    if (episode.done()) {
      traj.steps.push_back(std::move(rec));
      break;
    }
    auto head = model.action_logits(rec.memory);
    const env::Action action = choose(episode.moves(), head.logits, rng);
    const auto probs = nn::softmax(head.logits);
    rec.log_prob = std::log(probs[static_cast<std::size_t>(action)]);
    rec.action_hidden = std::move(head.hidden);
    rec.action_logits = std::move(head.logits);
    rec.action = action;
    traj.steps.push_back(std::move(rec));
    episode.step(action);
    if (action == env::Action::Stop) break;
  }

  traj.prediction_logits = model.prediction_logits(memory);
  const auto p = nn::softmax(traj.prediction_logits);
  traj.y_hat = p[0];
  traj.prediction = p[0] >= p[1];
  traj.outcome = episode.finish(traj.prediction);
  traj.returns.assign(traj.steps.size(), traj.outcome.total_reward);
  traj.actions = episode.actions();
  traj.viewpoints = episode.viewpoints();
  return traj;
}

}  // namespace

Trajectory rollout(const AgentModel& model, const scene::Sample& sample, const geometry::SceneLayout& layout,
                   ActionMode mode, Rng& rng) {
  const Chooser choose = [mode](int, std::span<const double> logits, Rng& r) {
    const std::size_t index =
        mode == ActionMode::Greedy ? nn::argmax(logits) : nn::softmax_categorical(logits, r).index;
    return static_cast<env::Action>(index);
  };
  return run_episode(model, sample, layout, choose, rng);
}

Trajectory rollout_scripted(const AgentModel& model, const scene::Sample& sample,
                            const geometry::SceneLayout& layout, const env::ScriptedPolicy& policy, Rng& rng) {
  const Chooser choose = [&policy](int t, std::span<const double>, Rng& r) { return policy.next(t, r); };
  return run_episode(model, sample, layout, choose, rng);
}

LossBreakdown total_loss(AgentModel& model, const Trajectory& traj, double alpha, double beta) {
  if (traj.steps.empty()) throw std::invalid_argument("total_loss: empty trajectory");
  const auto params = model.parameters();  // same order as kNames
  auto p = [&params](Slot s) -> nn::Parameter& { return *params[s]; };
  const std::size_t dv = sz(model.config().visual_width);
  const std::size_t dw = sz(model.config().word_width);
  const std::size_t dm = sz(model.config().memory_width);
  LossBreakdown loss;

  // Existence prediction: backpropagated through the memory to perception and
  // the word embedding.
  const auto bce = nn::bce_loss(traj.label, traj.prediction_logits);
  loss.prediction = bce.loss;
  std::vector<double> memory_grad(dm, 0.0);
  nn::affine_backward(p(kPredictionWeight).value, traj.steps.back().memory, bce.logit_grad,
                      &p(kPredictionWeight).grad, &p(kPredictionBias).grad, memory_grad);

  const auto word = model.word(traj.query);
  std::vector<double> word_grad(dw, 0.0);
  const nn::RecurrentWeights cell{p(kMemoryRecurrent).value, p(kMemoryInput).value, p(kMemoryBias).value};
  const nn::RecurrentGrads cell_grads{&p(kMemoryRecurrent).grad, &p(kMemoryInput).grad, &p(kMemoryBias).grad};
  const std::vector<double> zeros(dm, 0.0);
  for (std::size_t t = traj.steps.size(); t-- > 0;) {
    const auto& rec = traj.steps[t];
    const std::span<const double> previous = t == 0 ? std::span<const double>(zeros) : traj.steps[t - 1].memory;
    const auto c = concat(rec.visual, word);
    std::vector<double> previous_grad(dm, 0.0);
    std::vector<double> c_grad(dv + dw, 0.0);
    nn::recurrent_cell_backward(cell, previous, c, rec.memory, memory_grad, cell_grads, previous_grad, c_grad);

    std::vector<double> visual_grad(c_grad.begin(), c_grad.begin() + static_cast<std::ptrdiff_t>(dv));
    for (std::size_t j = 0; j < dw; ++j) word_grad[j] += c_grad[dv + j];
    nn::relu_backward(rec.visual, visual_grad);
    std::vector<double> hidden_grad(dv, 0.0);
    nn::affine_backward(p(kPerception2Weight).value, rec.hidden, visual_grad, &p(kPerception2Weight).grad,
                        &p(kPerception2Bias).grad, hidden_grad);
    nn::relu_backward(rec.hidden, hidden_grad);
    nn::affine_backward(p(kPerception1Weight).value, rec.observation, hidden_grad, &p(kPerception1Weight).grad,
                        &p(kPerception1Bias).grad, {});
    memory_grad = std::move(previous_grad);
  }
  nn::embedding_backward(p(kWordEmbedding).grad, static_cast<std::size_t>(traj.query), word_grad);

  // Policy gradient: action head only, memory treated as a constant input.
  std::vector<std::vector<double>> logits;
  std::vector<std::size_t> actions;
  std::vector<double> returns, baselines;
  std::vector<std::size_t> acted;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& rec = traj.steps[t];
    if (!rec.action) continue;
    logits.push_back(rec.action_logits);
    actions.push_back(static_cast<std::size_t>(*rec.action));
    returns.push_back(traj.returns[t]);
    baselines.push_back(rec.baseline);
    acted.push_back(t);
  }
  if (!acted.empty()) {
    const auto reinforce = nn::reinforce_loss(logits, actions, returns, baselines);
    loss.action = reinforce.loss;
    if (alpha != 0.0) {
      for (std::size_t k = 0; k < acted.size(); ++k) {
        const auto& rec = traj.steps[acted[k]];
        std::vector<double> logit_grad = reinforce.logit_grads[k];
        for (double& g : logit_grad) g *= alpha;
        std::vector<double> hidden_grad(rec.action_hidden.size(), 0.0);
        nn::affine_backward(p(kAction2Weight).value, rec.action_hidden, logit_grad, &p(kAction2Weight).grad,
                            &p(kAction2Bias).grad, hidden_grad);
        nn::relu_backward(rec.action_hidden, hidden_grad);
        nn::affine_backward(p(kAction1Weight).value, rec.memory, hidden_grad, &p(kAction1Weight).grad,
                            &p(kAction1Bias).grad, {});
      }
    }
  }

  // Value baseline: baseline head only.
  std::vector<double> all_baselines;
  for (const auto& rec : traj.steps) all_baselines.push_back(rec.baseline);
  const auto value = nn::baseline_loss(traj.returns, all_baselines);
  loss.baseline = value.loss;
  if (beta != 0.0) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const double g = beta * value.baseline_grads[t];
      nn::affine_backward(p(kBaselineWeight).value, traj.steps[t].memory, std::span<const double>(&g, 1),
                          &p(kBaselineWeight).grad, &p(kBaselineBias).grad, {});
    }
  }

  loss.total = loss.prediction + alpha * loss.action + beta * loss.baseline;
  return loss;
}

LossBreakdown replay_losses(const AgentModel& model, const Trajectory& traj) {
  LossBreakdown loss;
  const auto word = model.word(traj.query);
  std::vector<double> memory(sz(model.config().memory_width), 0.0);
  std::vector<double> baselines;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& rec = traj.steps[t];
    const auto enc = model.encode(rec.observation);
    memory = model.memory_step(memory, enc.visual, word);
    const double b = model.baseline(memory);
    baselines.push_back(b);
    if (rec.action) {
      const auto head = model.action_logits(memory);
      const auto probs = nn::softmax(head.logits);
      loss.action -= std::log(probs[static_cast<std::size_t>(*rec.action)]) * (traj.returns[t] - b);
    }
  }
  loss.prediction = nn::bce_loss(traj.label, model.prediction_logits(memory)).loss;
  loss.baseline = nn::baseline_loss(traj.returns, baselines).loss;
  loss.total = loss.prediction + loss.action + loss.baseline;
  return loss;
}

std::vector<nn::GradcheckEntry> model_gradchecks(Rng& rng, int episodes) {
  ModelConfig small;
  small.visual_width = 6;
  small.word_width = 4;
  small.memory_width = 6;
  small.action_hidden = 5;
  const scene::SceneGenerator generator(scene::Catalog::builtin());

  std::map<std::string, nn::GradcheckEntry> worst;
  for (int e = 0; e < episodes; ++e) {
    AgentModel model(small, rng);
    // Larger weights keep most ReLUs active so the check is not vacuous.
    for (auto* p : model.parameters()) nn::init_uniform(p->value, 0.5, rng);
    const auto sample = generator.generate(scene::DataLevel::L4_overall, rng);
    const env::ScriptedPolicy policy(e % 2 == 0 ? env::ScriptedKind::Random : env::ScriptedKind::Exhaustive);
    const Trajectory traj = rollout_scripted(model, sample, generator.layout(), policy, rng);

    model.zero_grad();
    total_loss(model, traj, 1.0, 1.0);
    for (const Module module : kAllModules) {
      for (nn::Parameter* param : model.parameters(module)) {
        const auto f = [&, module] {
          const auto l = replay_losses(model, traj);
          if (module == Module::Action) return l.action;
          if (module == Module::Baseline) return l.baseline;
          return l.prediction;
        };
        const std::vector<double> analytic(param->grad.values().begin(), param->grad.values().end());
        const auto numeric = nn::numeric_gradient(f, param->value.values());
        auto& entry = worst[param->name];
        entry.name = "model." + param->name;
        entry.instances += 1;
        entry.max_relative_error = std::max(entry.max_relative_error, nn::max_relative_error(analytic, numeric));
      }
    }
    model.zero_grad();
  }
  std::vector<nn::GradcheckEntry> out;
  for (const char* name : kNames) out.push_back(worst.at(name));
  return out;
}

env::EpisodeTrace make_trace(const Trajectory& traj, const scene::Catalog& catalog) {
  env::EpisodeTrace trace;
  trace.seed = traj.seed;
  trace.scene_type = traj.scene_type;
  trace.query = catalog.at(traj.query).name;
  trace.label = traj.label;
  trace.actions = traj.actions;
  trace.viewpoints = traj.viewpoints;
  trace.prediction = traj.prediction;
  trace.moves = traj.outcome.moves;
  trace.reward = traj.outcome.total_reward;
  return trace;
}

}  // namespace roep::agent
