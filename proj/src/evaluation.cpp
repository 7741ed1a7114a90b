#include "roep/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "roep/catalog.hpp"
#include "roep/rng.hpp"
#include "roep/training.hpp"

namespace roep::training {

using scene::DataLevel;
using scene::PairFilter;

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Model: return "Ours";
    case PolicyKind::Passive: return "Passive";
    case PolicyKind::Random: return "Random";
    case PolicyKind::Exhaustive: return "Exhaustive";
    case PolicyKind::Oracle: return "Oracle";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& text) {
  std::string key;
  for (char c : text) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "model" || key == "ours") return PolicyKind::Model;
  if (key == "passive") return PolicyKind::Passive;
  if (key == "random") return PolicyKind::Random;
  if (key == "exhaustive") return PolicyKind::Exhaustive;
  if (key == "oracle") return PolicyKind::Oracle;
  throw std::invalid_argument("unknown policy '" + text + "'");
}

double LevelReport::accuracy() const {
  return episodes == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(episodes);
}

double LevelReport::avg_steps() const {
  return episodes == 0 ? 0.0 : static_cast<double>(moves) / static_cast<double>(episodes);
}

void LevelReport::merge(const LevelReport& other) {
  if (other.level != level || other.filter != filter) {
    throw std::invalid_argument("LevelReport::merge: reports cover different data");
  }
  episodes += other.episodes;
  correct += other.correct;
  moves += other.moves;
}

const LevelReport& EvalReport::row(DataLevel level, PairFilter filter) const {
  for (const auto& r : rows) {
    if (r.level == level && r.filter == filter) return r;
  }
  throw std::out_of_range("report '" + name + "' has no row " + scene::to_string(level) + " (" +
                          scene::to_string(filter) + ")");
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["level"] = scene::to_string(r.level);
    row["filter"] = scene::to_string(r.filter);
    row["episodes"] = r.episodes;
    row["accuracy"] = r.accuracy();
    row["avg_steps"] = r.avg_steps();
    arr.push_back(std::move(row));
  }
  j["rows"] = std::move(arr);
  return j.dump();
}

namespace {

LevelReport run_range(const agent::AgentModel* model, PolicyKind kind, DataLevel level,
                      const EvalSettings& settings, const scene::SceneGenerator& generator, long begin, long end,
                      std::vector<env::EpisodeTrace>* traces = nullptr) {
  const auto& catalog = generator.catalog();
  const std::string stream = "eval:" + scene::to_string(level);
  LevelReport report{level, settings.filter, 0, 0, 0};
  for (long i = begin; i < end; ++i) {
    const auto index = static_cast<std::uint64_t>(i);
    const auto sample = generator.generate_seeded(level, derive_seed(settings.seed, stream, index));
    Rng rng = Rng::stream(settings.seed, "eval-policy", index);
    env::Outcome outcome;
    switch (kind) {
      case PolicyKind::Model: {
        const auto traj = agent::rollout(*model, sample, settings.layout, agent::ActionMode::Greedy, rng);
        outcome = traj.outcome;
        if (traces) traces->push_back(agent::make_trace(traj, catalog));
        break;
      }
      case PolicyKind::Passive:
      case PolicyKind::Random:
      case PolicyKind::Exhaustive: {
        const env::ScriptedKind scripted = kind == PolicyKind::Passive  ? env::ScriptedKind::Passive
                                           : kind == PolicyKind::Random ? env::ScriptedKind::Random
                                                                        : env::ScriptedKind::Exhaustive;
        const auto traj =
            agent::rollout_scripted(*model, sample, settings.layout, env::ScriptedPolicy(scripted), rng);
        outcome = traj.outcome;
        if (traces) traces->push_back(agent::make_trace(traj, catalog));
        break;
      }
      case PolicyKind::Oracle: {
        env::Episode episode(sample, settings.layout);
        outcome = env::run_oracle_episode(episode, catalog);
        if (traces) traces->push_back(env::make_trace(episode, outcome, catalog));
        break;
      }
    }
    ++report.episodes;
    report.correct += outcome.correct ? 1 : 0;
    report.moves += outcome.moves;
  }
  return report;
}

}  // namespace

LevelReport evaluate(const agent::AgentModel* model, PolicyKind kind, DataLevel level, const EvalSettings& settings) {
  if (settings.episodes < 1) throw std::invalid_argument("evaluate: episode count must be at least 1");
  if (settings.workers < 1) throw std::invalid_argument("evaluate: worker count must be at least 1");
  if (kind != PolicyKind::Oracle && model == nullptr) {
    throw std::invalid_argument("evaluate: policy " + to_string(kind) + " needs a model");
  }
  const scene::SceneGenerator generator(scene::Catalog::builtin(), settings.layout, settings.holdout,
                                        settings.filter);
  const long n = settings.episodes;
  const long workers = std::min<long>(settings.workers, n);
  if (workers == 1) return run_range(model, kind, level, settings, generator, 0, n);

  std::vector<LevelReport> parts(static_cast<std::size_t>(workers));
  std::vector<std::exception_ptr> errors(parts.size());
  std::vector<std::thread> threads;
  for (long w = 0; w < workers; ++w) {
    const long begin = n * w / workers;
    const long end = n * (w + 1) / workers;
    threads.emplace_back([&, w, begin, end] {
      try {
        parts[static_cast<std::size_t>(w)] = run_range(model, kind, level, settings, generator, begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  LevelReport total{level, settings.filter, 0, 0, 0};
  for (const auto& p : parts) total.merge(p);
  return total;
}

std::vector<env::EpisodeTrace> evaluation_traces(const agent::AgentModel* model, PolicyKind kind, DataLevel level,
                                                 const EvalSettings& settings, long count) {
  if (kind != PolicyKind::Oracle && model == nullptr) {
    throw std::invalid_argument("evaluation_traces: policy " + to_string(kind) + " needs a model");
  }
  const scene::SceneGenerator generator(scene::Catalog::builtin(), settings.layout, settings.holdout,
                                        settings.filter);
  std::vector<env::EpisodeTrace> traces;
  run_range(model, kind, level, settings, generator, 0, std::min(count, settings.episodes), &traces);
  return traces;
}

EvalReport evaluate_levels(const agent::AgentModel* model, PolicyKind kind, const EvalSettings& settings,
                           const std::string& name) {
  EvalReport report{name, {}};
  for (const DataLevel level : scene::kAllLevels) report.rows.push_back(evaluate(model, kind, level, settings));
  return report;
}

std::vector<EvalReport> cross_stage_matrix(const std::filesystem::path& dir, const EvalSettings& settings) {
  std::vector<agent::AgentModel> models;
  for (const char* stem : kStageCheckpoints) {
    const auto path = dir / (std::string(stem) + ".ckpt");
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing checkpoint " + path.string());
    models.push_back(agent::AgentModel::load(path));
  }
  std::vector<EvalReport> out;
  for (std::size_t i = 0; i < models.size(); ++i) {
    out.push_back(evaluate_levels(&models[i], PolicyKind::Model, settings, kStageCheckpoints[i]));
  }
  return out;
}

agent::AgentModel train_scripted_baseline(const agent::AgentModel& start, env::ScriptedKind kind,
                                          const BaselineSettings& baseline, const scene::HoldoutSet& holdout,
                                          const geometry::SceneLayout& layout) {
  if (baseline.finetune_episodes < 0) throw std::invalid_argument("baseline: negative episode budget");
  agent::AgentModel model = start;
  std::vector<nn::Parameter*> trained;
  for (const auto module : {agent::Module::Perception, agent::Module::Word, agent::Module::Memory,
                            agent::Module::Prediction}) {
    for (auto* p : model.parameters(module)) trained.push_back(p);
  }
  for (auto* p : model.parameters()) {
    p->adam_m.fill(0.0);
    p->adam_v.fill(0.0);
    p->zero_grad();
  }
  const scene::SceneGenerator generator(scene::Catalog::builtin(), layout, holdout, PairFilter::TrainingOnly);
  const env::ScriptedPolicy policy(kind);
  const std::string stream = "baseline:" + env::to_string(kind);
  Rng rng = Rng::stream(baseline.seed, stream + ":policy");
  nn::Adam adam;
  for (long i = 0; i < baseline.finetune_episodes; ++i) {
    const auto sample =
        generator.generate_seeded(baseline.level, derive_seed(baseline.seed, stream, static_cast<std::uint64_t>(i)));
    const auto traj = agent::rollout_scripted(model, sample, layout, policy, rng);
    // alpha = beta = 0: only the prediction loss, which is all a scripted
    // strategy can learn from.
    agent::total_loss(model, traj, 0.0, 0.0);
    adam.step(trained, baseline.lr);
    model.zero_grad();
  }
  return model;
}

std::vector<EvalReport> baseline_comparison(const agent::AgentModel& model, const BaselineSettings& baseline,
                                            const EvalSettings& settings, std::ostream* log) {
  std::vector<EvalReport> out;
  const std::pair<env::ScriptedKind, PolicyKind> kinds[] = {{env::ScriptedKind::Passive, PolicyKind::Passive},
                                                           {env::ScriptedKind::Random, PolicyKind::Random},
                                                           {env::ScriptedKind::Exhaustive, PolicyKind::Exhaustive}};
  for (const auto& [scripted, policy] : kinds) {
    if (log) *log << "training " << env::to_string(scripted) << " baseline...\n";
    const auto baseline_model = train_scripted_baseline(model, scripted, baseline, settings.holdout, settings.layout);
    out.push_back(evaluate_levels(&baseline_model, policy, settings, to_string(policy)));
  }
  out.push_back(evaluate_levels(&model, PolicyKind::Model, settings, to_string(PolicyKind::Model)));
  return out;
}

EvalReport holdout_rows(const agent::AgentModel& model, const scene::HoldoutSet& holdout, EvalSettings settings,
                        const std::string& name) {
  settings.holdout = holdout;
  EvalReport report{name, {}};
  const std::pair<DataLevel, PairFilter> rows[] = {{DataLevel::L1_1vis, PairFilter::All},
                                                   {DataLevel::L2_2vis, PairFilter::TrainingOnly},
                                                   {DataLevel::L3_2occ, PairFilter::TrainingOnly},
                                                   {DataLevel::L2_2vis, PairFilter::HoldoutOnly},
                                                   {DataLevel::L3_2occ, PairFilter::HoldoutOnly}};
  for (const auto& [level, filter] : rows) {
    settings.filter = filter;
    report.rows.push_back(evaluate(&model, PolicyKind::Model, level, settings));
  }
  return report;
}

HoldoutResult holdout_experiment(const RunConfig& base, int per_pair, const std::vector<std::uint64_t>& seeds,
                                 const EvalSettings& settings, std::ostream* log) {
  if (seeds.empty()) throw std::invalid_argument("holdout experiment: no seeds");
  HoldoutResult result;
  result.per_pair = per_pair;
  for (const std::uint64_t seed : seeds) {
    RunConfig config = base;
    config.seed = seed;
    config.holdout_per_pair = per_pair;
    config.output_dir =
        base.output_dir / ("holdout" + std::to_string(3 * per_pair) + "_seed" + std::to_string(seed));
    if (log) *log << "holdout " << 3 * per_pair << ", seed " << seed << '\n';
    const auto trained = train(config, log);
    const auto model = agent::AgentModel::load(trained.final_checkpoint);
    result.per_seed.push_back(
        holdout_rows(model, trained.holdout, settings, "seed " + std::to_string(seed)));
  }
  result.mean = result.per_seed.front();
  result.mean.name = std::to_string(3 * per_pair) + " holdout (mean of " + std::to_string(seeds.size()) + ")";
  for (std::size_t s = 1; s < result.per_seed.size(); ++s) {
    for (std::size_t r = 0; r < result.mean.rows.size(); ++r) result.mean.rows[r].merge(result.per_seed[s].rows[r]);
  }
  return result;
}

std::string format_table(const std::vector<EvalReport>& reports) {
  if (reports.empty()) return {};
  std::ostringstream out;
  const int name_width = 26;
  const int col_width = 24;
  out << std::left << std::setw(name_width) << "";
  for (const auto& r : reports.front().rows) {
    std::string label = scene::to_string(r.level);
    if (r.filter != PairFilter::All) label += " (" + scene::to_string(r.filter) + ")";
    out << std::setw(col_width) << label;
  }
  out << '\n';
  for (const auto& report : reports) {
    out << std::left << std::setw(name_width) << report.name;
    for (const auto& r : report.rows) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(1) << 100.0 * r.accuracy() << "% / " << std::setprecision(2)
           << r.avg_steps();
      out << std::setw(col_width) << cell.str();
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace roep::training
