#include "roep/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "roep/catalog.hpp"
#include "roep/rng.hpp"

namespace roep::training {

std::string to_csv(const MetricsRow& row) {
  std::ostringstream out;
  out << row.episode << ',' << row.stage << ',' << scene::to_string(row.level) << ',' << std::setprecision(6)
      << row.accuracy << ',' << row.avg_steps << ',' << row.loss_p << ',' << row.loss_a << ',' << row.loss_b;
  return out.str();
}

RollingWindow::RollingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("rolling window capacity must be positive");
  entries_.reserve(capacity);
}

void RollingWindow::add(bool correct, int moves, const agent::LossBreakdown& loss) {
  const Entry e{correct, moves, loss.prediction, loss.action, loss.baseline};
  if (entries_.size() < capacity_) {
    entries_.push_back(e);
  } else {
    entries_[next_] = e;
  }
  next_ = (next_ + 1) % capacity_;
}

void RollingWindow::clear() {
  entries_.clear();
  next_ = 0;
}

double RollingWindow::mean(double Entry::*field) const {
  if (entries_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : entries_) total += e.*field;
  return total / static_cast<double>(entries_.size());
}

double RollingWindow::accuracy() const {
  if (entries_.empty()) return 0.0;
  long correct = 0;
  for (const auto& e : entries_) correct += e.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(entries_.size());
}

double RollingWindow::avg_steps() const {
  if (entries_.empty()) return 0.0;
  long moves = 0;
  for (const auto& e : entries_) moves += e.moves;
  return static_cast<double>(moves) / static_cast<double>(entries_.size());
}

double RollingWindow::loss_p() const { return mean(&Entry::lp); }
double RollingWindow::loss_a() const { return mean(&Entry::la); }
double RollingWindow::loss_b() const { return mean(&Entry::lb); }

std::uint64_t training_sample_seed(std::uint64_t root, long episode) {
  return derive_seed(root, "scenegen", static_cast<std::uint64_t>(episode));
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

TrainResult train(const RunConfig& config, std::ostream* log) {
  using clock = std::chrono::steady_clock;
  config.validate();
  const auto start = clock::now();
  const auto& catalog = scene::Catalog::builtin();
  std::filesystem::create_directories(config.output_dir);

  TrainResult result;
  if (config.holdout_per_pair > 0) {
    Rng holdout_rng = Rng::stream(config.seed, "holdout");
    result.holdout = scene::make_holdout(holdout_rng, config.holdout_per_pair, catalog);
  }
  write_text(config.output_dir / "holdout.txt", result.holdout.to_text(catalog));
  write_text(config.output_dir / "run.cfg", config.to_text());

  const scene::SceneGenerator generator(catalog, config.layout, result.holdout, scene::PairFilter::TrainingOnly);
  Rng init = Rng::stream(config.seed, "init");
  agent::AgentModel model(config.model, init);
  nn::Adam adam;
  Rng policy = Rng::stream(config.seed, "policy");

  std::ofstream metrics(config.output_dir / "metrics.csv", std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write metrics to " + config.output_dir.string());
  metrics << kMetricsHeader << '\n';

  RollingWindow window(static_cast<std::size_t>(config.eval_window));
  long episode = 0;
  for (std::size_t s = 0; s < config.stages.size(); ++s) {
    const auto& stage = config.stages[s];
    const auto stage_start = clock::now();
    window.clear();
    MetricsRow row;
    auto emit = [&] {
      row = {episode, static_cast<int>(s + 1), stage.level, window.accuracy(), window.avg_steps(),
             window.loss_p(), window.loss_a(), window.loss_b()};
      result.metrics.push_back(row);
      metrics << to_csv(row) << '\n';
    };

    auto params = model.parameters();
    for (long i = 0; i < stage.episodes; ++i) {
      const std::uint64_t sample_seed = training_sample_seed(config.seed, episode);
      const auto sample = generator.generate_seeded(stage.level, sample_seed);
      agent::LossBreakdown loss;
      agent::Trajectory traj;
      try {
        traj = agent::rollout(model, sample, config.layout, agent::ActionMode::Sample, policy);
        loss = agent::total_loss(model, traj, stage.alpha, stage.beta);
      } catch (const std::invalid_argument& e) {
        throw DivergenceError(std::string("non-finite values during training: ") + e.what(), episode, sample_seed);
      }
      if (!std::isfinite(loss.total)) {
        throw DivergenceError("non-finite loss during training", episode, sample_seed);
      }
      adam.step(params, stage.lr);
      window.add(traj.outcome.correct, traj.outcome.moves, loss);
      ++episode;
      if ((i + 1) % config.metrics_every == 0 || i + 1 == stage.episodes) emit();
    }

    StageResult sr;
    sr.stage = stage;
    sr.checkpoint =
        config.output_dir / (stage_checkpoint_name(s, config.stages.size(), stage.level) + ".ckpt");
    model.save(sr.checkpoint, &adam);
    // The next stage starts from exactly what was written to disk.
    long steps = 0;
    model = agent::AgentModel::load(sr.checkpoint, &steps);
    adam.set_steps(steps);
    sr.last = row;
    sr.seconds = std::chrono::duration<double>(clock::now() - stage_start).count();
    if (log) {
      *log << "stage " << s + 1 << " (" << scene::to_string(stage.level) << "): " << stage.episodes
           << " episodes, rolling acc " << std::fixed << std::setprecision(4) << row.accuracy << ", avg steps "
           << row.avg_steps << ", " << std::setprecision(1) << sr.seconds << " s -> " << sr.checkpoint.string()
           << std::defaultfloat << '\n';
    }
    result.stages.push_back(sr);
  }
  metrics.flush();
  result.final_checkpoint = result.stages.back().checkpoint;
  result.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return result;
}

}  // namespace roep::training
