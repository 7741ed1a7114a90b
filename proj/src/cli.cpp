#include "roep/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "roep/agent.hpp"
#include "roep/catalog.hpp"
#include "roep/config.hpp"
#include "roep/evaluation.hpp"
#include "roep/gradcheck.hpp"
#include "roep/rng.hpp"
#include "roep/scenegen.hpp"
#include "roep/training.hpp"

namespace roep::cli {

namespace {

namespace fs = std::filesystem;
using training::EvalSettings;

/// Raised for bad user input discovered after parsing (exit code 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

agent::AgentModel load_model(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("missing checkpoint " + path.string());
  return agent::AgentModel::load(path);
}

/// Explicit file, else the holdout.txt a training run left next to the checkpoint.
scene::HoldoutSet find_holdout(const std::string& explicit_path, const fs::path& checkpoint) {
  const auto& catalog = scene::Catalog::builtin();
  if (!explicit_path.empty()) return scene::HoldoutSet::parse(read_file(explicit_path), catalog);
  if (!checkpoint.empty()) {
    const auto sibling = checkpoint.parent_path() / "holdout.txt";
    if (fs::exists(sibling)) return scene::HoldoutSet::parse(read_file(sibling), catalog);
  }
  return {};
}

scene::PairFilter parse_filter(const std::string& text) {
  if (text == "all") return scene::PairFilter::All;
  if (text == "training" || text == "training_only") return scene::PairFilter::TrainingOnly;
  if (text == "holdout" || text == "holdout_only") return scene::PairFilter::HoldoutOnly;
  throw UsageError("unknown pair filter '" + text + "' (all, training, holdout)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad seed list '" + text + "'");
    }
  }
  if (seeds.empty()) throw UsageError("empty seed list");
  return seeds;
}

training::RunConfig load_run_config(const std::string& path) {
  training::RunConfig config;
  if (path.empty()) {
    config = training::RunConfig::desk();
  } else {
    if (!fs::exists(path)) throw UsageError("cannot read config " + path);
    try {
      config = training::RunConfig::load(path);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
  }
  try {
    training::apply_seed_override(config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return config;
}

struct EvalOptions {
  long n = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
};

void add_eval_options(CLI::App* cmd, EvalOptions& o) {
  cmd->add_option("--n", o.n, "Evaluation episodes per level")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Evaluation seed");
  cmd->add_option("--workers", o.workers, "Evaluation threads")->check(CLI::PositiveNumber);
}

EvalSettings to_settings(const EvalOptions& o) {
  EvalSettings s;
  s.episodes = o.n;
  s.seed = o.seed;
  s.workers = o.workers;
  return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robotic object existence prediction lab"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // gen
  std::string gen_level;
  long gen_n = 0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Export generated samples as JSON lines");
  gen->add_option("--level", gen_level, "Data level (L1..L4)")->required();
  gen->add_option("--n", gen_n, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Root seed");
  gen->add_option("--out", gen_out, "Output file (default: standard output)");

  // train
  std::string train_config, train_out;
  auto* train = app.add_subcommand("train", "Run the curriculum");
  train->add_option("--config", train_config, "Run config file (default: desk preset)");
  train->add_option("--out", train_out, "Override the output directory");

  // eval
  std::string eval_ckpt, eval_level, eval_policy = "model", eval_filter = "all", eval_holdout;
  long eval_trace = 0;
  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint (or the oracle) and print a JSON report");
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file");
  eval->add_option("--level", eval_level, "Data level (default: all)");
  eval->add_option("--policy", eval_policy, "model, oracle, passive, random or exhaustive");
  eval->add_option("--filter", eval_filter, "Pair filter: all, training or holdout");
  eval->add_option("--holdout", eval_holdout, "Holdout pair file (default: holdout.txt next to the checkpoint)");
  eval->add_option("--trace", eval_trace, "Also print the first N episode traces as JSON lines");
  add_eval_options(eval, eval_opts);

  // baselines
  std::string base_ckpt;
  long base_finetune = 50000;
  double base_lr = 1e-3;
  EvalOptions base_opts;
  auto* baselines = app.add_subcommand("baselines", "Compare against passive, random and exhaustive strategies");
  baselines->add_option("--ckpt", base_ckpt, "Final checkpoint")->required();
  baselines->add_option("--finetune", base_finetune, "Prediction fine-tuning episodes per scripted baseline");
  baselines->add_option("--lr", base_lr, "Fine-tuning learning rate");
  add_eval_options(baselines, base_opts);

  // matrix
  std::string matrix_dir;
  EvalOptions matrix_opts;
  auto* matrix = app.add_subcommand("matrix", "Evaluate every stage checkpoint on every level");
  matrix->add_option("--dir", matrix_dir, "Directory with the stage checkpoints")->required();
  add_eval_options(matrix, matrix_opts);

  // holdout
  int holdout_per_pair = 7;
  std::string holdout_config, holdout_seeds = "1,2,3", holdout_out;
  EvalOptions holdout_opts;
  auto* holdout = app.add_subcommand("holdout", "Train with held-out pairs and test generalization");
  holdout->add_option("--per-pair", holdout_per_pair, "Pairs held out per category family")
      ->required()
      ->check(CLI::Range(1, 49));
  holdout->add_option("--config", holdout_config, "Run config file (default: desk preset)");
  holdout->add_option("--seeds", holdout_seeds, "Comma-separated training seeds");
  holdout->add_option("--out", holdout_out, "Override the output directory");
  add_eval_options(holdout, holdout_opts);

  // gradcheck
  int grad_instances = 100;
  int grad_episodes = 3;
  std::uint64_t grad_seed = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every layer, loss and the model");
  gradcheck->add_option("--instances", grad_instances, "Random instances per layer")->check(CLI::PositiveNumber);
  gradcheck->add_option("--episodes", grad_episodes, "Random episodes for the model check")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", grad_seed, "Seed");

  // oracle-check
  EvalOptions oracle_opts;
  auto* oracle = app.add_subcommand("oracle-check", "Verify the rule agent is perfect at every level");
  add_eval_options(oracle, oracle_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      const auto level = scene::parse_level(gen_level);
      const auto& catalog = scene::Catalog::builtin();
      const scene::SceneGenerator generator(catalog);
      std::ofstream file;
      std::ostream* sink = &out;
      if (!gen_out.empty()) {
        if (const auto parent = fs::path(gen_out).parent_path(); !parent.empty()) fs::create_directories(parent);
        file.open(gen_out, std::ios::trunc);
        if (!file) throw UsageError("cannot write " + gen_out);
        sink = &file;
      }
      for (long i = 0; i < gen_n; ++i) {
        const auto sample =
            generator.generate_seeded(level, derive_seed(gen_seed, "scenegen", static_cast<std::uint64_t>(i)));
        *sink << scene::sample_to_json(sample, catalog) << '\n';
      }
      return kExitOk;
    }

    if (*train) {
      auto config = load_run_config(train_config);
      if (!train_out.empty()) config.output_dir = train_out;
      out << "training seed " << config.seed << " -> " << config.output_dir.string() << '\n';
      const auto result = training::train(config, &out);
      out << "final checkpoint " << result.final_checkpoint.string() << " (" << std::fixed << std::setprecision(1)
          << result.seconds << " s)\n";
      return kExitOk;
    }

    if (*eval) {
      const auto policy = training::parse_policy(eval_policy);
      std::optional<agent::AgentModel> model;
      if (policy != training::PolicyKind::Oracle || !eval_ckpt.empty()) {
        if (eval_ckpt.empty()) throw UsageError("eval: --ckpt is required for policy " + eval_policy);
        model = load_model(eval_ckpt);
      }
      auto settings = to_settings(eval_opts);
      settings.filter = parse_filter(eval_filter);
      settings.holdout = find_holdout(eval_holdout, eval_ckpt);
      if (settings.filter == scene::PairFilter::HoldoutOnly && settings.holdout.empty()) {
        throw UsageError("eval: the holdout filter needs a non-empty holdout set (--holdout)");
      }
      const agent::AgentModel* ptr = model ? &*model : nullptr;
      std::vector<scene::DataLevel> levels;
      if (eval_level.empty()) {
        levels.assign(std::begin(scene::kAllLevels), std::end(scene::kAllLevels));
      } else {
        levels.push_back(scene::parse_level(eval_level));
      }
      training::EvalReport report{eval_ckpt.empty() ? training::to_string(policy) : eval_ckpt, {}};
      for (const auto level : levels) {
        report.rows.push_back(training::evaluate(ptr, policy, level, settings));
        if (eval_trace > 0) {
          for (const auto& t : training::evaluation_traces(ptr, policy, level, settings, eval_trace)) {
            out << env::trace_to_json(t) << '\n';
          }
        }
      }
      out << report.to_json() << '\n';
      return kExitOk;
    }

    if (*baselines) {
      const auto model = load_model(base_ckpt);
      auto settings = to_settings(base_opts);
      settings.holdout = find_holdout("", base_ckpt);
      training::BaselineSettings bs;
      bs.finetune_episodes = base_finetune;
      bs.lr = base_lr;
      bs.seed = base_opts.seed;
      const auto reports = training::baseline_comparison(model, bs, settings, &err);
      out << training::format_table(reports);
      for (const auto& r : reports) out << r.to_json() << '\n';
      return kExitOk;
    }

    if (*matrix) {
      if (!fs::is_directory(matrix_dir)) throw UsageError("not a directory: " + matrix_dir);
      const auto reports = training::cross_stage_matrix(matrix_dir, to_settings(matrix_opts));
      out << training::format_table(reports);
      for (const auto& r : reports) out << r.to_json() << '\n';
      return kExitOk;
    }

    if (*holdout) {
      auto config = load_run_config(holdout_config);
      if (!holdout_out.empty()) config.output_dir = holdout_out;
      const auto result = training::holdout_experiment(config, holdout_per_pair, parse_seeds(holdout_seeds),
                                                       to_settings(holdout_opts), &err);
      auto reports = result.per_seed;
      reports.push_back(result.mean);
      out << training::format_table(reports);
      for (const auto& r : reports) out << r.to_json() << '\n';
      return kExitOk;
    }

    if (*gradcheck) {
      Rng rng = Rng::stream(grad_seed, "gradcheck");
      auto entries = nn::layer_gradchecks(rng, grad_instances);
      const auto model_entries = agent::model_gradchecks(rng, grad_episodes);
      entries.insert(entries.end(), model_entries.begin(), model_entries.end());
      bool ok = true;
      for (const auto& e : entries) {
        out << std::left << std::setw(36) << e.name << " max rel err " << std::scientific << std::setprecision(3)
            << e.max_relative_error << std::defaultfloat << "  (" << e.instances << " instances) "
            << (e.passed() ? "ok" : "FAIL") << '\n';
        ok = ok && e.passed();
      }
      out << (ok ? "all gradients match" : "gradient check FAILED") << " (tolerance " << nn::kGradcheckTolerance
          << ")\n";
      return ok ? kExitOk : kExitVerification;
    }

    if (*oracle) {
      const auto settings = to_settings(oracle_opts);
      bool ok = true;
      for (const auto level : scene::kAllLevels) {
        const auto r = training::evaluate(nullptr, training::PolicyKind::Oracle, level, settings);
        const bool pass = r.correct == r.episodes && r.avg_steps() <= env::kMaxMoves;
        out << std::left << std::setw(12) << scene::to_string(level) << " accuracy " << std::fixed
            << std::setprecision(4) << r.accuracy() << "  avg steps " << r.avg_steps() << std::defaultfloat << "  "
            << (pass ? "ok" : "FAIL") << '\n';
        ok = ok && pass;
      }
      return ok ? kExitOk : kExitVerification;
    }
  } catch (const training::DivergenceError& e) {
    err << "error: " << e.what() << " (episode " << e.episode() << ", sample seed " << e.sample_seed() << ")\n";
    return kExitDivergence;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace roep::cli
