#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "roep/evaluation.hpp"
#include "roep/training.hpp"

using namespace roep;
using namespace roep::training;
using scene::DataLevel;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("roep-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

RunConfig tiny_run(const std::string& name, long episodes = 150) {
  auto c = RunConfig::desk();
  c.model.visual_width = 8;
  c.model.memory_width = 8;
  c.model.action_hidden = 8;
  c.stages = default_curriculum({episodes, episodes, episodes, episodes}, 1e-3);
  c.metrics_every = 50;
  c.eval_window = 40;
  c.output_dir = temp_dir(name);
  return c;
}

}  // namespace

TEST(Config, PresetsMatchTheProtocol) {
  const auto desk = RunConfig::desk();
  ASSERT_EQ(desk.stages.size(), 4u);
  EXPECT_EQ(desk.stages[0].level, DataLevel::L1_1vis);
  EXPECT_EQ(desk.stages[3].level, DataLevel::L4_overall);
  EXPECT_EQ(desk.stages[0].alpha, 1e-2);
  EXPECT_EQ(desk.stages[2].alpha, 1e-2);
  EXPECT_EQ(desk.stages[3].alpha, 1e-4);
  for (const auto& s : desk.stages) {
    EXPECT_EQ(s.beta, 1.0);
    EXPECT_EQ(s.episodes, 50000);
  }
  const auto full = RunConfig::full();
  EXPECT_EQ(full.stages[0].episodes, 900000);
  EXPECT_EQ(full.stages[3].episodes, 400000);
  EXPECT_EQ(full.stages[0].lr, 1e-4);
  EXPECT_EQ(full.model.memory_width, 256);
  EXPECT_EQ(stage_checkpoint_name(0, 4, DataLevel::L1_1vis), "Model_L1");
  EXPECT_EQ(stage_checkpoint_name(3, 4, DataLevel::L4_overall), "Final_Model");
}

TEST(Config, TextRoundTrip) {
  for (auto c : {RunConfig::desk(), RunConfig::full(), tiny_run("roundtrip")}) {
    c.seed = 77;
    c.holdout_per_pair = 7;
    c.stages[1].alpha = 0.123456789012345;
    EXPECT_EQ(RunConfig::parse(c.to_text()), c);
  }
}

TEST(Config, ParseOverridesAndSections) {
  const auto c = RunConfig::parse(
      "preset = full\nseed = 9\nlr = 0.002\n# comment\n[stage L1]\nepisodes = 10\n[stage L4]\nepisodes = 20\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.model.memory_width, 256);
  ASSERT_EQ(c.stages.size(), 2u);
  EXPECT_EQ(c.stages[0].episodes, 10);
  EXPECT_EQ(c.stages[1].level, DataLevel::L4_overall);
  EXPECT_EQ(c.stages[1].alpha, 1e-4);
}

TEST(Config, ShippedFilesMatchThePresets) {
  const std::filesystem::path configs = std::filesystem::path(ROEP_SOURCE_DIR) / "configs";
  EXPECT_EQ(RunConfig::load(configs / "desk.cfg"), RunConfig::desk());
  EXPECT_EQ(RunConfig::load(configs / "full.cfg"), RunConfig::full());
}

TEST(Config, ParseErrorsNameTheLine) {
  try {
    RunConfig::parse("seed = 1\nbogus = 2\n");
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(RunConfig::parse("seed = 1\npreset = full\n"), std::runtime_error);
  EXPECT_THROW(RunConfig::parse("seed = x\n"), std::runtime_error);
  EXPECT_THROW(RunConfig::parse("[stage L9]\n"), std::runtime_error);
  EXPECT_THROW(RunConfig::parse("holdout_per_pair = 50\n"), std::exception);
  EXPECT_THROW(RunConfig::load("/nonexistent/roep.cfg"), std::runtime_error);
}

TEST(Config, SeedEnvironmentOverride) {
  auto c = RunConfig::desk();
  ::setenv("ROEP_SEED", "42", 1);
  apply_seed_override(c);
  EXPECT_EQ(c.seed, 42u);
  ::setenv("ROEP_SEED", "abc", 1);
  EXPECT_THROW(apply_seed_override(c), std::invalid_argument);
  ::unsetenv("ROEP_SEED");
  apply_seed_override(c);
  EXPECT_EQ(c.seed, 42u);
}

TEST(RollingWindow, AveragesTheMostRecentEntries) {
  RollingWindow w(3);
  const agent::LossBreakdown loss{1.0, 1.0, 0.0, 0.0};
  w.add(false, 6, loss);
  w.add(true, 0, loss);
  w.add(true, 3, loss);
  w.add(true, 0, loss);
  EXPECT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w.accuracy(), 1.0);
  EXPECT_DOUBLE_EQ(w.avg_steps(), 1.0);
  w.clear();
  EXPECT_EQ(w.size(), 0u);
}

TEST(Training, ShortRunIsDeterministicAndWritesArtifacts) {
  auto a = tiny_run("det-a");
  auto b = tiny_run("det-b");
  const auto ra = train(a);
  const auto rb = train(b);
  ASSERT_EQ(ra.metrics.size(), rb.metrics.size());
  EXPECT_EQ(ra.metrics, rb.metrics);
  EXPECT_EQ(ra.metrics.size(), 12u);
  for (const char* name : {"Model_L1.ckpt", "Model_L2.ckpt", "Model_L3.ckpt", "Final_Model.ckpt", "metrics.csv",
                           "run.cfg", "holdout.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(a.output_dir / name)) << name;
  }
  EXPECT_EQ(RunConfig::load(a.output_dir / "run.cfg"), a);
  const auto ma = agent::AgentModel::load(ra.final_checkpoint).to_tensors();
  const auto mb = agent::AgentModel::load(rb.final_checkpoint).to_tensors();
  EXPECT_EQ(ma, mb);
  std::ifstream csv(a.output_dir / "metrics.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, kMetricsHeader);
}

TEST(Training, StageHandOffIsBitExact) {
  // Training stages 1-2 and then stages 1-3 must leave identical stage-2
  // checkpoints, and the stage-3 run resumes from the stage-2 file.
  auto two = tiny_run("handoff-two");
  two.stages.resize(2);
  train(two);
  auto three = tiny_run("handoff-three");
  three.stages.resize(3);
  train(three);
  long steps_two = 0;
  long steps_three = 0;
  const auto m2 = agent::AgentModel::load(two.output_dir / "Final_Model.ckpt", &steps_two);
  const auto m3 = agent::AgentModel::load(three.output_dir / "Model_L2.ckpt", &steps_three);
  EXPECT_EQ(steps_two, 300);
  EXPECT_EQ(steps_two, steps_three);
  nn::Adam adam;
  EXPECT_EQ(m2.to_tensors(&adam), m3.to_tensors(&adam));
}

TEST(Training, HoldoutPairsAreWrittenAndExcluded) {
  auto c = tiny_run("holdout", 20);
  c.holdout_per_pair = 7;
  const auto result = train(c);
  EXPECT_EQ(result.holdout.size(), 21u);
  std::ifstream in(c.output_dir / "holdout.txt");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(scene::HoldoutSet::parse(text, scene::Catalog::builtin()), result.holdout);
}

TEST(Evaluation, OracleIsPerfectEverywhere) {
  EvalSettings s;
  s.episodes = 1000;
  for (const auto level : scene::kAllLevels) {
    const auto r = evaluate(nullptr, PolicyKind::Oracle, level, s);
    EXPECT_EQ(r.correct, r.episodes) << scene::to_string(level);
    EXPECT_LE(r.avg_steps(), 6.0);
  }
  EXPECT_THROW(evaluate(nullptr, PolicyKind::Model, DataLevel::L1_1vis, s), std::invalid_argument);
}

TEST(Evaluation, WorkerCountDoesNotChangeTheReport) {
  Rng init(3);
  auto config = agent::ModelConfig::desk();
  config.memory_width = 16;
  const agent::AgentModel model(config, init);
  EvalSettings s;
  s.episodes = 600;
  for (const auto kind : {PolicyKind::Model, PolicyKind::Random}) {
    s.workers = 1;
    const auto one = evaluate(&model, kind, DataLevel::L4_overall, s);
    s.workers = 3;
    const auto three = evaluate(&model, kind, DataLevel::L4_overall, s);
    EXPECT_EQ(one, three) << to_string(kind);
  }
}

TEST(Evaluation, ScriptedStepCounts) {
  Rng init(3);
  const agent::AgentModel model(agent::ModelConfig::desk(), init);
  EvalSettings s;
  s.episodes = 300;
  EXPECT_EQ(evaluate(&model, PolicyKind::Passive, DataLevel::L3_2occ, s).moves, 0);
  EXPECT_DOUBLE_EQ(evaluate(&model, PolicyKind::Exhaustive, DataLevel::L3_2occ, s).avg_steps(), 6.0);
}

TEST(Evaluation, HoldoutFilterNeedsPairs) {
  EvalSettings s;
  s.episodes = 10;
  s.filter = scene::PairFilter::HoldoutOnly;
  EXPECT_THROW(evaluate(nullptr, PolicyKind::Oracle, DataLevel::L2_2vis, s), std::invalid_argument);
  s.episodes = 0;
  s.filter = scene::PairFilter::All;
  EXPECT_THROW(evaluate(nullptr, PolicyKind::Oracle, DataLevel::L2_2vis, s), std::invalid_argument);
}

TEST(Evaluation, MatrixNeedsEveryStageCheckpoint) {
  const auto dir = temp_dir("matrix-missing");
  std::filesystem::create_directories(dir);
  EXPECT_THROW(cross_stage_matrix(dir, EvalSettings{}), std::runtime_error);
}

TEST(Evaluation, PolicyNamesRoundTrip) {
  for (const auto kind : {PolicyKind::Model, PolicyKind::Passive, PolicyKind::Random, PolicyKind::Exhaustive,
                          PolicyKind::Oracle}) {
    EXPECT_EQ(parse_policy(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_policy("clairvoyant"), std::invalid_argument);
}
