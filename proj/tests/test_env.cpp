#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "oracles.hpp"
#include "roep/env.hpp"

using namespace roep;
using namespace roep::env;
using geometry::SizeCategory;
using roep::testing::place;
using roep::testing::spec_named;

namespace {

const scene::Catalog& catalog() { return scene::Catalog::builtin(); }

scene::Sample lone(const char* name, bool label_query_is_it = true) {
  scene::Sample s;
  s.objects = {place(spec_named(name), 0.05, 0.1, 0.4)};
  s.query = *catalog().find(name);
  s.label = label_query_is_it;
  return s;
}

/// Observation with one visible object of the given catalog id.
Observation one_visible(int id) {
  Observation obs{};
  obs[static_cast<std::size_t>(id)] = 1.0;
  obs[kIdentityWidth] = 0.1;
  obs[kObservationSize - 1] = 0.5;
  return obs;
}

int first_in(SizeCategory c) { return catalog().ids_in(c).front(); }
int second_in(SizeCategory c) { return catalog().ids_in(c).back(); }

}  // namespace

TEST(Reward, Arithmetic) {
  EXPECT_DOUBLE_EQ(reward(true, 0), 1.5);
  EXPECT_DOUBLE_EQ(reward(false, 0), -0.5);
  EXPECT_DOUBLE_EQ(reward(true, 6), 1.125);
  for (int t = 0; t <= kMaxMoves; ++t) {
    EXPECT_LT(reward(false, t), 0.0);
    EXPECT_GT(reward(true, t), 0.0);
    EXPECT_GE(reward(false, t), -1.0);
    EXPECT_LE(reward(false, t), -1.0 / 8.0 + 1e-15);
    EXPECT_GE(reward(true, t), 9.0 / 8.0 - 1e-15);
  }
  EXPECT_THROW(reward(true, -1), std::out_of_range);
  EXPECT_THROW(reward(true, 7), std::out_of_range);
}

TEST(Observation, LoneObjectFillsOneSlot) {
  const auto s = lone("marble");
  const auto obs = observe(s, geometry::Viewpoint(0), {});
  EXPECT_DOUBLE_EQ(obs[kObservationSize - 1], 0.5);
  const auto slots = decode(obs);
  ASSERT_EQ(slots.size(), 1u);
  EXPECT_EQ(slots[0].identity, s.query);
  double one_hot = 0.0;
  for (int i = 0; i < kIdentityWidth; ++i) one_hot += obs[static_cast<std::size_t>(i)];
  EXPECT_DOUBLE_EQ(one_hot, 1.0);
  for (int i = kSlotWidth; i < kObservationSize - 1; ++i) EXPECT_EQ(obs[static_cast<std::size_t>(i)], 0.0);
}

TEST(Observation, EmptySceneIsAllZero) {
  const scene::Sample empty;
  const auto obs = observe(empty, geometry::Viewpoint(0), {});
  for (double v : obs) EXPECT_EQ(v, 0.0);
}

TEST(Observation, OccludedSceneShowsOnlyTheOccluder) {
  const scene::SceneGenerator gen(catalog());
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = gen.generate_seeded(scene::DataLevel::L3_2occ, seed);
    const auto slots = decode(observe(s, geometry::Viewpoint(0), gen.layout()));
    ASSERT_EQ(slots.size(), 1u);
    EXPECT_EQ(slots[0].identity, s.objects[0].spec.id);
  }
}

TEST(Episode, MovesWrapAndCap) {
  Episode e(lone("apple"));
  EXPECT_EQ(e.viewpoint().index(), 0);
  EXPECT_EQ(e.moves(), 0);
  e.step(Action::CircleLeft);
  EXPECT_EQ(e.viewpoint().index(), 11);
  e.step(Action::CircleRight);
  e.step(Action::CircleRight);
  EXPECT_EQ(e.viewpoint().index(), 1);
  EXPECT_EQ(e.moves(), 3);
  EXPECT_FALSE(e.done());
  for (int i = 0; i < 2; ++i) e.step(Action::CircleRight);
  const auto last = e.step(Action::CircleRight);
  EXPECT_TRUE(last.done);
  EXPECT_EQ(e.moves(), kMaxMoves);
  EXPECT_THROW(e.step(Action::CircleLeft), std::logic_error);
  EXPECT_THROW(e.step(Action::Stop), std::logic_error);
  const auto outcome = e.finish(true);
  EXPECT_TRUE(outcome.correct);
  EXPECT_DOUBLE_EQ(outcome.total_reward, 1.125);
  EXPECT_EQ(e.viewpoints(), (std::vector<int>{0, 11, 0, 1, 2, 3, 4}));
}

TEST(Episode, ViewpointMatchesMoveBalance) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    Episode e(lone("mug"));
    int balance = 0;
    while (!e.done()) {
      const auto a = static_cast<Action>(rng.index(3));
      e.step(a);
      if (a == Action::CircleRight) ++balance;
      if (a == Action::CircleLeft) --balance;
      EXPECT_EQ(e.viewpoint().index(), ((balance % 12) + 12) % 12);
    }
  }
}

TEST(Episode, StopEndsWithoutMoving) {
  Episode e(lone("key"));
  EXPECT_THROW(e.finish(true), std::logic_error);
  e.step(Action::Stop);
  EXPECT_TRUE(e.done());
  const auto outcome = e.finish(false);
  EXPECT_FALSE(outcome.correct);
  EXPECT_EQ(outcome.moves, 0);
  EXPECT_DOUBLE_EQ(outcome.total_reward, -0.5);
}

// Reasoning table: rows are the category of the single visible object, columns the
// category of the queried object.
TEST(OraclePolicy, ReasoningTableCells) {
  const SizeCategory cats[] = {SizeCategory::Large, SizeCategory::Medium, SizeCategory::Small};
  const bool move[3][3] = {{false, true, true}, {false, false, true}, {false, false, false}};
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      const int visible = first_in(cats[row]);
      const int query = second_in(cats[col]);
      const auto d = oracle_policy(catalog(), query, one_visible(visible), 0);
      if (move[row][col]) {
        ASSERT_FALSE(d.predicts()) << row << "," << col;
        EXPECT_EQ(*d.action, Action::CircleLeft);
      } else {
        ASSERT_TRUE(d.predicts()) << row << "," << col;
        EXPECT_FALSE(d.prediction);
      }
    }
  }
}

TEST(OraclePolicy, SeenQueryOrTwoObjectsOrCapPredicts) {
  const int large = first_in(SizeCategory::Large);
  const int small = first_in(SizeCategory::Small);
  auto d = oracle_policy(catalog(), large, one_visible(large), 0);
  EXPECT_TRUE(d.predicts());
  EXPECT_TRUE(d.prediction);

  Observation two = one_visible(large);
  two[kSlotWidth + static_cast<std::size_t>(first_in(SizeCategory::Medium))] = 1.0;
  two[kObservationSize - 1] = 1.0;
  d = oracle_policy(catalog(), small, two, 0);
  EXPECT_TRUE(d.predicts());
  EXPECT_FALSE(d.prediction);

  d = oracle_policy(catalog(), small, one_visible(large), kMaxMoves);
  EXPECT_TRUE(d.predicts());
}

TEST(OraclePolicy, PerfectOnGeneratedData) {
  const scene::SceneGenerator gen(catalog());
  for (const auto level : scene::kAllLevels) {
    int correct = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      Episode e(gen.generate_seeded(level, seed), gen.layout());
      const auto outcome = run_oracle_episode(e, catalog());
      correct += outcome.correct;
      EXPECT_LE(outcome.moves, kMaxMoves);
    }
    EXPECT_EQ(correct, 500) << scene::to_string(level);
  }
}

TEST(Scripted, PassiveAndExhaustiveStepCounts) {
  Rng rng(1);
  const ScriptedPolicy passive(ScriptedKind::Passive);
  const ScriptedPolicy exhaustive(ScriptedKind::Exhaustive);
  Episode p(lone("apple"));
  p.step(passive.next(p.moves(), rng));
  EXPECT_TRUE(p.done());
  EXPECT_EQ(p.moves(), 0);
  Episode x(lone("apple"));
  while (!x.done()) x.step(exhaustive.next(x.moves(), rng));
  EXPECT_EQ(x.moves(), 6);
  EXPECT_EQ(x.viewpoints(), (std::vector<int>{0, 11, 10, 9, 8, 7, 6}));
}

TEST(Scripted, RandomStepDistributionClosedForm) {
  EXPECT_NEAR(roep::testing::random_strategy_expected_steps(6), 1330.0 / 729.0, 1e-12);
  Rng rng(8);
  const ScriptedPolicy random(ScriptedKind::Random);
  long total = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    Episode e(lone("dice"));
    while (!e.done()) e.step(random.next(e.moves(), rng));
    total += e.moves();
  }
  EXPECT_NEAR(static_cast<double>(total) / n, 1330.0 / 729.0, 0.05);
}

TEST(Trace, JsonFields) {
  Episode e(lone("mug"));
  e.step(Action::CircleRight);
  e.step(Action::Stop);
  const auto outcome = e.finish(true);
  const auto j = nlohmann::json::parse(trace_to_json(make_trace(e, outcome, catalog())));
  EXPECT_EQ(j["query"], "mug");
  EXPECT_EQ(j["actions"], nlohmann::json::array({"circle_right", "stop"}));
  EXPECT_EQ(j["viewpoints"], nlohmann::json::array({0, 1}));
  EXPECT_EQ(j["T"], 1);
  EXPECT_NEAR(j["reward"].get<double>(), 1.0 + 1.0 / 3.0, 1e-12);
}
