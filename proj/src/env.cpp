#include "roep/env.hpp"

#include <stdexcept>

#include <json.hpp>

namespace roep::env {

std::string to_string(Action action) {
  switch (action) {
    case Action::CircleLeft: return "circle_left";
    case Action::CircleRight: return "circle_right";
    case Action::Stop: return "stop";
  }
  return "?";
}

std::string to_string(ScriptedKind kind) {
  switch (kind) {
    case ScriptedKind::Passive: return "Passive";
    case ScriptedKind::Random: return "Random";
    case ScriptedKind::Exhaustive: return "Exhaustive";
  }
  return "?";
}

Observation observe(const scene::Sample& sample, geometry::Viewpoint viewpoint, const geometry::SceneLayout& layout) {
  Observation obs{};
  const auto seen = geometry::visible_set(viewpoint, sample.objects, layout);
  const std::size_t count = std::min<std::size_t>(seen.size(), kSlotCount);
  for (std::size_t slot = 0; slot < count; ++slot) {
    const auto& sighting = seen[slot];
    const int id = sample.objects[sighting.index].spec.id;
    if (id < 0 || id >= kIdentityWidth) {
      throw std::out_of_range("observe: object id outside the identity block");
    }
    const std::size_t base = slot * kSlotWidth;
    obs[base + static_cast<std::size_t>(id)] = 1.0;
    obs[base + kIdentityWidth] = sighting.apparent_height;
    obs[base + kIdentityWidth + 1] = sighting.bearing;
  }
  obs[kObservationSize - 1] = static_cast<double>(count) / kSlotCount;
  return obs;
}

std::vector<SlotView> decode(const Observation& observation) {
  std::vector<SlotView> slots;
  for (std::size_t slot = 0; slot < kSlotCount; ++slot) {
    const std::size_t base = slot * kSlotWidth;
    for (int id = 0; id < kIdentityWidth; ++id) {
      if (observation[base + static_cast<std::size_t>(id)] > 0.5) {
        slots.push_back({id, observation[base + kIdentityWidth], observation[base + kIdentityWidth + 1]});
        break;
      }
    }
  }
  return slots;
}

double reward(bool correct, int moves) {
  if (moves < 0 || moves > kMaxMoves) {
    throw std::out_of_range("reward: movement steps must be in [0, 6]");
  }
  return (correct ? 1.0 : -1.0) + 1.0 / (moves + 2);
}

Episode::Episode(scene::Sample sample, geometry::SceneLayout layout) : sample_(std::move(sample)), layout_(layout) {
  observation_ = observe(sample_, viewpoint_, layout_);
  viewpoints_.push_back(viewpoint_.index());
}

StepResult Episode::step(Action action) {
  if (done_) {
    throw std::logic_error("Episode::step called after the episode finished");
  }
  actions_.push_back(action);
  if (action == Action::Stop) {
    done_ = true;
    return {observation_, true};
  }
  viewpoint_ = action == Action::CircleLeft ? viewpoint_.left() : viewpoint_.right();
  ++moves_;
  viewpoints_.push_back(viewpoint_.index());
  observation_ = observe(sample_, viewpoint_, layout_);
  done_ = moves_ >= kMaxMoves;
  return {observation_, done_};
}

Outcome Episode::finish(bool prediction) const {
  if (!done_) {
    throw std::logic_error("Episode::finish called before the episode ended");
  }
  Outcome outcome;
  outcome.prediction = prediction;
  outcome.correct = prediction == sample_.label;
  outcome.moves = moves_;
  outcome.total_reward = reward(outcome.correct, moves_);
  return outcome;
}

Decision oracle_policy(const scene::Catalog& catalog, int query, const Observation& observation, int t) {
  const auto slots = decode(observation);
  for (const auto& s : slots) {
    if (s.identity == query) return {std::nullopt, true};
  }
  // With at most two objects on the table, seeing two settles the answer.
  if (slots.size() >= 2 || slots.empty() || t >= kMaxMoves) return {std::nullopt, false};
  if (catalog.category_of(slots.front().identity) > catalog.category_of(query)) {
    return {Action::CircleLeft, false};
  }
  return {std::nullopt, false};
}

Outcome run_oracle_episode(Episode& episode, const scene::Catalog& catalog) {
  while (!episode.done()) {
    const Decision d = oracle_policy(catalog, episode.sample().query, episode.observation(), episode.moves());
    if (d.predicts()) {
      episode.step(Action::Stop);
      return episode.finish(d.prediction);
    }
    episode.step(*d.action);
  }
  const Decision d = oracle_policy(catalog, episode.sample().query, episode.observation(), episode.moves());
  return episode.finish(d.prediction);
}

Action ScriptedPolicy::next(int t, Rng& rng) const {
  switch (kind_) {
    case ScriptedKind::Passive: return Action::Stop;
    case ScriptedKind::Random: return static_cast<Action>(rng.index(kActionCount));
    case ScriptedKind::Exhaustive: return t < kMaxMoves ? Action::CircleLeft : Action::Stop;
  }
  return Action::Stop;
}

EpisodeTrace make_trace(const Episode& episode, const Outcome& outcome, const scene::Catalog& catalog) {
  EpisodeTrace trace;
  trace.seed = episode.sample().seed;
  trace.scene_type = episode.sample().type;
  trace.query = catalog.at(episode.sample().query).name;
  trace.label = episode.sample().label;
  trace.actions = episode.actions();
  trace.viewpoints = episode.viewpoints();
  trace.prediction = outcome.prediction;
  trace.moves = outcome.moves;
  trace.reward = outcome.total_reward;
  return trace;
}

std::string trace_to_json(const EpisodeTrace& trace) {
  nlohmann::ordered_json j;
  j["seed"] = trace.seed;
  j["scene_type"] = scene::to_string(trace.scene_type);
  j["query"] = trace.query;
  j["label"] = trace.label;
  auto actions = nlohmann::ordered_json::array();
  for (Action a : trace.actions) actions.push_back(to_string(a));
  j["actions"] = std::move(actions);
  j["viewpoints"] = trace.viewpoints;
  j["prediction"] = trace.prediction;
  j["T"] = trace.moves;
  j["reward"] = trace.reward;
  return j.dump();
}

}  // namespace roep::env
