#include "roep/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace roep::training {

namespace {

std::string format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text, int line) {
  T value{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::runtime_error("config line " + std::to_string(line) + ": bad value '" + text + "' for '" + key +
                             "'");
  }
  return value;
}

}  // namespace

void CurriculumStage::validate() const {
  if (episodes < 1) throw std::invalid_argument("curriculum stage: episode budget must be at least 1");
  if (!(alpha > 0.0) || !(beta > 0.0) || !(lr > 0.0)) {
    throw std::invalid_argument("curriculum stage: alpha, beta and lr must be positive");
  }
}

std::string stage_checkpoint_name(std::size_t index, std::size_t count, scene::DataLevel level) {
  if (index + 1 == count) return "Final_Model";
  return "Model_" + scene::to_string(level).substr(0, 2);
}

std::vector<CurriculumStage> default_curriculum(const std::vector<long>& episodes, double lr) {
  if (episodes.size() != 4) throw std::invalid_argument("default curriculum needs four episode budgets");
  std::vector<CurriculumStage> stages;
  for (std::size_t i = 0; i < 4; ++i) {
    stages.push_back({scene::kAllLevels[i], episodes[i], i == 3 ? 1e-4 : 1e-2, 1.0, lr});
  }
  return stages;
}

RunConfig RunConfig::desk() {
  RunConfig c;
  c.model = agent::ModelConfig::desk();
  c.stages = default_curriculum({50000, 50000, 50000, 50000}, 1e-3);
  c.output_dir = "runs/desk";
  return c;
}

RunConfig RunConfig::full() {
  RunConfig c;
  c.model = agent::ModelConfig::full();
  c.stages = default_curriculum({900000, 900000, 400000, 400000}, 1e-4);
  c.output_dir = "runs/full";
  return c;
}

void RunConfig::validate() const {
  model.validate();
  layout.validate();
  if (stages.empty()) throw std::invalid_argument("run config: no curriculum stages");
  for (const auto& s : stages) s.validate();
  if (holdout_per_pair < 0 || holdout_per_pair > 49) {
    throw std::invalid_argument("run config: holdout_per_pair must be in [0, 49]");
  }
  if (eval_window < 1 || metrics_every < 1) {
    throw std::invalid_argument("run config: eval_window and metrics_every must be positive");
  }
  if (output_dir.empty()) throw std::invalid_argument("run config: output_dir is empty");
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "seed = " << seed << '\n'
      << "visual_width = " << model.visual_width << '\n'
      << "word_width = " << model.word_width << '\n'
      << "memory_width = " << model.memory_width << '\n'
      << "action_hidden = " << model.action_hidden << '\n'
      << "holdout_per_pair = " << holdout_per_pair << '\n'
      << "eval_window = " << eval_window << '\n'
      << "metrics_every = " << metrics_every << '\n'
      << "output_dir = " << output_dir.string() << '\n'
      << "table_radius = " << format(layout.table_radius) << '\n'
      << "table_height = " << format(layout.table_height) << '\n'
      << "ring_radius = " << format(layout.ring_radius) << '\n'
      << "ring_height = " << format(layout.ring_height) << '\n';
  for (const auto& s : stages) {
    out << "\n[stage " << scene::to_string(s.level) << "]\n"
        << "episodes = " << s.episodes << '\n'
        << "alpha = " << format(s.alpha) << '\n'
        << "beta = " << format(s.beta) << '\n'
        << "lr = " << format(s.lr) << '\n';
  }
  return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c = desk();
  std::vector<CurriculumStage> stages;
  bool in_stage = false;
  bool seen_key = false;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto where = "config line " + std::to_string(line_no) + ": ";

    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error(where + "unterminated section header");
      std::istringstream header(line.substr(1, line.size() - 2));
      std::string kind, level;
      header >> kind >> level;
      if (kind != "stage" || level.empty()) throw std::runtime_error(where + "expected [stage <level>]");
      CurriculumStage stage;
      try {
        stage.level = scene::parse_level(level);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error(where + e.what());
      }
      // Stage defaults follow the curriculum's alpha schedule by position.
      stage.alpha = stage.level == scene::DataLevel::L4_overall ? 1e-4 : 1e-2;
      stage.lr = c.stages.empty() ? 1e-4 : c.stages.front().lr;
      stages.push_back(stage);
      in_stage = true;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw std::runtime_error(where + "missing value for '" + key + "'");

    if (in_stage) {
      auto& s = stages.back();
      if (key == "episodes") s.episodes = parse_number<long>(key, value, line_no);
      else if (key == "alpha") s.alpha = parse_number<double>(key, value, line_no);
      else if (key == "beta") s.beta = parse_number<double>(key, value, line_no);
      else if (key == "lr") s.lr = parse_number<double>(key, value, line_no);
      else throw std::runtime_error(where + "unknown stage key '" + key + "'");
      continue;
    }

    if (key == "preset") {
      if (seen_key) throw std::runtime_error(where + "preset must come before every other key");
      if (value == "desk") c = desk();
      else if (value == "full") c = full();
      else throw std::runtime_error(where + "unknown preset '" + value + "'");
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value, line_no);
    } else if (key == "visual_width") {
      c.model.visual_width = parse_number<int>(key, value, line_no);
    } else if (key == "word_width") {
      c.model.word_width = parse_number<int>(key, value, line_no);
    } else if (key == "memory_width") {
      c.model.memory_width = parse_number<int>(key, value, line_no);
    } else if (key == "action_hidden") {
      c.model.action_hidden = parse_number<int>(key, value, line_no);
    } else if (key == "holdout_per_pair") {
      c.holdout_per_pair = parse_number<int>(key, value, line_no);
    } else if (key == "eval_window") {
      c.eval_window = parse_number<int>(key, value, line_no);
    } else if (key == "metrics_every") {
      c.metrics_every = parse_number<int>(key, value, line_no);
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else if (key == "lr") {
      const double lr = parse_number<double>(key, value, line_no);
      for (auto& s : c.stages) s.lr = lr;
    } else if (key == "table_radius") {
      c.layout.table_radius = parse_number<double>(key, value, line_no);
    } else if (key == "table_height") {
      c.layout.table_height = parse_number<double>(key, value, line_no);
    } else if (key == "ring_radius") {
      c.layout.ring_radius = parse_number<double>(key, value, line_no);
    } else if (key == "ring_height") {
      c.layout.ring_height = parse_number<double>(key, value, line_no);
    } else {
      throw std::runtime_error(where + "unknown key '" + key + "'");
    }
    seen_key = true;
  }
  if (!stages.empty()) c.stages = std::move(stages);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

void apply_seed_override(RunConfig& config) {
  const char* env = std::getenv("ROEP_SEED");
  if (!env || !*env) return;
  const std::string text(env);
  std::uint64_t seed = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("ROEP_SEED must be an unsigned integer, got '" + text + "'");
  }
  config.seed = seed;
}

}  // namespace roep::training
