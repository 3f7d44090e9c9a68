#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "contaski/types.hpp"

namespace contaski {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlacementStrategy { kExplicit, kUniformRandom, kGrid };

struct Area {
  double width{200.0};
  double height{200.0};
};

struct NodeSpec {
  NodeId id;
  std::optional<Position> pos;
  CapabilitySet capabilities;
};

/// Random capability assignment: every node carries `base`, and each other
/// universe member independently with probability `extra_prob`.
struct CapabilityAssignment {
  std::vector<std::string> base{"temperature", "humidity", "presence"};
  double extra_prob{0.97};
};

struct GeneratedNodes {
  std::uint32_t count{0};
  PlacementStrategy placement{PlacementStrategy::kUniformRandom};
  CapabilityAssignment capabilities;
};

struct RadioConfig {
  double range_m{50.0};
  double delay_ms{2.0};
  double loss_prob{0.0};
  double ap_loss_prob{0.0};
};

struct ProtocolConfig {
  double similarity_threshold{0.65};
  std::uint32_t capability_rounds{3};
  double jitter_max_ms{500.0};
  double confirmation_window_ms{5000.0};
  double warmup_s{150.0};
  /// Leaders wait uniformly in [0, max] before answering a dispatch.
  double accept_backoff_max_ms{40.0};

  /// Capability rounds are spread over the warm-up: rounds + 1 equal slots.
  SimTime round_period() const { return SimTime::from_seconds(warmup_s / (capability_rounds + 1)); }
  /// Point after the last round at which a node commits its leader view and,
  /// if it elected itself, registers with the access point.
  SimTime leader_commit_time() const {
    return SimTime::from_seconds(warmup_s * (capability_rounds - 0.5) / (capability_rounds + 1));
  }
};

struct TaskSpec {
  Task task;
  SimTime dispatch_at;
};

struct TaskSchedule {
  double start_s{150.0};
  double interval_s{60.0};
};

struct TaskGenerator {
  std::vector<std::string> base_required{"temperature", "humidity", "presence"};
  std::vector<std::string> extra_pool{"light", "machine-status", "pressure", "reservoir-level"};
  std::uint32_t max_extra{4};
};

struct GeneratedTasks {
  std::uint32_t count{10};
  TaskSchedule schedule;
  TaskGenerator generator;
  double duration_s{60.0};
  std::uint32_t quorum{1};
};

struct ScenarioConfig {
  std::uint64_t seed{1};
  Area area;
  std::vector<std::string> universe{default_universe()};
  std::variant<std::vector<NodeSpec>, GeneratedNodes> nodes{std::vector<NodeSpec>{}};
  RadioConfig radio;
  ProtocolConfig protocol;
  std::variant<std::vector<TaskSpec>, GeneratedTasks> tasks{GeneratedTasks{}};
  double horizon_s{800.0};
  std::uint64_t max_events{20'000'000};

  SimTime horizon() const { return SimTime::from_seconds(horizon_s); }
  SimTime delay() const { return SimTime::from_ms(radio.delay_ms); }
  SimTime confirmation_window() const { return SimTime::from_ms(protocol.confirmation_window_ms); }
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------
namespace detail {

using json = nlohmann::json;

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

inline PlacementStrategy parse_placement(const std::string& s) {
  if (s == "explicit") return PlacementStrategy::kExplicit;
  if (s == "uniform" || s == "uniform-random" || s == "random") return PlacementStrategy::kUniformRandom;
  if (s == "grid") return PlacementStrategy::kGrid;
  throw ConfigError("unknown placement strategy '" + s + "'");
}

inline Position parse_position(const json& j) {
  if (j.is_array() && j.size() == 2) return Position{j[0].get<double>(), j[1].get<double>()};
  if (j.is_object()) return Position{j.at("x").get<double>(), j.at("y").get<double>()};
  throw ConfigError("position must be [x, y] or {\"x\": .., \"y\": ..}");
}

inline std::vector<NodeSpec> parse_node_list(const json& arr) {
  std::vector<NodeSpec> nodes;
  for (const auto& n : arr) {
    NodeSpec spec;
    spec.id = NodeId{n.at("id").get<std::uint32_t>()};
    if (auto it = n.find("pos"); it != n.end() && !it->is_null()) spec.pos = parse_position(*it);
    spec.capabilities = CapabilitySet(n.at("capabilities").get<std::vector<std::string>>());
    nodes.push_back(std::move(spec));
  }
  return nodes;
}

inline GeneratedNodes parse_generated_nodes(const json& j) {
  GeneratedNodes g;
  g.count = j.at("count").get<std::uint32_t>();
  if (auto it = j.find("placement"); it != j.end()) g.placement = parse_placement(it->get<std::string>());
  if (auto it = j.find("capability_assignment"); it != j.end()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "random") {
        throw ConfigError("unknown capability_assignment '" + it->get<std::string>() + "'");
      }
    } else {
      read_opt(*it, "base", g.capabilities.base);
      read_opt(*it, "extra_prob", g.capabilities.extra_prob);
    }
  }
  return g;
}

inline std::vector<TaskSpec> parse_task_list(const json& arr, const TaskSchedule& schedule) {
  std::vector<TaskSpec> tasks;
  std::size_t index = 0;
  for (const auto& t : arr) {
    TaskSpec spec;
    spec.task.task_id = t.at("id").get<TaskId>();
    spec.task.required = CapabilitySet(t.at("required").get<std::vector<std::string>>());
    spec.task.duration = SimTime::from_seconds(t.at("duration_s").get<double>());
    spec.task.quorum = 1;
    if (auto it = t.find("quorum"); it != t.end()) {
      const auto q = it->get<std::int64_t>();
      spec.task.quorum = q < 1 ? 0u : static_cast<std::uint32_t>(q);
    }
    double at = schedule.start_s + schedule.interval_s * static_cast<double>(index);
    read_opt(t, "dispatch_s", at);
    spec.dispatch_at = SimTime::from_seconds(at);
    tasks.push_back(std::move(spec));
    ++index;
  }
  return tasks;
}

inline TaskSchedule parse_schedule(const json& j) {
  TaskSchedule s;
  read_opt(j, "start_s", s.start_s);
  read_opt(j, "interval_s", s.interval_s);
  return s;
}

inline GeneratedTasks parse_generated_tasks(const json& j) {
  GeneratedTasks g;
  read_opt(j, "count", g.count);
  if (auto it = j.find("schedule"); it != j.end()) g.schedule = parse_schedule(*it);
  if (auto it = j.find("generator"); it != j.end()) {
    read_opt(*it, "base_required", g.generator.base_required);
    read_opt(*it, "extra_pool", g.generator.extra_pool);
    read_opt(*it, "max_extra", g.generator.max_extra);
  }
  read_opt(j, "duration_s", g.duration_s);
  if (auto it = j.find("quorum"); it != j.end()) {
    const auto q = it->get<std::int64_t>();
    g.quorum = q < 1 ? 0u : static_cast<std::uint32_t>(q);
  }
  return g;
}

}  // namespace detail

/// Builds a scenario from its JSON form. Structural problems (wrong types,
/// missing required keys) throw ConfigError; semantic checks are left to
/// validate_scenario.
inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
  using detail::read_opt;
  ScenarioConfig c;
  try {
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    read_opt(j, "seed", c.seed);
    if (auto it = j.find("area"); it != j.end()) {
      read_opt(*it, "width", c.area.width);
      read_opt(*it, "height", c.area.height);
    }
    read_opt(j, "universe", c.universe);
    if (auto it = j.find("nodes"); it != j.end()) {
      if (it->is_array()) {
        c.nodes = detail::parse_node_list(*it);
      } else {
        c.nodes = detail::parse_generated_nodes(*it);
      }
    }
    if (auto it = j.find("radio"); it != j.end()) {
      read_opt(*it, "range_m", c.radio.range_m);
      read_opt(*it, "delay_ms", c.radio.delay_ms);
      read_opt(*it, "loss_prob", c.radio.loss_prob);
      read_opt(*it, "ap_loss_prob", c.radio.ap_loss_prob);
    }
    if (auto it = j.find("protocol"); it != j.end()) {
      auto& p = c.protocol;
      read_opt(*it, "similarity_threshold", p.similarity_threshold);
      read_opt(*it, "capability_rounds", p.capability_rounds);
      read_opt(*it, "jitter_max_ms", p.jitter_max_ms);
      read_opt(*it, "confirmation_window_ms", p.confirmation_window_ms);
      read_opt(*it, "warmup_s", p.warmup_s);
      read_opt(*it, "accept_backoff_max_ms", p.accept_backoff_max_ms);
    }
    if (auto it = j.find("tasks"); it != j.end()) {
      if (it->is_array()) {
        c.tasks = detail::parse_task_list(*it, TaskSchedule{});
      } else if (it->contains("list")) {
        TaskSchedule schedule;
        if (auto s = it->find("schedule"); s != it->end()) schedule = detail::parse_schedule(*s);
        c.tasks = detail::parse_task_list(it->at("list"), schedule);
      } else {
        c.tasks = detail::parse_generated_tasks(*it);
      }
    }
    read_opt(j, "horizon_s", c.horizon_s);
    read_opt(j, "max_events", c.max_events);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  return c;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline ScenarioConfig load_scenario(const std::string& path) { return parse_scenario(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------
struct ValidationResult {
  std::optional<ScenarioConfig> config;
  std::vector<std::string> errors;

  bool ok() const { return config.has_value(); }
};

/// Checks every semantic constraint and reports all violations at once.
inline ValidationResult validate_scenario(ScenarioConfig config) {
  std::vector<std::string> errors;
  auto fail = [&](std::string msg) { errors.push_back(std::move(msg)); };

  std::set<std::string> universe;
  for (const auto& name : config.universe) {
    if (!universe.insert(name).second) fail("duplicate capability '" + name + "' in universe");
  }
  if (universe.empty()) fail("empty capability universe");

  auto check_names = [&](const std::string& where, const std::vector<std::string>& names) {
    for (const auto& n : names) {
      if (!universe.count(n)) fail("capability outside universe: '" + n + "' (" + where + ")");
    }
  };

  if (!(config.area.width > 0.0 && config.area.height > 0.0)) fail("area dimensions must be positive");

  if (const auto* list = std::get_if<std::vector<NodeSpec>>(&config.nodes)) {
    if (list->empty()) fail("empty network");
    std::set<NodeId> seen;
    for (const auto& n : *list) {
      const std::string where = "node " + std::to_string(n.id.value);
      if (n.id == kAccessPoint) fail(where + " uses the identifier reserved for the access point");
      if (!seen.insert(n.id).second) fail("duplicate NodeId " + std::to_string(n.id.value));
      if (n.capabilities.empty()) fail(where + " has an empty capability set");
      check_names(where, n.capabilities.names());
      if (n.pos && (n.pos->x < 0.0 || n.pos->x > config.area.width || n.pos->y < 0.0 ||
                    n.pos->y > config.area.height)) {
        fail(where + " is positioned outside the area");
      }
    }
  } else {
    const auto& g = std::get<GeneratedNodes>(config.nodes);
    if (g.count == 0) fail("empty network");
    if (g.placement == PlacementStrategy::kExplicit) fail("generated nodes cannot use explicit placement");
    check_names("capability_assignment.base", g.capabilities.base);
    if (!(g.capabilities.extra_prob >= 0.0 && g.capabilities.extra_prob <= 1.0)) {
      fail("capability_assignment.extra_prob must lie in [0, 1]");
    }
    if (g.capabilities.base.empty() && g.capabilities.extra_prob <= 0.0) {
      fail("capability_assignment can only produce empty capability sets");
    }
  }

  const auto& r = config.radio;
  if (!(r.range_m > 0.0)) fail("radio.range_m must be positive");
  if (!(r.delay_ms > 0.0)) fail("radio.delay_ms must be positive");
  if (!(r.loss_prob >= 0.0 && r.loss_prob <= 1.0)) fail("radio.loss_prob must lie in [0, 1]");
  if (!(r.ap_loss_prob >= 0.0 && r.ap_loss_prob <= 1.0)) fail("radio.ap_loss_prob must lie in [0, 1]");

  const auto& p = config.protocol;
  if (!(p.similarity_threshold >= 0.0 && p.similarity_threshold <= 1.0)) {
    fail("protocol.similarity_threshold must lie in [0, 1]");
  }
  if (p.capability_rounds < 1) fail("protocol.capability_rounds must be at least 1");
  if (!(p.warmup_s > 0.0)) fail("protocol.warmup_s must be positive");
  if (!(p.jitter_max_ms >= 0.0)) fail("protocol.jitter_max_ms must be non-negative");
  if (!(p.accept_backoff_max_ms >= 0.0)) fail("protocol.accept_backoff_max_ms must be non-negative");
  if (!(p.confirmation_window_ms > 0.0)) fail("protocol.confirmation_window_ms must be positive");
  if (p.capability_rounds >= 1 && p.warmup_s > 0.0) {
    // Accumulated jitter must not push the last round past the commit point.
    const double half_period_ms = 500.0 * p.warmup_s / (p.capability_rounds + 1);
    if (p.jitter_max_ms * p.capability_rounds >= half_period_ms) {
      fail("protocol.jitter_max_ms too large for the warm-up: rounds x jitter must stay below half a round period");
    }
  }

  if (const auto* list = std::get_if<std::vector<TaskSpec>>(&config.tasks)) {
    std::set<TaskId> seen;
    for (const auto& t : *list) {
      const std::string where = "task " + std::to_string(t.task.task_id);
      if (!seen.insert(t.task.task_id).second) fail("duplicate task id " + std::to_string(t.task.task_id));
      if (t.task.required.empty()) fail(where + " requires no capabilities");
      check_names(where, t.task.required.names());
      if (t.task.duration.us <= 0) fail("non-positive duration (" + where + ")");
      if (t.task.quorum < 1) fail(where + ": quorum must be at least 1");
      if (t.dispatch_at.us < 0) fail(where + ": negative dispatch time");
    }
  } else {
    const auto& g = std::get<GeneratedTasks>(config.tasks);
    check_names("task generator base_required", g.generator.base_required);
    check_names("task generator extra_pool", g.generator.extra_pool);
    if (g.generator.max_extra > g.generator.extra_pool.size()) {
      fail("task generator max_extra exceeds the extra pool size");
    }
    if (g.generator.base_required.empty() && g.generator.max_extra == 0 && g.count > 0) {
      fail("task generator can only produce tasks without required capabilities");
    }
    if (!(g.duration_s > 0.0) || SimTime::from_seconds(g.duration_s).us <= 0) {
      fail("non-positive duration (task generator)");
    }
    if (g.quorum < 1) fail("task generator: quorum must be at least 1");
    if (g.schedule.start_s < 0.0 || g.schedule.interval_s < 0.0) fail("task schedule must be non-negative");
  }

  if (!(config.horizon_s >= 0.0)) fail("horizon_s must be non-negative");
  if (config.max_events == 0) fail("max_events must be positive");

  ValidationResult out;
  out.errors = std::move(errors);
  if (out.errors.empty()) out.config = std::move(config);
  return out;
}

}  // namespace contaski
