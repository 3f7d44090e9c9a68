#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "contaski/codec.hpp"
#include "contaski/rng.hpp"
#include "contaski/types.hpp"

namespace contaski {

enum class TraceKind {
  kSend,
  kDeliver,
  kDrop,
  kClusterUpdate,
  kLeaderElected,
  kLeaderRegister,
  kTaskDispatch,
  kTaskAccept,
  kTaskStart,
  kTaskComplete,
  kWindowClose,
};

inline constexpr std::array<std::string_view, 11> kTraceKindNames{
    "send",           "deliver",    "drop",       "cluster_update", "leader_elected", "leader_register",
    "task_dispatch",  "task_accept", "task_start", "task_complete",  "window_close"};

inline std::string_view to_string(TraceKind k) { return kTraceKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<TraceKind> parse_trace_kind(std::string_view s) {
  for (std::size_t i = 0; i < kTraceKindNames.size(); ++i) {
    if (kTraceKindNames[i] == s) return static_cast<TraceKind>(i);
  }
  return std::nullopt;
}

/// One line of the trace: {t, kind, from, to, detail}. `from`/`to` hold a node
/// id, "AP", "*" (radio broadcast), an id list (multicast) or null.
struct TraceEvent {
  SimTime t;
  TraceKind kind{TraceKind::kSend};
  ojson from;
  ojson to;
  ojson detail;

  bool involves(NodeId n) const {
    const ojson id = encode_node(n);
    if (from == id || to == id) return true;
    return to.is_array() && std::find(to.begin(), to.end(), id) != to.end();
  }
};

inline std::string to_json_line(const TraceEvent& e) {
  ojson j;
  j["t"] = e.t.seconds();
  j["kind"] = std::string(to_string(e.kind));
  j["from"] = e.from;
  j["to"] = e.to;
  j["detail"] = e.detail.is_null() ? ojson::object() : e.detail;
  return j.dump();
}

/// Throws DecodeError on malformed input.
inline TraceEvent parse_trace_line(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DecodeError("trace line is not an object");
  for (const char* key : {"t", "kind", "from", "to", "detail"}) {
    if (!j.contains(key)) throw DecodeError(std::string("missing field '") + key + "'");
  }
  if (!j["t"].is_number()) throw DecodeError("field 't' is not a number");
  if (!j["kind"].is_string()) throw DecodeError("field 'kind' is not a string");
  const auto kind = parse_trace_kind(j["kind"].get<std::string>());
  if (!kind) throw DecodeError("unknown kind '" + j["kind"].get<std::string>() + "'");
  TraceEvent e;
  e.t = SimTime::from_us(std::llround(j["t"].get<double>() * 1e6));
  e.kind = *kind;
  e.from = j["from"];
  e.to = j["to"];
  e.detail = j["detail"];
  return e;
}

class TraceReadError : public std::runtime_error {
 public:
  TraceReadError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::vector<TraceEvent> read_trace(std::istream& in) {
  std::vector<TraceEvent> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      events.push_back(parse_trace_line(line));
    } catch (const DecodeError& e) {
      throw TraceReadError(n, e.what());
    }
  }
  return events;
}

inline std::vector<TraceEvent> read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  return read_trace(in);
}

class Trace {
 public:
  void add(SimTime t, TraceKind kind, ojson from, ojson to, ojson detail = ojson::object()) {
    events_.push_back(TraceEvent{t, kind, std::move(from), std::move(to), std::move(detail)});
  }

  const std::vector<TraceEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  std::string serialize() const {
    std::string out;
    for (const auto& e : events_) {
      out += to_json_line(e);
      out += '\n';
    }
    return out;
  }

  std::uint64_t digest() const { return fnv1a64(serialize()); }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << serialize();
  }

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace contaski
