#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace contaski {

// ---------------------------------------------------------------------------
// Simulated time. Integer microseconds so that sums of fixed delays are exact.
// ---------------------------------------------------------------------------
struct SimTime {
  std::int64_t us{0};

  static constexpr SimTime from_us(std::int64_t v) { return SimTime{v}; }
  static constexpr SimTime from_ms(double ms) {
    return SimTime{static_cast<std::int64_t>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5))};
  }
  static constexpr SimTime from_seconds(double s) {
    return SimTime{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
  }

  constexpr double seconds() const { return static_cast<double>(us) / 1e6; }
  constexpr double millis() const { return static_cast<double>(us) / 1e3; }

  constexpr auto operator<=>(const SimTime&) const = default;

  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.us + b.us}; }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.us - b.us}; }
  friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime{a.us * k}; }
};

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------
struct NodeId {
  std::uint32_t value{0};
  constexpr auto operator<=>(const NodeId&) const = default;
};

/// Reserved identifier of the access point. Never assigned to a sensing node.
inline constexpr NodeId kAccessPoint{std::numeric_limits<std::uint32_t>::max()};

inline std::string to_string(NodeId id) {
  return id == kAccessPoint ? std::string("AP") : std::to_string(id.value);
}

using TaskId = std::uint32_t;

struct Position {
  double x{0.0};
  double y{0.0};
  constexpr bool operator==(const Position&) const = default;
};

inline double distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// ---------------------------------------------------------------------------
// Capabilities
// ---------------------------------------------------------------------------
struct Capability {
  std::string name;

  Capability() = default;
  Capability(std::string n) : name(std::move(n)) {}  // NOLINT(google-explicit-constructor)
  Capability(const char* n) : name(n) {}              // NOLINT(google-explicit-constructor)

  auto operator<=>(const Capability&) const = default;
};

inline const std::vector<std::string>& default_universe() {
  static const std::vector<std::string> names{"temperature", "humidity",       "presence",
                                              "light",       "machine-status", "pressure",
                                              "reservoir-level"};
  return names;
}

/// Finite set of capabilities, kept sorted by name.
class CapabilitySet {
 public:
  CapabilitySet() = default;
  CapabilitySet(std::initializer_list<Capability> caps) : members_(caps) {}
  template <typename It>
  CapabilitySet(It first, It last) : members_(first, last) {}
  explicit CapabilitySet(const std::vector<std::string>& names) : members_(names.begin(), names.end()) {}

  bool empty() const { return members_.empty(); }
  std::size_t size() const { return members_.size(); }
  bool contains(const Capability& c) const { return members_.count(c) != 0; }
  void insert(Capability c) { members_.insert(std::move(c)); }

  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  /// Number of members shared with `other`.
  std::size_t intersection_size(const CapabilitySet& other) const {
    std::size_t n = 0;
    auto a = members_.begin();
    auto b = other.members_.begin();
    while (a != members_.end() && b != other.members_.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++n;
        ++a;
        ++b;
      }
    }
    return n;
  }

  bool is_subset_of(const CapabilitySet& other) const {
    return std::includes(other.members_.begin(), other.members_.end(), members_.begin(), members_.end());
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(members_.size());
    for (const auto& c : members_) out.push_back(c.name);
    return out;
  }

  bool operator==(const CapabilitySet&) const = default;

 private:
  std::set<Capability> members_;
};

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------
struct Task {
  TaskId task_id{0};
  CapabilitySet required;
  SimTime duration{};
  std::uint32_t quorum{1};

  bool operator==(const Task&) const = default;
};

enum class TaskStatus { kPending, kDispatched, kCompleted, kUnallocated };

inline std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kDispatched: return "dispatched";
    case TaskStatus::kCompleted: return "completed";
    case TaskStatus::kUnallocated: return "unallocated";
  }
  return "?";
}

inline constexpr bool is_legal_transition(TaskStatus from, TaskStatus to) {
  return (from == TaskStatus::kPending && to == TaskStatus::kDispatched) ||
         (from == TaskStatus::kDispatched && to == TaskStatus::kCompleted) ||
         (from == TaskStatus::kDispatched && to == TaskStatus::kUnallocated);
}

class IllegalTransition : public std::logic_error {
 public:
  IllegalTransition(TaskStatus from, TaskStatus to)
      : std::logic_error("illegal task status transition " + std::string(to_string(from)) + " -> " +
                         std::string(to_string(to))) {}
};

/// Returns `to` or throws IllegalTransition.
inline TaskStatus transition(TaskStatus from, TaskStatus to) {
  if (!is_legal_transition(from, to)) throw IllegalTransition(from, to);
  return to;
}

// ---------------------------------------------------------------------------
// Protocol messages
// ---------------------------------------------------------------------------
struct CapabilityDissemination {
  NodeId sender;
  CapabilitySet capabilities;
  std::uint32_t neigh_count{0};
  bool operator==(const CapabilityDissemination&) const = default;
};

struct LeaderRegister {
  NodeId leader;
  bool operator==(const LeaderRegister&) const = default;
};

struct TaskDispatch {
  Task task;
  bool operator==(const TaskDispatch&) const = default;
};

struct TaskAccept {
  NodeId leader;
  TaskId task_id{0};
  bool operator==(const TaskAccept&) const = default;
};

struct LeaderToCluster {
  TaskId task_id{0};
  SimTime duration{};
  bool operator==(const LeaderToCluster&) const = default;
};

using Message = std::variant<CapabilityDissemination, LeaderRegister, TaskDispatch, TaskAccept, LeaderToCluster>;

inline std::string_view message_type(const Message& m) {
  static constexpr std::string_view names[] = {"CapabilityDissemination", "LeaderRegister", "TaskDispatch",
                                               "TaskAccept", "LeaderToCluster"};
  return names[m.index()];
}

struct NeighborRecord {
  NodeId id;
  CapabilitySet capabilities;
  std::uint32_t neigh_count{0};
  double similarity{0.0};
  bool operator==(const NeighborRecord&) const = default;
};

}  // namespace contaski
