#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "contaski/types.hpp"

namespace contaski {

struct AcceptRecord {
  NodeId leader;
  SimTime at;
  bool operator==(const AcceptRecord&) const = default;
};

struct DispatchRecord {
  TaskId task_id{0};
  SimTime dispatch_time;
  SimTime window_closes;
  std::vector<NodeId> leaders_at_dispatch;
  std::vector<AcceptRecord> accepts;
  std::vector<AcceptRecord> late_accepts;
  /// Arrival of the first accept, when the task left the pending pipeline.
  std::optional<SimTime> first_accept;
  TaskStatus final_status{TaskStatus::kDispatched};
  std::optional<SimTime> lat;
};

struct TaskEntry {
  Task task;
  SimTime scheduled_at;
  TaskStatus status{TaskStatus::kPending};
};

struct ApState {
  std::set<NodeId> leaders;
  std::vector<TaskEntry> task_list;
  std::map<TaskId, DispatchRecord> dispatch_log;
  std::vector<std::string> violations;

  TaskEntry* find_task(TaskId id) {
    auto it = std::find_if(task_list.begin(), task_list.end(), [&](const auto& e) { return e.task.task_id == id; });
    return it == task_list.end() ? nullptr : &*it;
  }
};

/// Returns true if the leader was not yet known.
inline bool handle_leader_register(ApState& state, const LeaderRegister& msg) {
  return state.leaders.insert(msg.leader).second;
}

struct DispatchAction {
  Task task;
  std::vector<NodeId> recipients;
  SimTime window_closes;
  /// No leader was registered; the task went straight to unallocated.
  bool unallocated{false};
};

/// Dispatches the earliest pending task (schedule order, then list order) to
/// a snapshot of the current leader registry.
inline std::optional<DispatchAction> dispatch_task(ApState& state, SimTime now, SimTime confirmation_window) {
  TaskEntry* next = nullptr;
  for (auto& e : state.task_list) {
    if (e.status != TaskStatus::kPending) continue;
    if (!next || e.scheduled_at < next->scheduled_at) next = &e;
  }
  if (!next) return std::nullopt;

  next->status = transition(next->status, TaskStatus::kDispatched);
  DispatchRecord rec;
  rec.task_id = next->task.task_id;
  rec.dispatch_time = now;
  rec.window_closes = now + confirmation_window;
  rec.leaders_at_dispatch.assign(state.leaders.begin(), state.leaders.end());

  DispatchAction action{next->task, rec.leaders_at_dispatch, rec.window_closes, false};
  if (rec.leaders_at_dispatch.empty()) {
    next->status = transition(next->status, TaskStatus::kUnallocated);
    rec.final_status = TaskStatus::kUnallocated;
    rec.window_closes = now;
    action.window_closes = now;
    action.unallocated = true;
  }
  state.dispatch_log[rec.task_id] = std::move(rec);
  return action;
}

enum class AcceptResult { kCounted, kDuplicate, kLate, kUnknownTask, kNotALeader };

inline std::string_view to_string(AcceptResult r) {
  switch (r) {
    case AcceptResult::kCounted: return "counted";
    case AcceptResult::kDuplicate: return "duplicate";
    case AcceptResult::kLate: return "late";
    case AcceptResult::kUnknownTask: return "unknown_task";
    case AcceptResult::kNotALeader: return "not_a_leader";
  }
  return "?";
}

inline AcceptResult handle_task_accept(ApState& state, const TaskAccept& msg, SimTime now) {
  auto it = state.dispatch_log.find(msg.task_id);
  if (it == state.dispatch_log.end()) {
    state.violations.push_back("accept for unknown task " + std::to_string(msg.task_id) + " from " +
                               to_string(msg.leader));
    return AcceptResult::kUnknownTask;
  }
  auto& rec = it->second;
  const auto& snap = rec.leaders_at_dispatch;
  if (std::find(snap.begin(), snap.end(), msg.leader) == snap.end()) {
    state.violations.push_back("accept for task " + std::to_string(msg.task_id) + " from unregistered node " +
                               to_string(msg.leader));
    return AcceptResult::kNotALeader;
  }
  if (rec.final_status != TaskStatus::kDispatched || now > rec.window_closes) {
    rec.late_accepts.push_back({msg.leader, now});
    return AcceptResult::kLate;
  }
  for (const auto& a : rec.accepts) {
    if (a.leader == msg.leader) return AcceptResult::kDuplicate;
  }
  rec.accepts.push_back({msg.leader, now});
  if (!rec.first_accept) rec.first_accept = now;
  return AcceptResult::kCounted;
}

/// Finalizes a dispatch. LAT is the last counted accept minus the dispatch time.
inline void close_confirmation_window(ApState& state, TaskId task_id, SimTime /*now*/) {
  auto it = state.dispatch_log.find(task_id);
  if (it == state.dispatch_log.end() || it->second.final_status != TaskStatus::kDispatched) return;
  auto& rec = it->second;
  auto* entry = state.find_task(task_id);
  if (rec.accepts.empty()) {
    rec.final_status = TaskStatus::kUnallocated;
  } else {
    rec.final_status = TaskStatus::kCompleted;
    SimTime last = rec.accepts.front().at;
    for (const auto& a : rec.accepts) last = std::max(last, a.at);
    rec.lat = last - rec.dispatch_time;
  }
  if (entry) entry->status = transition(entry->status, rec.final_status);
}

}  // namespace contaski
