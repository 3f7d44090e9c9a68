#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "contaski/rng.hpp"
#include "contaski/scenario.hpp"
#include "contaski/similarity.hpp"
#include "contaski/types.hpp"

namespace contaski {

struct ProtocolParams {
  SimilarityThreshold threshold;
  std::uint32_t capability_rounds{3};
  SimTime round_period{SimTime::from_seconds(37.5)};
  SimTime jitter_max{SimTime::from_ms(500)};

  static ProtocolParams from(const ProtocolConfig& c) {
    return ProtocolParams{SimilarityThreshold(c.similarity_threshold), c.capability_rounds, c.round_period(),
                          SimTime::from_ms(c.jitter_max_ms)};
  }
};

struct NodeState {
  NodeId id;
  CapabilitySet capabilities;
  Position position;
  std::map<NodeId, NeighborRecord> neighbors;
  std::set<NodeId> cluster;  // always contains id
  std::optional<NodeId> leader;
  bool registered{false};
  /// Set once warm-up dissemination is over; registration is only allowed after it.
  bool committed{false};
  std::uint32_t rounds_sent{0};
  std::map<TaskId, SimTime> running_tasks;
  std::vector<TaskId> completed_tasks;

  static NodeState make(NodeId id, CapabilitySet caps, Position pos) {
    NodeState s;
    s.id = id;
    s.capabilities = std::move(caps);
    s.position = pos;
    s.cluster.insert(id);
    return s;
  }

  std::uint32_t neighbor_count() const { return static_cast<std::uint32_t>(neighbors.size()); }
  bool is_leader() const { return leader && *leader == id; }
};

// ---------------------------------------------------------------------------
// Cluster configuration
// ---------------------------------------------------------------------------

struct CapabilityRound {
  CapabilityDissemination message;
  std::optional<SimTime> next_send;
};

/// Builds this round's announcement and the time of the next one (none after
/// the last round). Returns nullopt when every round was already sent.
inline std::optional<CapabilityRound> send_capability_message(NodeState& state, SimTime now,
                                                              const ProtocolParams& params, RandomStream& jitter) {
  if (state.rounds_sent >= params.capability_rounds) return std::nullopt;
  CapabilityRound out{CapabilityDissemination{state.id, state.capabilities, state.neighbor_count()}, std::nullopt};
  ++state.rounds_sent;
  if (state.rounds_sent < params.capability_rounds) {
    const auto j = jitter.uniform_int(0, params.jitter_max.us);
    out.next_send = now + params.round_period + SimTime::from_us(j);
  }
  return out;
}

struct NodeUpdate {
  bool cluster_changed{false};
  bool leader_changed{false};
  std::optional<LeaderRegister> register_msg;
};

/// Elects the candidate with the largest announced neighborhood among self
/// and cluster members. Self counts with its current neighbor table size.
/// Ties go to the lowest id.
inline NodeUpdate select_leader(NodeState& state) {
  NodeUpdate upd;
  NodeId best = state.id;
  std::uint32_t best_count = state.neighbor_count();
  for (const auto& member : state.cluster) {
    if (member == state.id) continue;
    const auto count = state.neighbors.at(member).neigh_count;
    if (count > best_count || (count == best_count && member < best)) {
      best = member;
      best_count = count;
    }
  }
  if (state.leader != best) {
    state.leader = best;
    upd.leader_changed = true;
  }
  if (state.committed && best == state.id && !state.registered) {
    state.registered = true;
    upd.register_msg = LeaderRegister{state.id};
  }
  return upd;
}

inline NodeUpdate handle_capability_message(NodeState& state, const CapabilityDissemination& msg,
                                            SimilarityThreshold threshold) {
  auto& rec = state.neighbors[msg.sender];
  rec.id = msg.sender;
  rec.capabilities = msg.capabilities;
  rec.neigh_count = msg.neigh_count;
  rec.similarity = capability_similarity(state.capabilities, msg.capabilities);

  bool cluster_changed = false;
  if (rec.similarity >= threshold.value()) {
    cluster_changed = state.cluster.insert(msg.sender).second;
  } else {
    cluster_changed = state.cluster.erase(msg.sender) != 0;
  }
  auto upd = select_leader(state);
  upd.cluster_changed = cluster_changed;
  return upd;
}

/// Ends the warm-up for this node: the current election result is final and a
/// self-elected leader registers with the access point.
inline NodeUpdate commit_leader(NodeState& state) {
  state.committed = true;
  return select_leader(state);
}

// ---------------------------------------------------------------------------
// Task allocation, leader and member side
// ---------------------------------------------------------------------------

enum class DispatchOutcome { kAccepted, kMissingCapabilities, kQuorumNotMet, kNotLeader, kAlreadyRunning };

inline std::string_view to_string(DispatchOutcome o) {
  switch (o) {
    case DispatchOutcome::kAccepted: return "accepted";
    case DispatchOutcome::kMissingCapabilities: return "missing_capabilities";
    case DispatchOutcome::kQuorumNotMet: return "quorum_not_met";
    case DispatchOutcome::kNotLeader: return "not_leader";
    case DispatchOutcome::kAlreadyRunning: return "already_running";
  }
  return "?";
}

struct DispatchDecision {
  DispatchOutcome outcome{DispatchOutcome::kNotLeader};
  std::optional<TaskAccept> accept;
  std::optional<LeaderToCluster> to_cluster;
  std::vector<NodeId> members;  // cluster minus the leader
  SimTime completes_at{};
};

/// A leader accepts iff it owns every required capability and its cluster
/// (itself included) reaches the quorum. Otherwise it stays silent.
inline DispatchDecision handle_task_dispatch(NodeState& state, const Task& task, SimTime now) {
  DispatchDecision d;
  if (!state.is_leader()) {
    d.outcome = DispatchOutcome::kNotLeader;
    return d;
  }
  if (!required_subset(task.required, state.capabilities)) {
    d.outcome = DispatchOutcome::kMissingCapabilities;
    return d;
  }
  if (state.cluster.size() < task.quorum) {
    d.outcome = DispatchOutcome::kQuorumNotMet;
    return d;
  }
  if (state.running_tasks.count(task.task_id)) {
    d.outcome = DispatchOutcome::kAlreadyRunning;
    return d;
  }
  d.outcome = DispatchOutcome::kAccepted;
  d.accept = TaskAccept{state.id, task.task_id};
  d.to_cluster = LeaderToCluster{task.task_id, task.duration};
  for (const auto& m : state.cluster) {
    if (m != state.id) d.members.push_back(m);
  }
  d.completes_at = now + task.duration;
  state.running_tasks[task.task_id] = d.completes_at;
  return d;
}

enum class MemberOutcome { kStarted, kDuplicate, kNotFromLeader };

struct MemberUpdate {
  MemberOutcome outcome{MemberOutcome::kNotFromLeader};
  SimTime completes_at{};
};

inline MemberUpdate handle_leader_to_cluster(NodeState& state, NodeId sender, const LeaderToCluster& msg,
                                             SimTime now) {
  if (!state.leader || *state.leader != sender) return {MemberOutcome::kNotFromLeader, {}};
  if (state.running_tasks.count(msg.task_id)) return {MemberOutcome::kDuplicate, state.running_tasks[msg.task_id]};
  const SimTime done = now + msg.duration;
  state.running_tasks[msg.task_id] = done;
  return {MemberOutcome::kStarted, done};
}

/// Returns false if the task was not running.
inline bool complete_task(NodeState& state, TaskId task_id) {
  if (state.running_tasks.erase(task_id) == 0) return false;
  state.completed_tasks.push_back(task_id);
  return true;
}

// ---------------------------------------------------------------------------
// Invariants
// ---------------------------------------------------------------------------

/// Structural invariants of a node's view. Empty result means consistent.
inline std::vector<std::string> check_node_invariants(const NodeState& s, SimilarityThreshold t) {
  std::vector<std::string> v;
  const std::string who = "node " + to_string(s.id) + ": ";
  if (!s.cluster.count(s.id)) v.push_back(who + "cluster does not contain self");
  for (const auto& [nid, rec] : s.neighbors) {
    if (rec.similarity != capability_similarity(s.capabilities, rec.capabilities)) {
      v.push_back(who + "stale similarity for neighbor " + to_string(nid));
    }
  }
  for (const auto& m : s.cluster) {
    if (m == s.id) continue;
    auto it = s.neighbors.find(m);
    if (it == s.neighbors.end()) {
      v.push_back(who + "cluster member " + to_string(m) + " is not a neighbor");
    } else if (it->second.similarity < t.value()) {
      v.push_back(who + "cluster member " + to_string(m) + " below threshold");
    }
  }
  if (s.leader) {
    auto count_of = [&](NodeId n) -> std::uint32_t {
      if (n == s.id) return s.neighbor_count();
      auto it = s.neighbors.find(n);
      return it == s.neighbors.end() ? 0 : it->second.neigh_count;
    };
    if (!s.cluster.count(*s.leader)) {
      v.push_back(who + "leader outside cluster");
    } else {
      for (const auto& m : s.cluster) {
        const auto cm = count_of(m);
        const auto cl = count_of(*s.leader);
        if (cm > cl || (cm == cl && m < *s.leader)) {
          v.push_back(who + "leader " + to_string(*s.leader) + " does not maximize neighborhood size");
          break;
        }
      }
    }
  }
  return v;
}

}  // namespace contaski
