#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "contaski/ap_protocol.hpp"
#include "contaski/channel.hpp"
#include "contaski/codec.hpp"
#include "contaski/event_queue.hpp"
#include "contaski/node_protocol.hpp"
#include "contaski/placement.hpp"
#include "contaski/rng.hpp"
#include "contaski/scenario.hpp"
#include "contaski/trace.hpp"

namespace contaski {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  ScenarioConfig config;
  std::vector<NodeState> nodes;  // ascending id
  ApState ap;
  Trace trace;
  std::uint64_t events_processed{0};
  /// Protocol-level anomalies (dispatch at a non-leader, member message from a
  /// foreign leader, ...). Informational; they do not abort the run.
  std::vector<std::string> log;

  const NodeState& node(NodeId id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const NodeState& n, NodeId v) { return n.id < v; });
    if (it == nodes.end() || it->id != id) throw std::out_of_range("no node " + to_string(id));
    return *it;
  }
};

/// Nodes and tasks of a scenario after placement and random generation.
struct MaterializedScenario {
  std::vector<NodeState> nodes;
  std::vector<TaskEntry> tasks;
};

/// Resolves generated nodes and tasks with the scenario's named sub-streams
/// ("placement", "capabilities", "tasks"), so changing one knob leaves the
/// other draws untouched.
inline MaterializedScenario materialize(const ScenarioConfig& c) {
  MaterializedScenario m;
  RandomStream placement(c.seed, "placement");
  RandomStream capabilities(c.seed, "capabilities");
  RandomStream task_rng(c.seed, "tasks");

  if (const auto* list = std::get_if<std::vector<NodeSpec>>(&c.nodes)) {
    for (const auto& spec : *list) {
      Position p;
      if (spec.pos) {
        p = *spec.pos;
      } else {
        p = place_nodes(PlacementStrategy::kUniformRandom, c.area, 1, placement).front();
      }
      m.nodes.push_back(NodeState::make(spec.id, spec.capabilities, p));
    }
  } else {
    const auto& g = std::get<GeneratedNodes>(c.nodes);
    const auto positions = place_nodes(g.placement, c.area, g.count, placement);
    for (std::uint32_t i = 0; i < g.count; ++i) {
      CapabilitySet caps(g.capabilities.base);
      for (const auto& name : c.universe) {
        if (caps.contains(Capability{name})) continue;
        if (capabilities.bernoulli(g.capabilities.extra_prob)) caps.insert(Capability{name});
      }
      // Fall back to one random capability rather than deploy a mute node.
      if (caps.empty()) {
        caps.insert(Capability{c.universe[static_cast<std::size_t>(
            capabilities.uniform_int(0, static_cast<std::int64_t>(c.universe.size()) - 1))]});
      }
      m.nodes.push_back(NodeState::make(NodeId{i}, std::move(caps), positions[i]));
    }
  }
  std::sort(m.nodes.begin(), m.nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  if (const auto* list = std::get_if<std::vector<TaskSpec>>(&c.tasks)) {
    for (const auto& t : *list) m.tasks.push_back(TaskEntry{t.task, t.dispatch_at, TaskStatus::kPending});
  } else {
    const auto& g = std::get<GeneratedTasks>(c.tasks);
    for (std::uint32_t i = 0; i < g.count; ++i) {
      Task t;
      t.task_id = i + 1;
      t.required = CapabilitySet(g.generator.base_required);
      auto pool = g.generator.extra_pool;
      const auto extra = static_cast<std::size_t>(task_rng.uniform_int(0, g.generator.max_extra));
      for (std::size_t k = 0; k < extra; ++k) {
        const auto pick = static_cast<std::size_t>(
            task_rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(pool.size()) - 1));
        std::swap(pool[k], pool[pick]);
        t.required.insert(Capability{pool[k]});
      }
      t.duration = SimTime::from_seconds(g.duration_s);
      t.quorum = g.quorum;
      const auto at = SimTime::from_seconds(g.schedule.start_s + g.schedule.interval_s * i);
      m.tasks.push_back(TaskEntry{std::move(t), at, TaskStatus::kPending});
    }
  }
  return m;
}

namespace sim {

struct CapabilityRoundDue {
  NodeId node;
};
struct LeaderCommitDue {
  NodeId node;
};
struct MessageArrival {
  std::uint64_t msg_id;
  NodeId from;
  NodeId to;
  Message message;
};
struct DispatchDecisionDue {
  NodeId leader;
  Task task;
};
struct TaskDispatchDue {};
struct WindowCloseDue {
  TaskId task_id;
};
struct TaskCompletionDue {
  NodeId node;
  TaskId task_id;
};

using Payload = std::variant<CapabilityRoundDue, LeaderCommitDue, MessageArrival, DispatchDecisionDue,
                             TaskDispatchDue, WindowCloseDue, TaskCompletionDue>;

/// Single-threaded event loop owning every node, the access point and the trace.
class Engine {
 public:
  explicit Engine(const ScenarioConfig& config)
      : config_(config),
        params_(ProtocolParams::from(config.protocol)),
        jitter_(config.seed, "jitter"),
        loss_(config.seed, "loss") {
    auto m = materialize(config);
    std::map<NodeId, Position> positions;
    for (auto& n : m.nodes) {
      positions[n.id] = n.position;
      index_[n.id] = nodes_.size();
      nodes_.push_back(std::move(n));
    }
    ap_.task_list = std::move(m.tasks);
    channel_.emplace(
        ChannelModel{config.radio.range_m, config.delay(), config.radio.loss_prob, config.radio.ap_loss_prob},
        std::move(positions), loss_);
  }

  const Channel& channel() const { return *channel_; }

  RunResult run() {
    const SimTime max_jitter = params_.jitter_max;
    for (const auto& n : nodes_) {
      queue_.push(SimTime::from_us(jitter_.uniform_int(0, max_jitter.us)), CapabilityRoundDue{n.id});
    }
    const SimTime commit = config_.protocol.leader_commit_time();
    for (const auto& n : nodes_) queue_.push(commit, LeaderCommitDue{n.id});
    for (const auto& t : ap_.task_list) queue_.push(t.scheduled_at, TaskDispatchDue{});

    const SimTime horizon = config_.horizon();
    std::uint64_t processed = 0;
    while (!queue_.empty() && queue_.top().fire_time < horizon) {
      if (++processed > config_.max_events) {
        throw SimulationError("event cap of " + std::to_string(config_.max_events) +
                              " exceeded; runaway message storm?");
      }
      auto ev = queue_.pop();
      now_ = ev.fire_time;
      std::visit([this](auto& p) { handle(p); }, ev.payload);
    }
    // Messages still in flight at the horizon are reported as dropped.
    std::vector<MessageArrival> in_flight;
    while (!queue_.empty()) {
      auto ev = queue_.pop();
      if (auto* a = std::get_if<MessageArrival>(&ev.payload)) in_flight.push_back(*a);
    }
    std::sort(in_flight.begin(), in_flight.end(), [](const auto& a, const auto& b) {
      return a.msg_id != b.msg_id ? a.msg_id < b.msg_id : a.to < b.to;
    });
    for (const auto& a : in_flight) {
      trace_.add(std::max(now_, horizon), TraceKind::kDrop, encode_node(a.from), encode_node(a.to),
                 ojson{{"msg_id", a.msg_id}, {"reason", "horizon"}});
    }

    RunResult r;
    r.config = config_;
    r.nodes = std::move(nodes_);
    r.ap = std::move(ap_);
    r.trace = std::move(trace_);
    r.events_processed = processed;
    r.log = std::move(log_);
    return r;
  }

 private:
  NodeState& node(NodeId id) { return nodes_[index_.at(id)]; }

  // -- transmission --------------------------------------------------------

  void emit_plans(NodeId from, const Message& msg, std::uint64_t msg_id, const std::vector<DeliveryPlan>& plans) {
    for (const auto& p : plans) {
      switch (p.outcome) {
        case DeliveryOutcome::kDelivered:
          queue_.push(p.at, MessageArrival{msg_id, from, p.recipient, msg});
          break;
        case DeliveryOutcome::kLost:
          trace_.add(now_, TraceKind::kDrop, encode_node(from), encode_node(p.recipient),
                     ojson{{"msg_id", msg_id}, {"reason", "loss"}});
          break;
        case DeliveryOutcome::kOutOfRange:
          trace_.add(now_, TraceKind::kDrop, encode_node(from), encode_node(p.recipient),
                     ojson{{"msg_id", msg_id}, {"reason", "out_of_range"}});
          break;
      }
    }
  }

  void trace_send(NodeId from, ojson to, const Message& msg, std::uint64_t msg_id, std::size_t recipients) {
    trace_.add(now_, TraceKind::kSend, encode_node(from), std::move(to),
               ojson{{"msg_id", msg_id}, {"recipients", recipients}, {"message", encode_message(msg)}});
  }

  void broadcast(NodeId from, const Message& msg) {
    const auto id = next_msg_id_++;
    auto plans = channel_->broadcast(from, now_);
    trace_send(from, "*", msg, id, plans.size());
    emit_plans(from, msg, id, plans);
  }

  void multicast(NodeId from, const std::vector<NodeId>& to, const Message& msg) {
    const auto id = next_msg_id_++;
    auto plans = channel_->multicast(from, to, now_);
    ojson ids = ojson::array();
    for (const auto& p : plans) ids.push_back(encode_node(p.recipient));
    trace_send(from, ids, msg, id, plans.size());
    emit_plans(from, msg, id, plans);
  }

  void unicast(NodeId from, NodeId to, const Message& msg) {
    const auto id = next_msg_id_++;
    auto plan = channel_->unicast(from, to, now_);
    trace_send(from, encode_node(to), msg, id, 1);
    emit_plans(from, msg, id, {plan});
  }

  void apply_update(NodeState& n, const NodeUpdate& upd) {
    if (upd.cluster_changed) {
      ojson members = ojson::array();
      for (const auto& m : n.cluster) members.push_back(m.value);
      trace_.add(now_, TraceKind::kClusterUpdate, encode_node(n.id), nullptr,
                 ojson{{"members", std::move(members)}, {"size", n.cluster.size()}});
    }
    if (upd.leader_changed) {
      trace_.add(now_, TraceKind::kLeaderElected, encode_node(n.id), nullptr, ojson{{"leader", n.leader->value}});
    }
    if (upd.register_msg) unicast(n.id, kAccessPoint, *upd.register_msg);
  }

  // -- event handlers ------------------------------------------------------

  void handle(const CapabilityRoundDue& e) {
    auto& n = node(e.node);
    auto round = send_capability_message(n, now_, params_, jitter_);
    if (!round) return;
    broadcast(n.id, round->message);
    if (round->next_send) queue_.push(*round->next_send, CapabilityRoundDue{n.id});
  }

  void handle(const LeaderCommitDue& e) {
    auto& n = node(e.node);
    apply_update(n, commit_leader(n));
  }

  void handle(const MessageArrival& e) {
    trace_.add(now_, TraceKind::kDeliver, encode_node(e.from), encode_node(e.to),
               ojson{{"msg_id", e.msg_id}, {"type", std::string(message_type(e.message))}});
    if (e.to == kAccessPoint) {
      on_ap_message(e);
    } else {
      on_node_message(node(e.to), e);
    }
  }

  void on_ap_message(const MessageArrival& e) {
    if (const auto* reg = std::get_if<LeaderRegister>(&e.message)) {
      const bool fresh = handle_leader_register(ap_, *reg);
      trace_.add(now_, TraceKind::kLeaderRegister, encode_node(reg->leader), "AP", ojson{{"new", fresh}});
    } else if (const auto* acc = std::get_if<TaskAccept>(&e.message)) {
      const auto res = handle_task_accept(ap_, *acc, now_);
      trace_.add(now_, TraceKind::kTaskAccept, encode_node(acc->leader), "AP",
                 ojson{{"task_id", acc->task_id}, {"result", std::string(to_string(res))}});
    } else {
      log_.push_back("AP ignored unexpected " + std::string(message_type(e.message)));
    }
  }

  void on_node_message(NodeState& n, const MessageArrival& e) {
    std::visit(detail::overloaded{
                   [&](const CapabilityDissemination& m) {
                     if (m.sender == n.id) return;
                     apply_update(n, handle_capability_message(n, m, params_.threshold));
                   },
                   [&](const TaskDispatch& m) {
                     const auto backoff = SimTime::from_ms(config_.protocol.accept_backoff_max_ms);
                     const auto wait = SimTime::from_us(jitter_.uniform_int(0, backoff.us));
                     queue_.push(now_ + wait, DispatchDecisionDue{n.id, m.task});
                   },
                   [&](const LeaderToCluster& m) {
                     const auto upd = handle_leader_to_cluster(n, e.from, m, now_);
                     switch (upd.outcome) {
                       case MemberOutcome::kStarted:
                         trace_.add(now_, TraceKind::kTaskStart, encode_node(n.id), nullptr,
                                    ojson{{"task_id", m.task_id}, {"role", "member"}, {"leader", e.from.value}});
                         queue_.push(upd.completes_at, TaskCompletionDue{n.id, m.task_id});
                         break;
                       case MemberOutcome::kDuplicate:
                         break;
                       case MemberOutcome::kNotFromLeader:
                         log_.push_back("node " + to_string(n.id) + " ignored LeaderToCluster from non-leader " +
                                        to_string(e.from));
                         break;
                     }
                   },
                   [&](const auto& m) {
                     log_.push_back("node " + to_string(n.id) + " ignored unexpected " +
                                    std::string(message_type(Message{m})));
                   },
               },
               e.message);
  }

  void handle(const DispatchDecisionDue& e) {
    auto& n = node(e.leader);
    auto d = handle_task_dispatch(n, e.task, now_);
    if (d.outcome == DispatchOutcome::kNotLeader) {
      log_.push_back("protocol violation: task " + std::to_string(e.task.task_id) + " dispatched to non-leader " +
                     to_string(n.id));
      return;
    }
    if (d.outcome != DispatchOutcome::kAccepted) return;
    unicast(n.id, kAccessPoint, *d.accept);
    trace_.add(now_, TraceKind::kTaskStart, encode_node(n.id), nullptr,
               ojson{{"task_id", e.task.task_id}, {"role", "leader"}, {"leader", n.id.value}});
    queue_.push(d.completes_at, TaskCompletionDue{n.id, e.task.task_id});
    if (!d.members.empty()) multicast(n.id, d.members, *d.to_cluster);
  }

  void handle(const TaskDispatchDue&) {
    auto action = dispatch_task(ap_, now_, config_.confirmation_window());
    if (!action) return;
    ojson leaders = ojson::array();
    for (const auto& l : action->recipients) leaders.push_back(l.value);
    trace_.add(now_, TraceKind::kTaskDispatch, "AP", leaders,
               ojson{{"task", encode_task(action->task)}, {"window_closes", action->window_closes.seconds()}});
    if (action->unallocated) {
      trace_.add(now_, TraceKind::kWindowClose, "AP", nullptr,
                 ojson{{"task_id", action->task.task_id}, {"status", "unallocated"}, {"accepts", 0}});
      return;
    }
    multicast(kAccessPoint, action->recipients, TaskDispatch{action->task});
    queue_.push(action->window_closes, WindowCloseDue{action->task.task_id});
  }

  void handle(const WindowCloseDue& e) {
    close_confirmation_window(ap_, e.task_id, now_);
    const auto& rec = ap_.dispatch_log.at(e.task_id);
    ojson detail{{"task_id", e.task_id},
                 {"status", std::string(to_string(rec.final_status))},
                 {"accepts", rec.accepts.size()}};
    if (rec.lat) detail["lat_ms"] = rec.lat->millis();
    trace_.add(now_, TraceKind::kWindowClose, "AP", nullptr, std::move(detail));
  }

  void handle(const TaskCompletionDue& e) {
    auto& n = node(e.node);
    if (complete_task(n, e.task_id)) {
      trace_.add(now_, TraceKind::kTaskComplete, encode_node(n.id), nullptr, ojson{{"task_id", e.task_id}});
    }
  }

  ScenarioConfig config_;
  ProtocolParams params_;
  RandomStream jitter_;
  RandomStream loss_;
  std::vector<NodeState> nodes_;
  std::map<NodeId, std::size_t> index_;
  ApState ap_;
  std::optional<Channel> channel_;
  EventQueue<Payload> queue_;
  Trace trace_;
  std::vector<std::string> log_;
  SimTime now_{};
  std::uint64_t next_msg_id_{0};
};

}  // namespace sim

/// Runs a validated scenario to its horizon. Identical configs (seed included)
/// produce byte-identical traces.
inline RunResult run(const ScenarioConfig& config) {
  sim::Engine engine(config);
  return engine.run();
}

}  // namespace contaski
