#pragma once

// Replays protocol invariants over a recorded trace. Works from the trace
// alone: capabilities, cluster sizes and task requirements are recovered from
// the logged messages, never from simulator state.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "contaski/codec.hpp"
#include "contaski/similarity.hpp"
#include "contaski/trace.hpp"

namespace contaski {

struct AuditViolation {
  std::size_t index{0};  // 0-based event index
  std::string rule;
  std::string message;
};

struct AuditReport {
  std::size_t events{0};
  std::size_t accepts_checked{0};
  std::vector<AuditViolation> violations;

  bool clean() const { return violations.empty(); }
};

inline AuditReport audit_trace(const std::vector<TraceEvent>& events) {
  AuditReport report;
  report.events = events.size();

  struct SentMessage {
    SimTime t;
    std::string from;
    Message message;
    std::size_t recipients{0};
    std::size_t resolved{0};
    std::set<std::string> delivered_to;
  };
  struct DispatchInfo {
    Task task;
    SimTime t;
    SimTime window_closes;
    std::set<std::string> leaders;
    std::optional<SimTime> last_counted;
    std::size_t closes{0};
  };

  std::map<std::uint64_t, SentMessage> sent;
  std::map<std::string, CapabilitySet> announced_caps;
  std::map<std::string, std::size_t> cluster_size;
  std::map<TaskId, DispatchInfo> dispatches;
  std::set<std::pair<std::string, TaskId>> accepts_sent;
  std::set<std::pair<std::string, TaskId>> dispatch_delivered;
  std::set<std::pair<std::string, TaskId>> member_notified;
  std::set<std::string> register_delivered;

  SimTime last_t{std::numeric_limits<std::int64_t>::min()};
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string from = e.from.dump();
    const std::string to = e.to.dump();
    auto violate = [&](const char* rule, std::string msg) {
      report.violations.push_back({i, rule, std::move(msg)});
    };
    if (e.t < last_t) violate("causality", "timestamp decreases");
    last_t = std::max(last_t, e.t);

    try {
      switch (e.kind) {
        case TraceKind::kSend: {
          const auto id = e.detail.at("msg_id").get<std::uint64_t>();
          if (sent.count(id)) {
            violate("conservation", "duplicate msg_id " + std::to_string(id));
            break;
          }
          SentMessage s{e.t, from, decode_message(e.detail.at("message")),
                        e.detail.at("recipients").get<std::size_t>(), 0, {}};
          if (const auto* cap = std::get_if<CapabilityDissemination>(&s.message)) {
            announced_caps[from] = cap->capabilities;
          } else if (const auto* acc = std::get_if<TaskAccept>(&s.message)) {
            ++report.accepts_checked;
            const auto key = std::make_pair(from, acc->task_id);
            auto d = dispatches.find(acc->task_id);
            if (d == dispatches.end()) {
              violate("acceptance", "accept for task never dispatched");
            } else {
              const auto& task = d->second.task;
              if (!dispatch_delivered.count(key)) violate("acceptance", "accept without a received dispatch");
              auto caps = announced_caps.find(from);
              if (caps == announced_caps.end() || !required_subset(task.required, caps->second)) {
                violate("acceptance", "leader lacks a required capability");
              }
              const auto size = cluster_size.count(from) ? cluster_size[from] : std::size_t{1};
              if (size < task.quorum) violate("acceptance", "cluster below quorum");
            }
            if (!accepts_sent.insert(key).second) violate("acceptance", "leader accepted the same task twice");
          } else if (const auto* ltc = std::get_if<LeaderToCluster>(&s.message)) {
            if (!accepts_sent.count({from, ltc->task_id})) {
              violate("silence", "task disseminated to cluster without an accept");
            }
          }
          sent.emplace(id, std::move(s));
          break;
        }
        case TraceKind::kDeliver:
        case TraceKind::kDrop: {
          const auto id = e.detail.at("msg_id").get<std::uint64_t>();
          auto it = sent.find(id);
          if (it == sent.end()) {
            violate("causality", "delivery of a message that was never sent");
            break;
          }
          auto& s = it->second;
          if (s.from != from) violate("conservation", "delivery sender differs from send");
          if (++s.resolved > s.recipients) violate("conservation", "more outcomes than recipients");
          if (e.kind == TraceKind::kDrop) break;
          if (e.t <= s.t) violate("causality", "message delivered no later than it was sent");
          if (!s.delivered_to.insert(to).second) violate("conservation", "duplicate delivery");
          if (const auto* td = std::get_if<TaskDispatch>(&s.message)) {
            dispatch_delivered.insert({to, td->task.task_id});
          } else if (const auto* ltc = std::get_if<LeaderToCluster>(&s.message)) {
            member_notified.insert({to, ltc->task_id});
          } else if (std::holds_alternative<LeaderRegister>(s.message)) {
            register_delivered.insert(from);
          }
          break;
        }
        case TraceKind::kClusterUpdate:
          cluster_size[from] = e.detail.at("size").get<std::size_t>();
          break;
        case TraceKind::kLeaderRegister:
          if (!register_delivered.count(from)) violate("registration", "registration without a delivered message");
          break;
        case TraceKind::kTaskDispatch: {
          DispatchInfo info;
          info.task = decode_task(e.detail.at("task"));
          info.t = e.t;
          info.window_closes = SimTime::from_us(std::llround(e.detail.at("window_closes").get<double>() * 1e6));
          for (const auto& l : e.to) info.leaders.insert(l.dump());
          if (dispatches.count(info.task.task_id)) violate("ledger", "task dispatched twice");
          dispatches[info.task.task_id] = std::move(info);
          break;
        }
        case TraceKind::kTaskAccept: {
          const auto id = e.detail.at("task_id").get<TaskId>();
          auto d = dispatches.find(id);
          if (e.detail.at("result").get<std::string>() != "counted") break;
          if (d == dispatches.end()) {
            violate("ledger", "counted accept for an unknown task");
            break;
          }
          if (!d->second.leaders.count(from)) violate("ledger", "counted accept from a non-leader");
          if (e.t > d->second.window_closes) violate("ledger", "counted accept after the window closed");
          d->second.last_counted = e.t;
          break;
        }
        case TraceKind::kWindowClose: {
          const auto id = e.detail.at("task_id").get<TaskId>();
          auto d = dispatches.find(id);
          if (d == dispatches.end()) {
            violate("ledger", "window closed for an unknown task");
            break;
          }
          if (++d->second.closes > 1) violate("ledger", "window closed twice");
          const auto status = e.detail.at("status").get<std::string>();
          const bool allocated = d->second.last_counted.has_value();
          if (allocated != (status == "completed")) violate("ledger", "final status disagrees with accepts");
          if (allocated) {
            const double expect = (*d->second.last_counted - d->second.t).millis();
            if (!e.detail.contains("lat_ms") || e.detail.at("lat_ms").get<double>() != expect) {
              violate("ledger", "LAT differs from last accept minus dispatch");
            }
          }
          break;
        }
        case TraceKind::kTaskStart: {
          const auto id = e.detail.at("task_id").get<TaskId>();
          if (e.detail.at("role").get<std::string>() == "leader") {
            if (!accepts_sent.count({from, id})) violate("acceptance", "leader started a task it did not accept");
          } else if (!member_notified.count({from, id})) {
            violate("acceptance", "member started a task it was never told about");
          }
          break;
        }
        default:
          break;
      }
    } catch (const std::exception& ex) {
      violate("format", ex.what());
    }
  }

  for (const auto& [id, s] : sent) {
    if (s.resolved != s.recipients) {
      report.violations.push_back({events.size(), "conservation",
                                   "msg " + std::to_string(id) + " has " + std::to_string(s.resolved) +
                                       " outcomes for " + std::to_string(s.recipients) + " recipients"});
    }
  }
  return report;
}

}  // namespace contaski
