#pragma once

// JSON encoding of protocol messages and tasks. Used by the trace writer and
// by the trace auditor, which decodes the messages it replays.

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "contaski/types.hpp"

namespace contaski {

using ojson = nlohmann::ordered_json;

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ojson encode_node(NodeId id) {
  if (id == kAccessPoint) return "AP";
  return id.value;
}

inline NodeId decode_node(const ojson& j) {
  if (j.is_string() && j.get<std::string>() == "AP") return kAccessPoint;
  if (!j.is_number_unsigned()) throw DecodeError("node id must be a non-negative integer or \"AP\"");
  return NodeId{j.get<std::uint32_t>()};
}

inline ojson encode_capabilities(const CapabilitySet& caps) { return caps.names(); }

inline CapabilitySet decode_capabilities(const ojson& j) {
  if (!j.is_array()) throw DecodeError("capability set must be an array of names");
  CapabilitySet out;
  for (const auto& c : j) {
    if (!c.is_string()) throw DecodeError("capability names must be strings");
    out.insert(Capability{c.get<std::string>()});
  }
  return out;
}

inline ojson encode_task(const Task& t) {
  ojson j;
  j["id"] = t.task_id;
  j["required"] = encode_capabilities(t.required);
  j["duration_us"] = t.duration.us;
  j["quorum"] = t.quorum;
  return j;
}

inline Task decode_task(const ojson& j) {
  try {
    Task t;
    t.task_id = j.at("id").get<TaskId>();
    t.required = decode_capabilities(j.at("required"));
    t.duration = SimTime::from_us(j.at("duration_us").get<std::int64_t>());
    t.quorum = j.at("quorum").get<std::uint32_t>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed task: ") + e.what());
  }
}

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

inline ojson encode_message(const Message& m) {
  ojson j;
  j["type"] = std::string(message_type(m));
  std::visit(detail::overloaded{
                 [&](const CapabilityDissemination& c) {
                   j["sender"] = encode_node(c.sender);
                   j["capabilities"] = encode_capabilities(c.capabilities);
                   j["neigh_count"] = c.neigh_count;
                 },
                 [&](const LeaderRegister& r) { j["leader"] = encode_node(r.leader); },
                 [&](const TaskDispatch& d) { j["task"] = encode_task(d.task); },
                 [&](const TaskAccept& a) {
                   j["leader"] = encode_node(a.leader);
                   j["task_id"] = a.task_id;
                 },
                 [&](const LeaderToCluster& l) {
                   j["task_id"] = l.task_id;
                   j["duration_us"] = l.duration.us;
                 },
             },
             m);
  return j;
}

inline Message decode_message(const ojson& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "CapabilityDissemination") {
      return CapabilityDissemination{decode_node(j.at("sender")), decode_capabilities(j.at("capabilities")),
                                     j.at("neigh_count").get<std::uint32_t>()};
    }
    if (type == "LeaderRegister") return LeaderRegister{decode_node(j.at("leader"))};
    if (type == "TaskDispatch") return TaskDispatch{decode_task(j.at("task"))};
    if (type == "TaskAccept") return TaskAccept{decode_node(j.at("leader")), j.at("task_id").get<TaskId>()};
    if (type == "LeaderToCluster") {
      return LeaderToCluster{j.at("task_id").get<TaskId>(),
                             SimTime::from_us(j.at("duration_us").get<std::int64_t>())};
    }
    throw DecodeError("unknown message type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed message: ") + e.what());
  }
}

}  // namespace contaski
