#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "contaski/simulator.hpp"
#include "contaski/trace.hpp"

namespace contaski {

struct DispatchMetrics {
  TaskId task_id{0};
  SimTime dispatch_time;
  std::uint32_t leaders_at_dispatch{0};
  std::uint32_t cpt{0};
  std::uint32_t cit{0};
  std::optional<SimTime> lat;

  bool operator==(const DispatchMetrics&) const = default;
};

struct MetricsRecord {
  std::uint32_t nc{0};
  std::uint32_t nat{0};
  std::vector<DispatchMetrics> per_dispatch;  // dispatch order

  std::optional<double> mean_lat_ms() const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& d : per_dispatch) {
      if (d.lat) {
        sum += d.lat->millis();
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
  double mean_cpt() const { return mean_of([](const auto& d) { return d.cpt; }); }
  double mean_cit() const { return mean_of([](const auto& d) { return d.cit; }); }

  bool operator==(const MetricsRecord&) const = default;

 private:
  template <typename F>
  double mean_of(F f) const {
    if (per_dispatch.empty()) return 0.0;
    double s = 0;
    for (const auto& d : per_dispatch) s += f(d);
    return s / static_cast<double>(per_dispatch.size());
  }
};

namespace detail {

inline void finish_record(MetricsRecord& m) {
  std::sort(m.per_dispatch.begin(), m.per_dispatch.end(), [](const auto& a, const auto& b) {
    return a.dispatch_time != b.dispatch_time ? a.dispatch_time < b.dispatch_time : a.task_id < b.task_id;
  });
  m.nat = static_cast<std::uint32_t>(
      std::count_if(m.per_dispatch.begin(), m.per_dispatch.end(), [](const auto& d) { return d.cpt >= 1; }));
}

}  // namespace detail

/// Metrics from the final access-point ledger. "Clusters" are registered
/// leaders, the only clusters the access point can observe.
inline MetricsRecord compute_run_metrics(const RunResult& result) {
  MetricsRecord m;
  m.nc = static_cast<std::uint32_t>(result.ap.leaders.size());
  for (const auto& [id, rec] : result.ap.dispatch_log) {
    DispatchMetrics d;
    d.task_id = id;
    d.dispatch_time = rec.dispatch_time;
    d.leaders_at_dispatch = static_cast<std::uint32_t>(rec.leaders_at_dispatch.size());
    d.cpt = static_cast<std::uint32_t>(rec.accepts.size());
    d.cit = d.leaders_at_dispatch - d.cpt;
    d.lat = rec.lat;
    m.per_dispatch.push_back(d);
  }
  detail::finish_record(m);
  return m;
}

/// Same metrics, recovered from the event trace alone.
inline MetricsRecord compute_run_metrics_from_trace(const std::vector<TraceEvent>& events) {
  MetricsRecord m;
  std::set<std::string> leaders;
  std::map<TaskId, DispatchMetrics> dispatches;
  std::map<TaskId, SimTime> last_accept;
  std::map<TaskId, bool> closed;
  for (const auto& e : events) {
    switch (e.kind) {
      case TraceKind::kLeaderRegister:
        leaders.insert(e.from.dump());
        break;
      case TraceKind::kTaskDispatch: {
        const auto task = decode_task(e.detail.at("task"));
        DispatchMetrics d;
        d.task_id = task.task_id;
        d.dispatch_time = e.t;
        d.leaders_at_dispatch = static_cast<std::uint32_t>(e.to.size());
        dispatches[task.task_id] = d;
        break;
      }
      case TraceKind::kTaskAccept: {
        if (e.detail.at("result").get<std::string>() != "counted") break;
        const auto id = e.detail.at("task_id").get<TaskId>();
        auto& d = dispatches.at(id);
        ++d.cpt;
        last_accept[id] = std::max(last_accept[id], e.t);
        break;
      }
      case TraceKind::kWindowClose:
        closed[e.detail.at("task_id").get<TaskId>()] = true;
        break;
      default:
        break;
    }
  }
  m.nc = static_cast<std::uint32_t>(leaders.size());
  for (auto& [id, d] : dispatches) {
    d.cit = d.leaders_at_dispatch - d.cpt;
    if (d.cpt > 0 && closed[id]) d.lat = last_accept[id] - d.dispatch_time;
    m.per_dispatch.push_back(d);
  }
  detail::finish_record(m);
  return m;
}

// ---------------------------------------------------------------------------
// Replication aggregates
// ---------------------------------------------------------------------------

struct MetricSummary {
  std::size_t n{0};
  double mean{0.0};
  double min{0.0};
  double max{0.0};
  std::optional<double> stddev;        // sample standard deviation, n >= 2
  std::optional<double> ci_half_width;  // Student-t, n >= 2
};

/// Two-sided Student-t quantile for the given confidence and n - 1 dof.
inline double student_t_critical(double confidence, std::size_t n) {
  boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

inline MetricSummary summarize(const std::vector<double>& xs, double confidence = 0.95) {
  MetricSummary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  // Guard against the mean drifting outside [min, max] through rounding.
  s.mean = std::clamp(s.mean, s.min, s.max);
  if (s.n >= 2) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.stddev = sd;
    s.ci_half_width = student_t_critical(confidence, s.n) * sd / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

struct ReplicationSummary {
  MetricSummary nc;
  MetricSummary nat;
  MetricSummary cpt;
  MetricSummary cit;
  MetricSummary lat_ms;  // over runs with at least one allocated task
};

inline ReplicationSummary aggregate_replications(const std::vector<MetricsRecord>& records,
                                                 double confidence = 0.95) {
  std::vector<double> nc, nat, cpt, cit, lat;
  for (const auto& r : records) {
    nc.push_back(r.nc);
    nat.push_back(r.nat);
    cpt.push_back(r.mean_cpt());
    cit.push_back(r.mean_cit());
    if (auto l = r.mean_lat_ms()) lat.push_back(*l);
  }
  return ReplicationSummary{summarize(nc, confidence), summarize(nat, confidence), summarize(cpt, confidence),
                            summarize(cit, confidence), summarize(lat, confidence)};
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline ojson to_json(const MetricSummary& s) {
  ojson j;
  j["n"] = s.n;
  j["mean"] = s.mean;
  j["min"] = s.min;
  j["max"] = s.max;
  j["stddev"] = s.stddev ? ojson(*s.stddev) : ojson(nullptr);
  j["ci95_half_width"] = s.ci_half_width ? ojson(*s.ci_half_width) : ojson(nullptr);
  return j;
}

inline ojson to_json(const ReplicationSummary& s) {
  ojson j;
  j["nc"] = to_json(s.nc);
  j["nat"] = to_json(s.nat);
  j["cpt"] = to_json(s.cpt);
  j["cit"] = to_json(s.cit);
  j["lat_ms"] = to_json(s.lat_ms);
  return j;
}

inline ojson to_json(const MetricsRecord& m) {
  ojson j;
  j["nc"] = m.nc;
  j["nat"] = m.nat;
  ojson per = ojson::array();
  for (const auto& d : m.per_dispatch) {
    ojson x;
    x["task_id"] = d.task_id;
    x["dispatch_s"] = d.dispatch_time.seconds();
    x["leaders"] = d.leaders_at_dispatch;
    x["cpt"] = d.cpt;
    x["cit"] = d.cit;
    x["lat_ms"] = d.lat ? ojson(d.lat->millis()) : ojson(nullptr);
    per.push_back(std::move(x));
  }
  j["per_dispatch"] = std::move(per);
  j["mean_cpt"] = m.mean_cpt();
  j["mean_cit"] = m.mean_cit();
  const auto lat = m.mean_lat_ms();
  j["mean_lat_ms"] = lat ? ojson(*lat) : ojson(nullptr);
  return j;
}

inline std::string format_number(double v) {
  ojson j = v;
  return j.dump();
}

inline const char* kMetricsCsvHeader = "rep,nc,nat,task_id,cpt,cit,lat_ms";

/// One row per dispatch: rep,nc,nat,task_id,cpt,cit,lat_ms (lat_ms empty when
/// the task was not allocated).
inline std::string metrics_csv_rows(const MetricsRecord& m, std::size_t rep) {
  std::string out;
  for (const auto& d : m.per_dispatch) {
    out += std::to_string(rep) + "," + std::to_string(m.nc) + "," + std::to_string(m.nat) + "," +
           std::to_string(d.task_id) + "," + std::to_string(d.cpt) + "," + std::to_string(d.cit) + "," +
           (d.lat ? format_number(d.lat->millis()) : std::string()) + "\n";
  }
  return out;
}

}  // namespace contaski
