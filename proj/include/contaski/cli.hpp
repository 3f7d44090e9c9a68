#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "contaski/audit.hpp"
#include "contaski/experiment.hpp"
#include "contaski/metrics.hpp"
#include "contaski/scenario.hpp"
#include "contaski/simulator.hpp"
#include "contaski/trace.hpp"

namespace contaski::cli {

enum ExitCode : int { kOk = 0, kInvalidInput = 1, kRuntimeFailure = 2, kAuditViolations = 3 };

/// Output directory: explicit flag, then $CONTASKI_OUT, then ./contaski-out.
inline std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("CONTASKI_OUT"); env && *env) return env;
  return "contaski-out";
}

inline ojson run_report(const RunResult& r, const MetricsRecord& m) {
  ojson j;
  j["seed"] = r.config.seed;
  j["trace_digest"] = r.trace.digest();
  j["events_processed"] = r.events_processed;
  j["metrics"] = to_json(m);
  ojson leaders = ojson::array();
  for (const auto& l : r.ap.leaders) leaders.push_back(l.value);
  j["leaders"] = std::move(leaders);
  ojson log = ojson::array();
  for (const auto& [id, rec] : r.ap.dispatch_log) {
    ojson d;
    d["task_id"] = id;
    d["dispatch_s"] = rec.dispatch_time.seconds();
    d["status"] = std::string(to_string(rec.final_status));
    ojson accepts = ojson::array();
    for (const auto& a : rec.accepts) accepts.push_back(ojson{{"leader", a.leader.value}, {"at_s", a.at.seconds()}});
    d["accepts"] = std::move(accepts);
    d["late_accepts"] = rec.late_accepts.size();
    d["lat_ms"] = rec.lat ? ojson(rec.lat->millis()) : ojson(nullptr);
    log.push_back(std::move(d));
  }
  j["dispatch_log"] = std::move(log);
  ojson nodes = ojson::array();
  for (const auto& n : r.nodes) {
    ojson x;
    x["id"] = n.id.value;
    x["pos"] = ojson::array({n.position.x, n.position.y});
    x["capabilities"] = n.capabilities.names();
    x["neighbors"] = n.neighbors.size();
    ojson cluster = ojson::array();
    for (const auto& c : n.cluster) cluster.push_back(c.value);
    x["cluster"] = std::move(cluster);
    x["leader"] = n.leader ? ojson(n.leader->value) : ojson(nullptr);
    x["registered"] = n.registered;
    x["completed_tasks"] = n.completed_tasks;
    nodes.push_back(std::move(x));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

/// Validates, runs once and writes trace.jsonl, metrics.json, metrics.csv.
inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg;
  try {
    cfg = load_scenario(opt.config);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  if (opt.seed) cfg.seed = *opt.seed;
  auto v = validate_scenario(std::move(cfg));
  if (!v.ok()) {
    err << "error: invalid scenario " << opt.config << ":\n";
    for (const auto& e : v.errors) err << "  - " << e << "\n";
    return kInvalidInput;
  }
  try {
    const auto result = run(*v.config);
    const auto metrics = compute_run_metrics(result);
    const auto dir = resolve_out_dir(opt.out);
    std::filesystem::create_directories(dir);
    result.trace.write((dir / "trace.jsonl").string());
    detail::write_file(dir / "metrics.json", run_report(result, metrics).dump(2) + "\n");
    detail::write_file(dir / "metrics.csv", std::string(kMetricsCsvHeader) + "\n" + metrics_csv_rows(metrics, 0));
    out << "nc=" << metrics.nc << " nat=" << metrics.nat << "/" << metrics.per_dispatch.size() << " leaders=[";
    bool first = true;
    for (const auto& l : result.ap.leaders) {
      out << (first ? "" : ",") << l.value;
      first = false;
    }
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(result.trace.digest()));
    out << "] events=" << result.trace.size() << " digest=" << digest << "\n";
    out << "wrote " << dir.string() << "/{trace.jsonl,metrics.json,metrics.csv}\n";
  } catch (const std::exception& e) {
    err << "error: run failed: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

struct ExperimentOptions {
  std::string plan;
  unsigned jobs{1};
  std::optional<std::string> out;
};

inline int cmd_experiment(const ExperimentOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentPlan plan;
  try {
    plan = load_plan(opt.plan);
    for (const auto& p : expand_points(plan.sweep)) {
      auto v = validate_scenario(apply_point(plan.base, p));
      if (!v.ok()) {
        err << "error: invalid plan " << opt.plan << ":\n";
        for (const auto& e : v.errors) err << "  - " << e << "\n";
        return kInvalidInput;
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  try {
    const auto result = run_experiment(plan, opt.jobs);
    const auto dir = resolve_out_dir(opt.out);
    write_experiment_outputs(plan, result, dir);
    for (const auto& p : result.points) {
      const auto agg = aggregate_replications(p.records());
      out << "point " << p.index << ": nc=" << format_number(agg.nc.mean) << " nat=" << format_number(agg.nat.mean)
          << " cpt=" << format_number(agg.cpt.mean) << " lat_ms=" << format_number(agg.lat_ms.mean) << "\n";
      for (const auto& r : p.reps) {
        if (!r.metrics) err << "replication " << p.index << "/" << r.rep << " failed: " << r.error << "\n";
      }
    }
    out << "wrote " << dir.string() << "\n";
    return result.any_failed() ? kRuntimeFailure : kOk;
  } catch (const std::exception& e) {
    err << "error: experiment failed: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

struct TraceOptions {
  std::string path;
  std::optional<std::string> kind;
  std::optional<std::uint32_t> node;
  std::optional<double> from_s;
  std::optional<double> to_s;
  bool audit{false};
};

inline bool matches(const TraceEvent& e, const TraceOptions& opt, std::optional<TraceKind> kind) {
  if (kind && e.kind != *kind) return false;
  if (opt.node && !e.involves(NodeId{*opt.node})) return false;
  if (opt.from_s && e.t < SimTime::from_seconds(*opt.from_s)) return false;
  if (opt.to_s && e.t > SimTime::from_seconds(*opt.to_s)) return false;
  return true;
}

inline std::string format_endpoint(const ojson& j) {
  if (j.is_null()) return "-";
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

inline std::string format_event(const TraceEvent& e) {
  char head[96];
  std::snprintf(head, sizeof head, "%12.6f  %-15s ", e.t.seconds(), std::string(to_string(e.kind)).c_str());
  std::string line = head + format_endpoint(e.from);
  if (!e.to.is_null()) line += " -> " + format_endpoint(e.to);
  if (!e.detail.empty()) line += "  " + e.detail.dump();
  return line;
}

inline int cmd_trace(const TraceOptions& opt, std::ostream& out, std::ostream& err) {
  std::optional<TraceKind> kind;
  if (opt.kind) {
    kind = parse_trace_kind(*opt.kind);
    if (!kind) {
      err << "error: unknown event kind '" << *opt.kind << "'\n";
      return kInvalidInput;
    }
  }
  std::vector<TraceEvent> events;
  try {
    events = read_trace_file(opt.path);
  } catch (const TraceReadError& e) {
    err << "error: " << opt.path << ": " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  if (opt.audit) {
    const auto report = audit_trace(events);
    out << "audit: " << report.events << " events, " << report.accepts_checked << " accepts checked, "
        << report.violations.size() << " violations\n";
    for (const auto& v : report.violations) {
      out << "  line " << v.index + 1 << " [" << v.rule << "] " << v.message << "\n";
    }
    return report.clean() ? kOk : kAuditViolations;
  }
  for (const auto& e : events) {
    if (matches(e, opt, kind)) out << format_event(e) << "\n";
  }
  return kOk;
}

}  // namespace contaski::cli
