#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "contaski/metrics.hpp"
#include "contaski/rng.hpp"
#include "contaski/scenario.hpp"
#include "contaski/simulator.hpp"

namespace contaski {

/// Values of the sweepable parameters at one point. Unset axes keep the base
/// scenario's value.
struct SweepPoint {
  std::optional<std::uint32_t> node_count;
  std::optional<double> similarity_threshold;
  std::optional<std::uint32_t> quorum;
  std::optional<double> loss_prob;
  std::optional<double> range_m;
};

struct SweepAxes {
  std::vector<std::uint32_t> node_count;
  std::vector<double> similarity_threshold;
  std::vector<std::uint32_t> quorum;
  std::vector<double> loss_prob;
  std::vector<double> range_m;
};

struct ExperimentPlan {
  ScenarioConfig base;
  SweepAxes sweep;
  std::uint32_t replications{35};
  std::uint64_t master_seed{1};
};

namespace detail {

template <typename T>
std::vector<std::optional<T>> axis_values(const std::vector<T>& v) {
  if (v.empty()) return {std::nullopt};
  return {v.begin(), v.end()};
}

}  // namespace detail

/// Cartesian product of the sweep axes, node count varying slowest.
inline std::vector<SweepPoint> expand_points(const SweepAxes& axes) {
  std::vector<SweepPoint> out;
  for (const auto& n : detail::axis_values(axes.node_count))
    for (const auto& t : detail::axis_values(axes.similarity_threshold))
      for (const auto& q : detail::axis_values(axes.quorum))
        for (const auto& l : detail::axis_values(axes.loss_prob))
          for (const auto& r : detail::axis_values(axes.range_m)) out.push_back(SweepPoint{n, t, q, l, r});
  return out;
}

inline ScenarioConfig apply_point(ScenarioConfig c, const SweepPoint& p) {
  if (p.node_count) {
    auto* g = std::get_if<GeneratedNodes>(&c.nodes);
    if (!g) throw ConfigError("node_count sweep requires generated nodes in the base scenario");
    g->count = *p.node_count;
  }
  if (p.similarity_threshold) c.protocol.similarity_threshold = *p.similarity_threshold;
  if (p.quorum) {
    if (auto* g = std::get_if<GeneratedTasks>(&c.tasks)) {
      g->quorum = *p.quorum;
    } else {
      for (auto& t : std::get<std::vector<TaskSpec>>(c.tasks)) t.task.quorum = *p.quorum;
    }
  }
  if (p.loss_prob) c.radio.loss_prob = *p.loss_prob;
  if (p.range_m) c.radio.range_m = *p.range_m;
  return c;
}

inline ExperimentPlan parse_plan(const nlohmann::json& j, const std::filesystem::path& plan_dir = ".") {
  ExperimentPlan plan;
  try {
    const auto& base = j.at("base");
    plan.base = base.is_string() ? load_scenario((plan_dir / base.get<std::string>()).string()) : parse_scenario(base);
    if (auto it = j.find("sweep"); it != j.end()) {
      detail::read_opt(*it, "node_count", plan.sweep.node_count);
      detail::read_opt(*it, "similarity_threshold", plan.sweep.similarity_threshold);
      detail::read_opt(*it, "quorum", plan.sweep.quorum);
      detail::read_opt(*it, "loss_prob", plan.sweep.loss_prob);
      detail::read_opt(*it, "range_m", plan.sweep.range_m);
    }
    detail::read_opt(j, "replications", plan.replications);
    detail::read_opt(j, "master_seed", plan.master_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed plan: ") + e.what());
  }
  if (plan.replications == 0) throw ConfigError("plan needs at least one replication");
  return plan;
}

inline ExperimentPlan load_plan(const std::string& path) {
  return parse_plan(read_json_file(path), std::filesystem::path(path).parent_path());
}

struct ReplicationResult {
  std::uint32_t rep{0};
  std::uint64_t seed{0};
  std::optional<MetricsRecord> metrics;
  std::uint64_t trace_digest{0};
  std::string error;
};

struct PointResult {
  std::uint32_t index{0};
  SweepPoint point;
  std::vector<ReplicationResult> reps;  // rep order

  std::vector<MetricsRecord> records() const {
    std::vector<MetricsRecord> out;
    for (const auto& r : reps)
      if (r.metrics) out.push_back(*r.metrics);
    return out;
  }
};

struct ExperimentResult {
  std::vector<PointResult> points;
  bool any_failed() const {
    for (const auto& p : points)
      for (const auto& r : p.reps)
        if (!r.metrics) return true;
    return false;
  }
};

/// Runs every point x replication. Each replication owns an isolated engine
/// with seed derive_replication_seed(master, point, rep); results are placed
/// by (point, rep), so the outcome does not depend on `jobs`.
inline ExperimentResult run_experiment(const ExperimentPlan& plan, unsigned jobs = 1) {
  const auto points = expand_points(plan.sweep);
  ExperimentResult result;
  std::vector<ScenarioConfig> configs;
  for (std::uint32_t p = 0; p < points.size(); ++p) {
    result.points.push_back(PointResult{p, points[p], std::vector<ReplicationResult>(plan.replications)});
    configs.push_back(apply_point(plan.base, points[p]));
  }

  const std::size_t total = points.size() * plan.replications;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const auto p = static_cast<std::uint32_t>(k / plan.replications);
      const auto r = static_cast<std::uint32_t>(k % plan.replications);
      auto& slot = result.points[p].reps[r];
      slot.rep = r;
      slot.seed = derive_replication_seed(plan.master_seed, p, r);
      try {
        auto cfg = configs[p];
        cfg.seed = slot.seed;
        auto v = validate_scenario(std::move(cfg));
        if (!v.ok()) {
          std::string msg;
          for (const auto& e : v.errors) msg += (msg.empty() ? "" : "; ") + e;
          throw ConfigError(msg);
        }
        auto run_result = run(*v.config);
        slot.metrics = compute_run_metrics(run_result);
        slot.trace_digest = run_result.trace.digest();
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------
namespace detail {

template <typename T>
std::string opt_cell(const std::optional<T>& v) {
  if (!v) return "";
  return format_number(static_cast<double>(*v));
}

inline std::string point_cells(const PointResult& p, const ScenarioConfig& base) {
  const auto cfg = apply_point(base, p.point);
  std::uint32_t nodes = 0;
  if (const auto* g = std::get_if<GeneratedNodes>(&cfg.nodes)) {
    nodes = g->count;
  } else {
    nodes = static_cast<std::uint32_t>(std::get<std::vector<NodeSpec>>(cfg.nodes).size());
  }
  std::uint32_t quorum = 1;
  if (const auto* g = std::get_if<GeneratedTasks>(&cfg.tasks)) {
    quorum = g->quorum;
  } else if (const auto& l = std::get<std::vector<TaskSpec>>(cfg.tasks); !l.empty()) {
    quorum = l.front().task.quorum;
  }
  return std::to_string(p.index) + "," + std::to_string(nodes) + "," +
         format_number(cfg.protocol.similarity_threshold) + "," + std::to_string(quorum) + "," +
         format_number(cfg.radio.loss_prob) + "," + format_number(cfg.radio.range_m);
}

inline const char* kPointColumns = "point,node_count,similarity_threshold,quorum,loss_prob,range_m";

inline std::string ci_cells(const MetricSummary& s) {
  return format_number(s.mean) + "," + opt_cell(s.ci_half_width);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace detail

/// Writes summary.csv (one row per point x replication), per-point
/// metrics.csv and aggregate.json, the plot-ready fig4/fig5/fig7 tables and
/// summary.json. Returns the files written.
inline std::vector<std::filesystem::path> write_experiment_outputs(const ExperimentPlan& plan,
                                                                   const ExperimentResult& result,
                                                                   const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  using detail::kPointColumns;
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& p, const std::string& content) {
    detail::write_file(p, content);
    written.push_back(p);
  };

  std::string summary = std::string(kPointColumns) +
                        ",rep,seed,status,nc,nat,mean_cpt,mean_cit,mean_lat_ms,trace_digest\n";
  std::string fig4 = std::string(kPointColumns) + ",nc_mean,nc_ci95,cpt_mean,cpt_ci95\n";
  std::string fig5 = std::string(kPointColumns) + ",task_id,dispatch_s,cpt_mean,cit_mean,samples\n";
  std::string fig7 = std::string(kPointColumns) + ",nat_mean,nat_ci95,lat_ms_mean,lat_ms_ci95\n";
  ojson summary_json;
  summary_json["replications"] = plan.replications;
  summary_json["master_seed"] = plan.master_seed;
  summary_json["points"] = ojson::array();

  for (const auto& p : result.points) {
    const auto cells = detail::point_cells(p, plan.base);
    std::string per_point = std::string(kMetricsCsvHeader) + "\n";
    for (const auto& r : p.reps) {
      summary += cells + "," + std::to_string(r.rep) + "," + std::to_string(r.seed) + ",";
      if (r.metrics) {
        const auto& m = *r.metrics;
        summary += "ok," + std::to_string(m.nc) + "," + std::to_string(m.nat) + "," + format_number(m.mean_cpt()) +
                   "," + format_number(m.mean_cit()) + "," + detail::opt_cell(m.mean_lat_ms()) + "," +
                   std::to_string(r.trace_digest) + "\n";
        per_point += metrics_csv_rows(m, r.rep);
      } else {
        summary += "failed,,,,,,\n";
      }
    }
    const auto records = p.records();
    const auto agg = aggregate_replications(records);
    fig4 += cells + "," + detail::ci_cells(agg.nc) + "," + detail::ci_cells(agg.cpt) + "\n";
    fig7 += cells + "," + detail::ci_cells(agg.nat) + "," + detail::ci_cells(agg.lat_ms) + "\n";

    // Per-dispatch apt/inapt series, averaged over replications by task id.
    std::map<TaskId, std::tuple<double, double, double, std::size_t>> series;
    for (const auto& rec : records) {
      for (const auto& d : rec.per_dispatch) {
        auto& [at, cpt, cit, n] = series[d.task_id];
        at += d.dispatch_time.seconds();
        cpt += d.cpt;
        cit += d.cit;
        ++n;
      }
    }
    for (const auto& [id, s] : series) {
      const auto& [at, cpt, cit, n] = s;
      const double k = static_cast<double>(n);
      fig5 += cells + "," + std::to_string(id) + "," + format_number(at / k) + "," + format_number(cpt / k) + "," +
              format_number(cit / k) + "," + std::to_string(n) + "\n";
    }

    const fs::path dir = out_dir / ("point_" + std::to_string(p.index));
    fs::create_directories(dir);
    emit(dir / "metrics.csv", per_point);
    ojson agg_json = to_json(agg);
    emit(dir / "aggregate.json", agg_json.dump(2) + "\n");

    ojson pj;
    pj["point"] = p.index;
    {
      const auto cfg = apply_point(plan.base, p.point);
      pj["similarity_threshold"] = cfg.protocol.similarity_threshold;
      pj["loss_prob"] = cfg.radio.loss_prob;
      pj["range_m"] = cfg.radio.range_m;
      if (p.point.node_count) pj["node_count"] = *p.point.node_count;
      if (p.point.quorum) pj["quorum"] = *p.point.quorum;
    }
    pj["failed"] = static_cast<std::uint64_t>(std::count_if(p.reps.begin(), p.reps.end(),
                                                             [](const auto& r) { return !r.metrics; }));
    pj["aggregate"] = std::move(agg_json);
    summary_json["points"].push_back(std::move(pj));
  }
  emit(out_dir / "summary.csv", summary);
  emit(out_dir / "fig4_nc_vs_cpt.csv", fig4);
  emit(out_dir / "fig5_apt_inapt.csv", fig5);
  emit(out_dir / "fig7_nat_lat.csv", fig7);
  emit(out_dir / "summary.json", summary_json.dump(2) + "\n");
  return written;
}

}  // namespace contaski
