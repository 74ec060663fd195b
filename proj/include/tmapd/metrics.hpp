#pragma once

#include <string>
#include <vector>

#include "tmapd/event_log.hpp"
#include "tmapd/grid_map.hpp"

namespace tmapd {

// Shortest p->d->p round trip avoiding every pod-home cell except the task's
// own pickup cell, on the static map (no agents, no disruptions).
// kUnreachable when the delivery cannot be reached.
long long ideal_service_time(const GridMap& map, Vertex pickup, Vertex delivery);

struct TaskMetrics {
    int id = -1;
    std::string kind;
    long long ideal = -1;
    int pickup_time = -1;
    int dropoff_time = -1;

    bool completed() const { return pickup_time >= 0 && dropoff_time >= 0; }
    long long service() const { return dropoff_time - pickup_time; }
    double ratio() const { return static_cast<double>(service()) / static_cast<double>(ideal); }
};

struct DisruptionEventMetrics {
    int t = 0;
    int n_new = 0;
    int n_affected = 0;
    int n_candidates = 0;
    int n_tasks = 0;
    int n_trapped = 0;
    bool had_decision = false;  // a terraform adopt/reject was logged
    bool adopted = false;
    bool terra_failed = false;
    long long cost_plain = -1;
    long long cost_terra = -1;
    double planner_ms = 0.0;  // total planner time of that timestep
};

struct RunMetrics {
    int total_timesteps = 0;
    int completed_tasks = 0;      // standard tasks with a recorded drop-off
    int incomplete_tasks = 0;     // standard tasks not completed by run end
    int terraforming_tasks = 0;
    double throughput = 0.0;      // completed standard tasks per timestep
    double avg_ratio = 0.0;
    double max_ratio = 0.0;
    long long flowtime = 0;       // sum over agents of last-move timestep
    int makespan = 0;             // max over agents of last-move timestep
    double mean_iter_ms = 0.0;
    double p95_iter_ms = 0.0;
    std::vector<TaskMetrics> tasks;
    std::vector<DisruptionEventMetrics> disruption_events;
    std::vector<std::pair<int, double>> iteration_ms;  // (timestep, planner ms)
};

// Deterministic pure function of the event log. Throws std::runtime_error
// naming the first bad record.
RunMetrics compute_run_metrics(const std::vector<nlohmann::json>& events);

struct MetricsRow {
    uint64_t seed = 0;
    std::string algo;
    int agents = 0;
    int radius = 0;
    double drop_rate = 0.0;
    double breakdown_rate = 0.0;
    RunMetrics metrics;
};

// Fixed column set: seed,algo,agents,radius,drop_rate,breakdown_rate,
// throughput,avg_ratio,max_ratio,mean_iter_ms,p95_iter_ms
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

// Detail report: per-task records, per-timestep planner times and
// per-disruption counts.
nlohmann::json metrics_detail_json(const MetricsRow& row);

}  // namespace tmapd
