#include "tmapd/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <stdexcept>

namespace tmapd {

long long ideal_service_time(const GridMap& map, Vertex pickup, Vertex delivery) {
    std::vector<int> dist(static_cast<size_t>(map.size()), kUnreachable);
    std::deque<Vertex> queue{pickup};
    dist[static_cast<size_t>(pickup)] = 0;
    std::array<Vertex, 4> nbr{};
    while (!queue.empty()) {
        const Vertex v = queue.front();
        queue.pop_front();
        if (v == delivery) break;
        const int n = map.neighbors(v, nbr);
        for (int i = 0; i < n; ++i) {
            const Vertex u = nbr[i];
            if (dist[static_cast<size_t>(u)] != kUnreachable) continue;
            if (map.cell(u) == Cell::PodHome && u != pickup) continue;
            dist[static_cast<size_t>(u)] = dist[static_cast<size_t>(v)] + 1;
            queue.push_back(u);
        }
    }
    const int leg = dist[static_cast<size_t>(delivery)];
    if (leg == kUnreachable) return kUnreachable;
    return 2LL * leg;
}

RunMetrics compute_run_metrics(const std::vector<nlohmann::json>& events) {
    RunMetrics out;
    std::map<int, TaskMetrics> tasks;
    std::map<int, int> last_move;  // agent -> last move timestep
    std::map<int, double> tick_ms;
    std::map<int, DisruptionEventMetrics> disruptions;
    int max_t = 0;
    bool saw_end = false;

    for (size_t i = 0; i < events.size(); ++i) {
        const nlohmann::json& e = events[i];
        if (!e.is_object() || !e.contains("t") || !e.contains("kind"))
            throw std::runtime_error("bad event record " + std::to_string(i + 1) +
                                     ": missing t/kind");
        const int t = e.at("t").get<int>();
        const std::string kind = e.at("kind").get<std::string>();
        max_t = std::max(max_t, t);
        try {
            if (kind == "task-created") {
                TaskMetrics task;
                task.id = e.at("task").get<int>();
                task.kind = e.at("task_kind").get<std::string>();
                task.ideal = e.at("ideal").get<long long>();
                tasks[task.id] = task;
            } else if (kind == "pickup") {
                tasks.at(e.at("task").get<int>()).pickup_time = t;
            } else if (kind == "restore") {
                tasks.at(e.at("task").get<int>()).dropoff_time = t;
            } else if (kind == "move") {
                last_move[e.at("agent").get<int>()] = t;
            } else if (kind == "plan-timing") {
                tick_ms[t] += e.at("ms").get<double>();
            } else if (kind == "disruption-response") {
                DisruptionEventMetrics& d = disruptions[t];
                d.t = t;
                d.n_new = e.at("n_new").get<int>();
                d.n_affected = e.at("n_affected").get<int>();
            } else if (kind == "terraform-adopted" || kind == "terraform-rejected") {
                DisruptionEventMetrics& d = disruptions[t];
                d.t = t;
                d.had_decision = true;
                d.adopted = (kind == "terraform-adopted");
                d.n_affected = e.at("n_affected").get<int>();
                d.n_candidates = e.at("n_candidates").get<int>();
                d.n_tasks = e.at("n_tasks").get<int>();
                d.n_trapped = e.at("n_trapped").get<int>();
                d.terra_failed = e.at("terra_failed").get<bool>();
                d.cost_plain = e.at("cost_plain").get<long long>();
                if (!e.at("cost_terra").is_null())
                    d.cost_terra = e.at("cost_terra").get<long long>();
            } else if (kind == "run-end") {
                out.total_timesteps = t;
                saw_end = true;
            }
        } catch (const nlohmann::json::exception& err) {
            throw std::runtime_error("bad event record " + std::to_string(i + 1) + " (" +
                                     kind + "): " + err.what());
        }
    }
    if (!saw_end) out.total_timesteps = max_t;

    double ratio_sum = 0.0;
    int ratio_count = 0;
    for (auto& [id, task] : tasks) {
        if (task.kind == "terraforming") {
            ++out.terraforming_tasks;
        } else if (task.completed()) {
            ++out.completed_tasks;
            if (task.ideal > 0) {
                const double r = task.ratio();
                ratio_sum += r;
                out.max_ratio = std::max(out.max_ratio, r);
                ++ratio_count;
            }
        } else {
            ++out.incomplete_tasks;
        }
        out.tasks.push_back(task);
    }
    if (ratio_count > 0) out.avg_ratio = ratio_sum / ratio_count;
    if (out.total_timesteps > 0)
        out.throughput = static_cast<double>(out.completed_tasks) / out.total_timesteps;

    for (const auto& [agent, t] : last_move) {
        out.flowtime += t;
        out.makespan = std::max(out.makespan, t);
    }

    std::vector<double> ms_values;
    for (const auto& [t, ms] : tick_ms) {
        out.iteration_ms.emplace_back(t, ms);
        ms_values.push_back(ms);
        auto it = disruptions.find(t);
        if (it != disruptions.end()) it->second.planner_ms = ms;
    }
    if (!ms_values.empty()) {
        double sum = 0.0;
        for (double v : ms_values) sum += v;
        out.mean_iter_ms = sum / static_cast<double>(ms_values.size());
        std::vector<double> sorted = ms_values;
        std::sort(sorted.begin(), sorted.end());
        const size_t idx = static_cast<size_t>(
            std::ceil(0.95 * static_cast<double>(sorted.size()))) - 1;
        out.p95_iter_ms = sorted[std::min(idx, sorted.size() - 1)];
    }

    for (auto& [t, d] : disruptions) out.disruption_events.push_back(d);
    return out;
}

std::string metrics_csv_header() {
    return "seed,algo,agents,radius,drop_rate,breakdown_rate,throughput,avg_ratio,max_ratio,"
           "mean_iter_ms,p95_iter_ms";
}

std::string metrics_csv_row(const MetricsRow& row) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%llu,%s,%d,%d,%g,%g,%.6f,%.4f,%.4f,%.3f,%.3f",
                  static_cast<unsigned long long>(row.seed), row.algo.c_str(), row.agents,
                  row.radius, row.drop_rate, row.breakdown_rate, row.metrics.throughput,
                  row.metrics.avg_ratio, row.metrics.max_ratio, row.metrics.mean_iter_ms,
                  row.metrics.p95_iter_ms);
    return buf;
}

nlohmann::json metrics_detail_json(const MetricsRow& row) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const TaskMetrics& task : row.metrics.tasks) {
        nlohmann::json record = {{"id", task.id},
                                 {"kind", task.kind},
                                 {"ideal", task.ideal},
                                 {"pickup_time", task.pickup_time},
                                 {"dropoff_time", task.dropoff_time}};
        if (task.completed() && task.ideal > 0) {
            record["service"] = task.service();
            record["ratio"] = task.ratio();
        }
        tasks.push_back(record);
    }
    nlohmann::json iters = nlohmann::json::array();
    for (auto [t, ms] : row.metrics.iteration_ms) iters.push_back({{"t", t}, {"ms", ms}});
    nlohmann::json disruptions = nlohmann::json::array();
    for (const DisruptionEventMetrics& d : row.metrics.disruption_events) {
        disruptions.push_back({{"t", d.t},
                               {"n_new", d.n_new},
                               {"n_affected", d.n_affected},
                               {"n_candidates", d.n_candidates},
                               {"n_tasks", d.n_tasks},
                               {"n_trapped", d.n_trapped},
                               {"had_decision", d.had_decision},
                               {"adopted", d.adopted},
                               {"terra_failed", d.terra_failed},
                               {"cost_plain", d.cost_plain},
                               {"cost_terra", d.cost_terra},
                               {"planner_ms", d.planner_ms}});
    }
    return nlohmann::json{{"seed", row.seed},
                          {"algo", row.algo},
                          {"agents", row.agents},
                          {"radius", row.radius},
                          {"drop_rate", row.drop_rate},
                          {"breakdown_rate", row.breakdown_rate},
                          {"total_timesteps", row.metrics.total_timesteps},
                          {"completed_tasks", row.metrics.completed_tasks},
                          {"incomplete_tasks", row.metrics.incomplete_tasks},
                          {"terraforming_tasks", row.metrics.terraforming_tasks},
                          {"throughput", row.metrics.throughput},
                          {"avg_ratio", row.metrics.avg_ratio},
                          {"max_ratio", row.metrics.max_ratio},
                          {"flowtime", row.metrics.flowtime},
                          {"makespan", row.metrics.makespan},
                          {"tasks", tasks},
                          {"iterations", iters},
                          {"disruption_events", disruptions}};
}

}  // namespace tmapd
