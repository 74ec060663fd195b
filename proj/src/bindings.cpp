#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tmapd/harness.hpp"

namespace py = pybind11;
using namespace tmapd;

namespace {

GeneratorConfig config_from_kwargs(const py::dict& kwargs) {
    GeneratorConfig cfg;
    for (auto item : kwargs) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "height") cfg.height = py::cast<int>(item.second);
        else if (key == "width") cfg.width = py::cast<int>(item.second);
        else if (key == "pod_rows") cfg.pod_rows = py::cast<int>(item.second);
        else if (key == "pod_blocks") cfg.pod_blocks = py::cast<int>(item.second);
        else if (key == "pods_per_block") cfg.pods_per_block = py::cast<int>(item.second);
        else if (key == "aisle_width") cfg.aisle_width = py::cast<int>(item.second);
        else if (key == "workstation_spacing")
            cfg.workstation_spacing = py::cast<int>(item.second);
        else if (key == "reserved_edge")
            cfg.reserved_edge = py::cast<std::string>(item.second).at(0);
        else throw std::invalid_argument("unknown generator key: " + key);
    }
    return cfg;
}

py::dict row_to_dict(const MetricsRow& row) {
    py::dict d;
    d["seed"] = row.seed;
    d["algo"] = row.algo;
    d["agents"] = row.agents;
    d["radius"] = row.radius;
    d["drop_rate"] = row.drop_rate;
    d["breakdown_rate"] = row.breakdown_rate;
    d["throughput"] = row.metrics.throughput;
    d["avg_ratio"] = row.metrics.avg_ratio;
    d["max_ratio"] = row.metrics.max_ratio;
    d["completed_tasks"] = row.metrics.completed_tasks;
    d["incomplete_tasks"] = row.metrics.incomplete_tasks;
    d["terraforming_tasks"] = row.metrics.terraforming_tasks;
    d["total_timesteps"] = row.metrics.total_timesteps;
    d["flowtime"] = row.metrics.flowtime;
    d["makespan"] = row.metrics.makespan;
    d["mean_iter_ms"] = row.metrics.mean_iter_ms;
    d["p95_iter_ms"] = row.metrics.p95_iter_ms;
    return d;
}

ExperimentConfig experiment_from_kwargs(const py::kwargs& kwargs) {
    ExperimentConfig cfg;
    cfg.seeds.clear();
    for (auto item : kwargs) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "map") cfg.map_source = py::cast<std::string>(item.second);
        else if (key == "agents") cfg.agents = py::cast<int>(item.second);
        else if (key == "tasks") cfg.tasks = py::cast<int>(item.second);
        else if (key == "window") cfg.window = py::cast<int>(item.second);
        else if (key == "replan_period") cfg.replan_period = py::cast<int>(item.second);
        else if (key == "radius") cfg.radius = py::cast<int>(item.second);
        else if (key == "drop_rate") cfg.disruption.drop_rate = py::cast<double>(item.second);
        else if (key == "breakdown_rate")
            cfg.disruption.breakdown_rate = py::cast<double>(item.second);
        else if (key == "duration_min") cfg.disruption.duration_min = py::cast<int>(item.second);
        else if (key == "duration_max") cfg.disruption.duration_max = py::cast<int>(item.second);
        else if (key == "max_timesteps") cfg.max_timesteps = py::cast<int>(item.second);
        else if (key == "pbs_max_nodes") cfg.pbs_max_nodes = py::cast<int>(item.second);
        else if (key == "seed") cfg.seeds = {py::cast<uint64_t>(item.second)};
        else throw std::invalid_argument("unknown run key: " + key);
    }
    if (cfg.seeds.empty()) cfg.seeds = {1};
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lifelong MAPD solver with disruption-triggered terraforming";

    m.def("presets", [] { return std::vector<std::string>{"medium", "large", "large2wide"}; });

    m.def(
        "generate_map",
        [](const std::string& preset, uint64_t seed) {
            return generate_warehouse(preset_by_name(preset), seed).to_text();
        },
        py::arg("preset"), py::arg("seed") = 0,
        "ASCII map text for a named preset");

    m.def(
        "generate_map_custom",
        [](const py::dict& kwargs, uint64_t seed) {
            return generate_warehouse(config_from_kwargs(kwargs), seed).to_text();
        },
        py::arg("config"), py::arg("seed") = 0);

    m.def("graph_distance", [](const std::string& map_text, int u, int v) {
        return GridMap::from_text(map_text).graph_distance(u, v);
    });

    m.def("ideal_service_time", [](const std::string& map_text, int pickup, int delivery) {
        return ideal_service_time(GridMap::from_text(map_text), pickup, delivery);
    });

    m.def(
        "solve_wpbs",
        [](const std::string& map_text, const std::vector<int>& starts,
           const std::vector<std::vector<int>>& goal_chains, int window,
           const std::vector<int>& demi_starts) {
            const GridMap map = GridMap::from_text(map_text);
            if (starts.size() != goal_chains.size())
                throw std::invalid_argument("starts and goal_chains must align");
            std::vector<PlanEntity> entities;
            for (size_t i = 0; i < starts.size(); ++i) {
                PlanEntity e;
                e.id = static_cast<int>(entities.size());
                e.start = starts[i];
                e.goals = goal_chains[i];
                entities.push_back(std::move(e));
            }
            for (int s : demi_starts) {
                PlanEntity e;
                e.id = static_cast<int>(entities.size());
                e.start = s;
                e.goals = {s};
                e.demi = true;
                entities.push_back(std::move(e));
            }
            // Pods on the map block statically unless they host a demi-agent.
            std::vector<PodState> pods;
            for (Vertex home : map.pod_homes()) {
                const bool is_demi =
                    std::find(demi_starts.begin(), demi_starts.end(), home) != demi_starts.end();
                if (is_demi) continue;
                PodState pod;
                pod.id = static_cast<int>(pods.size());
                pod.home = home;
                pod.location = home;
                pods.push_back(pod);
            }
            const OccupancyView view(map, pods, {}, 0);
            PbsSolution solution =
                solve_wpbs(map, view, entities, PrioritySet{}, PbsOptions{window, 2000});
            py::dict out;
            out["solved"] = solution.solved;
            out["cost"] = solution.cost;
            std::vector<std::vector<int>> paths;
            for (const Path& p : solution.paths) paths.push_back(p.vertices);
            out["paths"] = paths;
            return out;
        },
        py::arg("map"), py::arg("starts"), py::arg("goal_chains"), py::arg("window") = 20,
        py::arg("demi_starts") = std::vector<int>{},
        "One-shot windowed PBS solve; demi_starts must be pod cells");

    m.def(
        "run_single",
        [](const py::kwargs& kwargs) {
            ExperimentConfig cfg = experiment_from_kwargs(kwargs);
            std::string algo = "rhcr";
            if (kwargs.contains("algo")) algo = py::cast<std::string>(kwargs["algo"]);
            if (algo != "rhcr" && algo != "trhcr")
                throw std::invalid_argument("run_single algo must be rhcr or trhcr");
            const GridMap map = resolve_map(cfg.map_source);
            EventLog log;
            RunResult r = run_single(map, cfg, cfg.seeds.front(), algo, nullptr, &log);
            py::dict out = row_to_dict(r.row);
            out["completed"] = r.completed;
            return out;
        },
        "One seeded run; kwargs: map, agents, tasks, seed, algo, window, radius, drop_rate, "
        "breakdown_rate, ...");

    m.def(
        "run_paired",
        [](const py::kwargs& kwargs) {
            ExperimentConfig cfg = experiment_from_kwargs(kwargs);
            const GridMap map = resolve_map(cfg.map_source);
            const uint64_t seed = cfg.seeds.front();
            EventLog base_log;
            RunResult base = run_single(map, cfg, seed, "rhcr", nullptr, &base_log);
            EventLog terra_log;
            RunResult terra = run_single(map, cfg, seed, "trhcr", &base.trace, &terra_log);
            py::dict out;
            py::dict base_row = row_to_dict(base.row);
            base_row["completed"] = base.completed;
            py::dict terra_row = row_to_dict(terra.row);
            terra_row["completed"] = terra.completed;
            out["rhcr"] = base_row;
            out["trhcr"] = terra_row;
            return out;
        },
        "Paired run: rhcr records the disruption trace, trhcr replays it");

    m.attr("__version__") = "0.1.0";
}
