#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmapd/metrics.hpp"
#include "tmapd/simulation.hpp"

namespace tmapd {

// Full-length pairwise vertex/edge conflict scan over executed trajectories.
std::vector<Conflict> scan_trajectory_conflicts(
    const std::vector<std::vector<Vertex>>& trajectories);

// Reconstructs executed trajectories from an event log (run-header starts
// plus move events).
std::vector<std::vector<Vertex>> trajectories_from_events(
    const std::vector<nlohmann::json>& events);

struct ExperimentConfig {
    std::string map_source = "medium";  // preset name, .map file, or gen config file
    int agents = 100;
    int tasks = 600;
    std::vector<uint64_t> seeds = {1};
    std::string algo = "both-paired";  // rhcr | trhcr | both-paired
    int window = 20;
    int replan_period = 1;
    int radius = 8;
    DisruptionConfig disruption;
    std::string disruptions_mode = "live";  // "live" or "replay:<file>"
    std::string sweep;                       // "", "agents", "radius" or "dropRate"
    std::vector<int> agents_values;
    std::vector<int> radius_values;
    std::vector<double> drop_values;
    std::string out_dir = "out";
    int jobs = 0;  // 0 = hardware concurrency
    int max_timesteps = 100000;
    int pbs_max_nodes = 2000;
    bool quiet = false;
};

GridMap resolve_map(const std::string& map_source);

// Uniform (pod home, workstation) pairs, rejection-sampled for
// reachability. Deterministic per seed.
std::vector<Task> generate_tasks(const GridMap& map, int count, uint64_t seed);

// Distinct floor cells, deterministic per seed.
std::vector<Vertex> place_agents(const GridMap& map, int count, uint64_t seed);

struct RunResult {
    MetricsRow row;
    bool completed = false;
    std::vector<std::vector<Vertex>> trajectories;
    std::vector<Disruption> trace;
};

// One seeded run of one algorithm. algo is "rhcr" or "trhcr". When
// `replay_trace` is non-null the disruption history is replayed from it;
// otherwise disruptions are sampled live. Pass a log to capture events.
RunResult run_single(const GridMap& map, const ExperimentConfig& cfg, uint64_t seed,
                     const std::string& algo, const std::vector<Disruption>* replay_trace,
                     EventLog* log);

// Executes the whole experiment (sweep x seeds, worker pool), writing
// metrics.csv, summary.txt, per-run event logs, detail files and disruption
// traces under cfg.out_dir. Returns a process exit status.
int run_experiment(const ExperimentConfig& cfg);

}  // namespace tmapd
