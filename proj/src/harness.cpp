#include "tmapd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tmapd {

namespace fs = std::filesystem;

namespace {

std::mt19937_64 make_rng(uint64_t seed, uint64_t stream) {
    std::seed_seq seq{stream, seed};
    return std::mt19937_64(seq);
}

constexpr uint64_t kTaskStream = 0x7a5c;
constexpr uint64_t kAgentStream = 0xa9e7;

}  // namespace

std::vector<Conflict> scan_trajectory_conflicts(
    const std::vector<std::vector<Vertex>>& trajectories) {
    std::vector<Path> paths;
    size_t horizon = 0;
    for (const auto& traj : trajectories) horizon = std::max(horizon, traj.size());
    for (size_t i = 0; i < trajectories.size(); ++i) {
        Path p;
        p.owner = static_cast<int>(i);
        p.vertices = trajectories[i];
        paths.push_back(std::move(p));
    }
    return detect_collisions(paths, static_cast<int>(horizon));
}

std::vector<std::vector<Vertex>> trajectories_from_events(
    const std::vector<nlohmann::json>& events) {
    std::vector<std::vector<Vertex>> out;
    int max_t = 0;
    for (const nlohmann::json& e : events) max_t = std::max(max_t, e.at("t").get<int>());
    for (const nlohmann::json& e : events) {
        if (e.at("kind") != "run-header") continue;
        for (const auto& s : e.at("starts"))
            out.push_back(std::vector<Vertex>{s.get<Vertex>()});
    }
    if (out.empty()) throw std::runtime_error("event log has no run-header record");
    for (auto& traj : out) traj.resize(static_cast<size_t>(max_t) + 1, traj.front());
    // Apply moves, then forward-fill between them.
    for (const nlohmann::json& e : events) {
        if (e.at("kind") != "move") continue;
        const int agent = e.at("agent").get<int>();
        const int t = e.at("t").get<int>();
        out[static_cast<size_t>(agent)][static_cast<size_t>(t)] = e.at("to").get<Vertex>();
        // Mark by setting; forward fill handled below using from-values.
    }
    // Rebuild precisely: start, then per timestep use the recorded move if
    // any, else stay.
    std::vector<std::vector<std::pair<int, Vertex>>> moves(out.size());
    for (const nlohmann::json& e : events) {
        if (e.at("kind") != "move") continue;
        moves[static_cast<size_t>(e.at("agent").get<int>())].emplace_back(
            e.at("t").get<int>(), e.at("to").get<Vertex>());
    }
    for (size_t i = 0; i < out.size(); ++i) {
        std::sort(moves[i].begin(), moves[i].end());
        Vertex pos = out[i][0];
        size_t next = 0;
        for (int t = 0; t <= max_t; ++t) {
            if (next < moves[i].size() && moves[i][next].first == t) {
                pos = moves[i][next].second;
                ++next;
            }
            out[i][static_cast<size_t>(t)] = pos;
        }
    }
    return out;
}

namespace {

GeneratorConfig load_generator_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open generator config: " + path);
    GeneratorConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        try {
            if (key == "height") cfg.height = std::stoi(value);
            else if (key == "width") cfg.width = std::stoi(value);
            else if (key == "pod_rows") cfg.pod_rows = std::stoi(value);
            else if (key == "pod_blocks") cfg.pod_blocks = std::stoi(value);
            else if (key == "pods_per_block") cfg.pods_per_block = std::stoi(value);
            else if (key == "aisle_width") cfg.aisle_width = std::stoi(value);
            else if (key == "workstation_spacing") cfg.workstation_spacing = std::stoi(value);
            else if (key == "reserved_edge") cfg.reserved_edge = value.empty() ? 'T' : value[0];
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

GridMap resolve_map(const std::string& map_source) {
    if (map_source == "medium" || map_source == "large" || map_source == "large2wide")
        return generate_warehouse(preset_by_name(map_source), 0);
    if (ends_with(map_source, ".map")) return GridMap::load(map_source);
    if (ends_with(map_source, ".gencfg"))
        return generate_warehouse(load_generator_config(map_source), 0);
    throw std::invalid_argument("unknown map source: " + map_source +
                                " (expected a preset name, a .map file or a .gencfg file)");
}

std::vector<Task> generate_tasks(const GridMap& map, int count, uint64_t seed) {
    if (map.pod_homes().empty()) throw std::invalid_argument("task generation: map has no pods");
    if (map.workstations().empty())
        throw std::invalid_argument("task generation: map has no workstations");
    std::mt19937_64 rng = make_rng(seed, kTaskStream);
    std::uniform_int_distribution<size_t> pick_pod(0, map.pod_homes().size() - 1);
    std::uniform_int_distribution<size_t> pick_ws(0, map.workstations().size() - 1);
    std::vector<Task> tasks;
    tasks.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        Task task;
        task.id = i;
        task.kind = TaskKind::Standard;
        for (int tries = 0;; ++tries) {
            if (tries > 1000)
                throw std::runtime_error("task generation: no reachable pickup/delivery pair");
            task.pickup = map.pod_homes()[pick_pod(rng)];
            task.delivery = map.workstations()[pick_ws(rng)];
            task.ideal = ideal_service_time(map, task.pickup, task.delivery);
            if (task.ideal != kUnreachable) break;
        }
        task.restore_to = task.pickup;
        tasks.push_back(task);
    }
    return tasks;
}

std::vector<Vertex> place_agents(const GridMap& map, int count, uint64_t seed) {
    std::vector<Vertex> floor;
    for (Vertex v = 0; v < map.size(); ++v)
        if (map.cell(v) == Cell::Floor) floor.push_back(v);
    if (static_cast<int>(floor.size()) < count)
        throw std::invalid_argument("not enough floor cells for " + std::to_string(count) +
                                    " agents");
    std::mt19937_64 rng = make_rng(seed, kAgentStream);
    for (size_t i = 0; i < static_cast<size_t>(count); ++i) {
        std::uniform_int_distribution<size_t> pick(i, floor.size() - 1);
        std::swap(floor[i], floor[pick(rng)]);
    }
    floor.resize(static_cast<size_t>(count));
    return floor;
}

RunResult run_single(const GridMap& map, const ExperimentConfig& cfg, uint64_t seed,
                     const std::string& algo, const std::vector<Disruption>* replay_trace,
                     EventLog* log) {
    SimConfig sim_cfg;
    sim_cfg.window = cfg.window;
    sim_cfg.replan_period = cfg.replan_period;
    sim_cfg.radius = cfg.radius;
    sim_cfg.terraforming = (algo == "trhcr");
    sim_cfg.disruption = cfg.disruption;
    sim_cfg.pbs_max_nodes = cfg.pbs_max_nodes;
    sim_cfg.max_timesteps = cfg.max_timesteps;

    DisruptionBook book = replay_trace ? DisruptionBook::replay(*replay_trace)
                                       : DisruptionBook::live(cfg.disruption, seed);
    Simulation sim(map, sim_cfg, place_agents(map, cfg.agents, seed),
                   generate_tasks(map, cfg.tasks, seed), std::move(book), log);
    RunResult result;
    result.completed = sim.run();
    result.trace = sim.disruptions().all();
    result.trajectories = sim.trajectories();
    result.row.seed = seed;
    result.row.algo = algo;
    result.row.agents = cfg.agents;
    result.row.radius = cfg.radius;
    result.row.drop_rate = cfg.disruption.drop_rate;
    result.row.breakdown_rate = cfg.disruption.breakdown_rate;
    if (log) result.row.metrics = compute_run_metrics(log->records());
    return result;
}

namespace {

struct Job {
    ExperimentConfig cfg;  // per-job overrides applied
    uint64_t seed;
    std::string dir;
    std::string label;
};

struct JobOutcome {
    std::vector<MetricsRow> rows;
    std::string error;
    std::string label;
};

JobOutcome execute_job(const GridMap& map, const Job& job) {
    JobOutcome outcome;
    outcome.label = job.label;
    const ExperimentConfig& cfg = job.cfg;
    try {
        fs::create_directories(job.dir);
        const std::string tag = std::to_string(job.seed);

        const std::vector<Disruption>* replay = nullptr;
        std::vector<Disruption> file_trace;
        if (cfg.disruptions_mode.rfind("replay:", 0) == 0) {
            file_trace = DisruptionBook::load_trace(cfg.disruptions_mode.substr(7));
            replay = &file_trace;
        }

        auto write_run = [&](const std::string& algo, const std::vector<Disruption>* trace_in)
            -> RunResult {
            EventLog log;
            RunResult r = run_single(map, cfg, job.seed, algo, trace_in, &log);
            log.write_jsonl(job.dir + "/events-" + tag + "-" + algo + ".jsonl");
            std::ofstream detail(job.dir + "/detail-" + tag + "-" + algo + ".json");
            detail << metrics_detail_json(r.row).dump(2) << "\n";
            return r;
        };

        if (cfg.algo == "rhcr" || cfg.algo == "trhcr") {
            RunResult r = write_run(cfg.algo, replay);
            DisruptionBook::save_trace(job.dir + "/disruptions-" + tag + ".jsonl", r.trace);
            outcome.rows.push_back(r.row);
        } else if (cfg.algo == "both-paired") {
            RunResult base = write_run("rhcr", replay);
            DisruptionBook::save_trace(job.dir + "/disruptions-" + tag + ".jsonl", base.trace);
            outcome.rows.push_back(base.row);
            RunResult terra = write_run("trhcr", &base.trace);
            outcome.rows.push_back(terra.row);
        } else {
            throw std::invalid_argument("unknown algo: " + cfg.algo);
        }
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    return outcome;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
    GridMap map;
    try {
        map = resolve_map(cfg.map_source);
        map.validate();
        if (cfg.algo != "rhcr" && cfg.algo != "trhcr" && cfg.algo != "both-paired")
            throw std::invalid_argument("unknown algo: " + cfg.algo);
        if (cfg.window < cfg.replan_period || cfg.replan_period < 1)
            throw std::invalid_argument("require window >= replan-period >= 1");
        fs::create_directories(cfg.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    // Expand sweep points.
    std::vector<Job> jobs;
    auto add_jobs = [&](const ExperimentConfig& point, const std::string& dir,
                        const std::string& label) {
        for (uint64_t seed : cfg.seeds)
            jobs.push_back(Job{point, seed, dir,
                               label + " seed " + std::to_string(seed)});
    };
    if (cfg.sweep.empty()) {
        add_jobs(cfg, cfg.out_dir, "run");
    } else if (cfg.sweep == "agents") {
        for (int a : cfg.agents_values) {
            ExperimentConfig point = cfg;
            point.agents = a;
            add_jobs(point, cfg.out_dir + "/agents-" + std::to_string(a),
                     "agents=" + std::to_string(a));
        }
    } else if (cfg.sweep == "radius") {
        for (int r : cfg.radius_values) {
            ExperimentConfig point = cfg;
            point.radius = r;
            add_jobs(point, cfg.out_dir + "/radius-" + std::to_string(r),
                     "radius=" + std::to_string(r));
        }
    } else if (cfg.sweep == "dropRate") {
        for (double d : cfg.drop_values) {
            ExperimentConfig point = cfg;
            point.disruption.drop_rate = d;
            std::ostringstream name;
            name << "drop-" << d;
            add_jobs(point, cfg.out_dir + "/" + name.str(), "dropRate=" + name.str());
        }
    } else {
        std::cerr << "config error: unknown sweep parameter: " << cfg.sweep << "\n";
        return 2;
    }
    if (jobs.empty()) {
        std::cerr << "warning: no runs requested (empty sweep value list?)\n";
        return 0;
    }

    std::atomic<size_t> next{0};
    std::mutex sink_mutex;
    std::vector<MetricsRow> rows;
    std::vector<std::string> errors;
    int workers = cfg.jobs > 0 ? cfg.jobs
                               : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    auto worker = [&]() {
        for (;;) {
            const size_t idx = next.fetch_add(1);
            if (idx >= jobs.size()) break;
            JobOutcome outcome = execute_job(map, jobs[idx]);
            std::lock_guard<std::mutex> lock(sink_mutex);
            if (!outcome.error.empty()) {
                errors.push_back(outcome.label + ": " + outcome.error);
            } else {
                for (MetricsRow& row : outcome.rows) rows.push_back(std::move(row));
            }
            if (!cfg.quiet)
                std::cout << "[" << (idx + 1) << "/" << jobs.size() << "] "
                          << outcome.label
                          << (outcome.error.empty() ? " done" : " FAILED") << "\n";
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();

    std::sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        if (a.agents != b.agents) return a.agents < b.agents;
        if (a.radius != b.radius) return a.radius < b.radius;
        if (a.drop_rate != b.drop_rate) return a.drop_rate < b.drop_rate;
        if (a.seed != b.seed) return a.seed < b.seed;
        return a.algo < b.algo;
    });

    std::ofstream csv(cfg.out_dir + "/metrics.csv");
    csv << metrics_csv_header() << "\n";
    for (const MetricsRow& row : rows) csv << metrics_csv_row(row) << "\n";

    std::ostringstream summary;
    summary << "runs: " << rows.size() << " ok, " << errors.size() << " failed\n";
    auto mean_of = [&](const std::string& algo, auto getter) {
        double sum = 0;
        int n = 0;
        for (const MetricsRow& row : rows)
            if (row.algo == algo) {
                sum += getter(row);
                ++n;
            }
        return n ? sum / n : 0.0;
    };
    for (const std::string algo : {"rhcr", "trhcr"}) {
        const double tp = mean_of(algo, [](const MetricsRow& r) { return r.metrics.throughput; });
        const double ar = mean_of(algo, [](const MetricsRow& r) { return r.metrics.avg_ratio; });
        const double mr = mean_of(algo, [](const MetricsRow& r) { return r.metrics.max_ratio; });
        int n = 0;
        for (const MetricsRow& row : rows)
            if (row.algo == algo) ++n;
        if (n > 0)
            summary << algo << ": runs " << n << ", mean throughput " << tp
                    << ", mean avg-ratio " << ar << ", mean max-ratio " << mr << "\n";
    }
    // Paired throughput ratios per (agents, radius, drop_rate, seed).
    {
        std::vector<double> ratios;
        for (const MetricsRow& a : rows) {
            if (a.algo != "trhcr") continue;
            for (const MetricsRow& b : rows) {
                if (b.algo == "rhcr" && b.seed == a.seed && b.agents == a.agents &&
                    b.radius == a.radius && b.drop_rate == a.drop_rate &&
                    b.metrics.throughput > 0) {
                    ratios.push_back(a.metrics.throughput / b.metrics.throughput);
                }
            }
        }
        if (!ratios.empty()) {
            double sum = 0;
            for (double r : ratios) sum += r;
            summary << "paired throughput ratio trhcr/rhcr: mean "
                    << sum / static_cast<double>(ratios.size()) << " over " << ratios.size()
                    << " pairs\n";
        }
    }
    for (const std::string& err : errors) summary << "error: " << err << "\n";
    std::ofstream(cfg.out_dir + "/summary.txt") << summary.str();
    if (!cfg.quiet) std::cout << summary.str();

    if (!errors.empty() && rows.empty()) return 1;
    return 0;
}

}  // namespace tmapd
