#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tmapd/harness.hpp"

namespace {

std::vector<uint64_t> parse_seeds(const std::string& spec) {
    std::vector<uint64_t> seeds;
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const uint64_t lo = std::stoull(spec.substr(0, dots));
        const uint64_t hi = std::stoull(spec.substr(dots + 2));
        for (uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) seeds.push_back(std::stoull(item));
    return seeds;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& spec, Parse parse) {
    std::vector<T> values;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) values.push_back(parse(item));
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Lifelong warehouse pickup-and-delivery simulator: rolling-horizon planning with "
        "optional disruption-triggered terraforming"};
    app.set_config("--config", "", "Config file (INI; keys match the long flag names)");

    std::string map = "medium";
    std::string agents = "100";
    int tasks = 600;
    std::string seeds = "1";
    std::string algo = "both-paired";
    int window = 20;
    int replan_period = 1;
    std::string radius = "8";
    std::string drop_rate = "0.005";
    double breakdown_rate = 0.005;
    int duration_min = 40;
    int duration_max = 60;
    std::string disruptions = "live";
    std::string sweep;
    std::string out = "out";
    int jobs = 0;
    int max_timesteps = 100000;
    int pbs_max_nodes = 2000;
    bool desk = false;
    bool quiet = false;

    app.add_option("--map", map,
                   "Map preset (medium|large|large2wide), a .map file, or a .gencfg generator "
                   "config file");
    app.add_option("--agents", agents, "Agent count; comma list with --sweep agents");
    app.add_option("--tasks", tasks, "Number of pickup/delivery tasks");
    app.add_option("--seeds", seeds, "Seeds: '1..10' or '1,4,9'");
    app.add_option("--algo", algo, "rhcr | trhcr | both-paired")
        ->check(CLI::IsMember({"rhcr", "trhcr", "both-paired"}));
    app.add_option("--window", window, "Collision-resolution window (timesteps)");
    app.add_option("--replan-period", replan_period, "Replanning period h (h <= window)");
    app.add_option("--radius", radius, "Terraforming radius; comma list with --sweep radius");
    app.add_option("--drop-rate", drop_rate,
                   "Dropped-item rate per executed move; comma list with --sweep dropRate");
    app.add_option("--breakdown-rate", breakdown_rate, "Agent-breakdown rate per executed move");
    app.add_option("--duration-min", duration_min, "Minimum disruption duration");
    app.add_option("--duration-max", duration_max, "Maximum disruption duration");
    app.add_option("--disruptions", disruptions, "live or replay:<trace.jsonl>");
    app.add_option("--sweep", sweep, "Sweep parameter: agents | radius | dropRate")
        ->check(CLI::IsMember({"agents", "radius", "dropRate"}));
    app.add_option("--out", out, "Output directory");
    app.add_option("--jobs", jobs, "Worker threads (0 = hardware)");
    app.add_option("--max-timesteps", max_timesteps, "Safety cap per run");
    app.add_option("--pbs-max-nodes", pbs_max_nodes, "Priority-tree node cap per solve");
    app.add_flag("--desk", desk, "Desk-scale defaults: medium map, 50 agents, 200 tasks");
    app.add_flag("--quiet", quiet, "Suppress progress output");

    CLI11_PARSE(app, argc, argv);

    tmapd::ExperimentConfig cfg;
    try {
        if (desk) {
            if (!app.count("--map")) map = "medium";
            if (!app.count("--agents")) agents = "50";
            if (!app.count("--tasks")) tasks = 200;
        }
        cfg.map_source = map;
        cfg.tasks = tasks;
        cfg.seeds = parse_seeds(seeds);
        cfg.algo = algo;
        cfg.window = window;
        cfg.replan_period = replan_period;
        cfg.disruption.breakdown_rate = breakdown_rate;
        cfg.disruption.duration_min = duration_min;
        cfg.disruption.duration_max = duration_max;
        cfg.disruptions_mode = disruptions;
        cfg.sweep = sweep;
        cfg.out_dir = out;
        cfg.jobs = jobs;
        cfg.max_timesteps = max_timesteps;
        cfg.pbs_max_nodes = pbs_max_nodes;
        cfg.quiet = quiet;

        auto to_int = [](const std::string& s) { return std::stoi(s); };
        auto to_double = [](const std::string& s) { return std::stod(s); };
        if (sweep == "agents") {
            cfg.agents_values = parse_list<int>(agents, to_int);
        } else if (agents.find(',') != std::string::npos) {
            throw std::invalid_argument("--agents list requires --sweep agents");
        } else {
            cfg.agents = to_int(agents);
        }
        if (sweep == "radius") {
            cfg.radius_values = parse_list<int>(radius, to_int);
        } else if (radius.find(',') != std::string::npos) {
            throw std::invalid_argument("--radius list requires --sweep radius");
        } else {
            cfg.radius = to_int(radius);
        }
        if (sweep == "dropRate") {
            cfg.drop_values = parse_list<double>(drop_rate, to_double);
        } else if (drop_rate.find(',') != std::string::npos) {
            throw std::invalid_argument("--drop-rate list requires --sweep dropRate");
        } else {
            cfg.disruption.drop_rate = to_double(drop_rate);
        }
        if (cfg.seeds.empty()) throw std::invalid_argument("no seeds given");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    return tmapd::run_experiment(cfg);
}
