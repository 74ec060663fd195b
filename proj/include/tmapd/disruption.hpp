#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tmapd/grid_map.hpp"

namespace tmapd {

enum class DisruptionCause { DroppedItem, AgentBreakdown };

const char* to_string(DisruptionCause cause);
DisruptionCause cause_from_string(const std::string& s);

// A vertex blocked for t in [t_start, t_end] inclusive. End times are never
// exposed through the observation interface.
struct Disruption {
    Vertex vertex = -1;
    int t_start = 0;
    int t_end = 0;
    DisruptionCause cause = DisruptionCause::DroppedItem;
};

struct DisruptionConfig {
    double drop_rate = 0.005;        // probability per executed move
    double breakdown_rate = 0.005;   // probability per executed move
    int duration_min = 40;           // blocked tick count, inclusive bounds
    int duration_max = 60;
};

struct ExecutedMove {
    int agent = -1;
    Vertex from = -1;
    Vertex to = -1;
};

// What planners may see: newly revealed blockages and all currently active
// ones. Deliberately carries no end times.
struct ObserveResult {
    std::vector<Vertex> newly;
    std::vector<Vertex> active;
};

// For each executed move and each enabled cause, with the configured
// probability, emits a disruption at the just-vacated vertex unless that
// vertex is occupied. Durations are uniform in [duration_min, duration_max];
// the blocked interval is [t_start, t_start + duration - 1].
std::vector<Disruption> sample_disruptions(const std::vector<ExecutedMove>& moves, int t_start,
                                           const DisruptionConfig& config,
                                           std::mt19937_64& rng,
                                           const std::function<bool(Vertex)>& occupied);

// Runtime disruption state for one simulation: either live sampling from
// executed moves, or replay of a recorded trace.
class DisruptionBook {
public:
    static DisruptionBook live(const DisruptionConfig& config, uint64_t seed);
    static DisruptionBook replay(std::vector<Disruption> trace);

    bool is_live() const { return live_; }

    // Live mode: sample new disruptions starting at t_next from the moves
    // just executed. No-op in replay mode.
    void on_moves_executed(const std::vector<ExecutedMove>& moves, int t_next,
                           const std::function<bool(Vertex)>& occupied);

    // Reveals disruptions with t_start <= t. `newly` lists those revealed
    // since the previous observe call and still active at t.
    ObserveResult observe(int t);

    // Vertices of observed disruptions still active at t. This is the
    // planner-facing blocked set before the current tick's observe call.
    std::vector<Vertex> known_active(int t) const;

    // Vertices physically blocked at t, observed or not (used by execution).
    std::vector<Vertex> physically_active(int t) const;

    // Disruptions whose last active tick was t-1 and were observed; each is
    // reported once (used for end-of-blockage events).
    std::vector<Disruption> collect_ended(int t);

    const std::vector<Disruption>& all() const { return records_; }

    static void save_trace(const std::string& path, const std::vector<Disruption>& trace);
    static std::vector<Disruption> load_trace(const std::string& path);

private:
    bool live_ = true;
    DisruptionConfig config_;
    std::mt19937_64 rng_;
    std::vector<Disruption> records_;
    std::vector<char> observed_;
    std::vector<char> end_reported_;
};

}  // namespace tmapd
