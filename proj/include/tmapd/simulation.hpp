#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "tmapd/disruption.hpp"
#include "tmapd/event_log.hpp"
#include "tmapd/grid_map.hpp"
#include "tmapd/occupancy.hpp"
#include "tmapd/pbs.hpp"

namespace tmapd {

enum class TaskKind { Standard, Terraforming };
enum class TaskState { Queued, Enroute, Delivering, Restoring, Done };

const char* to_string(TaskKind kind);
const char* to_string(TaskState state);

// Pickup/delivery pair with lifecycle state. The pickup time is the first
// arrival at the pickup cell; the drop-off time is the first return of the
// pod to its original cell after delivery.
struct Task {
    int id = -1;
    TaskKind kind = TaskKind::Standard;
    int pod = -1;
    Vertex pickup = -1;
    Vertex delivery = -1;
    Vertex restore_to = -1;
    TaskState state = TaskState::Queued;
    int agent = -1;
    int create_time = 0;
    int pickup_time = -1;
    int delivery_time = -1;
    int dropoff_time = -1;
    long long ideal = -1;  // ideal service time; -1 for terraforming tasks
};

struct AgentState {
    int id = -1;
    Vertex position = -1;
    int carrying = -1;  // pod id
    int task = -1;
    Path committed;
    int committed_at = -1;
    bool wipe_priority = true;
};

struct SimConfig {
    int window = 20;
    int replan_period = 1;  // h; plans are refreshed every h timesteps
    int radius = 8;         // terraforming radius; 0 disables candidate pods
    bool terraforming = false;
    DisruptionConfig disruption;
    int pbs_max_nodes = 2000;
    int max_timesteps = 100000;
};

// Greedy assignment plan: which agent takes which task, and which standard
// tasks get postponed back to the queue to free their agents.
struct AssignmentPlan {
    std::vector<std::pair<int, int>> pairs;  // (agent id, task id)
    std::vector<int> postponed;              // standard task ids returned to the queue
};

// ---- Pure helpers (exposed for tests) ----

// Agents whose path meets a disrupted vertex within the window, closed under
// "gives precedence to": if a is affected and a has precedence over b, then b
// is affected too.
std::vector<int> affected_agents(const std::vector<Path>& paths,
                                 const std::vector<Vertex>& disrupted,
                                 const PrioritySet& priorities, int window);

// Resting, unclaimed pods within graph distance `radius` of any disrupted
// vertex; pods sitting on a disrupted vertex are excluded.
std::vector<int> candidate_obstacles(const GridMap& map, const std::vector<PodState>& pods,
                                     const std::vector<char>& claimed,
                                     const std::vector<Vertex>& disrupted, int radius);

// Nearest reserved vertex to v by graph distance, ties by (row, col); skips
// vertices in `excluded`. Falls back to the nearest unexcluded floor cell
// adjacent to the reserved set (flagged via `used_fallback`).
Vertex nearest_reserved(const GridMap& map, Vertex v, const std::vector<char>& excluded,
                        bool* used_fallback = nullptr);

// ---- Simulation ----

class Simulation {
public:
    Simulation(GridMap map, SimConfig config, std::vector<Vertex> agent_starts,
               std::vector<Task> tasks, DisruptionBook book, EventLog* log);

    const GridMap& map() const { return map_; }
    const SimConfig& config() const { return config_; }
    int now() const { return t_; }
    const std::vector<AgentState>& agents() const { return agents_; }
    const std::vector<PodState>& pods() const { return pods_; }
    const std::vector<Task>& tasks() const { return tasks_; }
    const std::deque<int>& queue() const { return queue_; }
    const PrioritySet& priorities() const { return priorities_; }
    const DisruptionBook& disruptions() const { return book_; }

    // Executed positions: trajectory[agent][t] for t in [0, now()].
    const std::vector<std::vector<Vertex>>& trajectories() const { return trajectories_; }

    bool finished() const;

    // One rolling-horizon iteration: assign + plan at the current timestep
    // (plus the disruption-response pipeline when new disruptions appear),
    // then execute one joint action.
    void step();

    // Runs to completion or to config.max_timesteps. Returns true when all
    // tasks finished.
    bool run();

    // Spec surface: true iff v hosts an active (known) disruption or a
    // resting pod not assigned to `agent`.
    bool blocked_at(Vertex v, int agent) const;

    // Goal chain derived from the agent's task state.
    std::vector<Vertex> goal_chain(int agent) const;

    std::vector<int> trapped_agents_now() const;

private:
    OccupancyView make_view(const std::vector<Vertex>& disrupted) const;
    OccupancyView make_view_without(const std::vector<int>& excluded_pods,
                                    const std::vector<Vertex>& disrupted) const;
    int own_pod(int agent) const;
    bool task_startable(const Task& task) const;
    std::vector<char> claimed_pods() const;
    std::vector<char> reserved_excluded() const;

    void assign_tasks();
    AssignmentPlan plan_assignment(const std::vector<Task>& drafts) const;
    void apply_assignment(const AssignmentPlan& plan, const std::vector<Task>& drafts);

    void plan_all(const std::vector<Vertex>& known_disrupted);
    void plan_affected(const std::vector<int>& affected, const std::vector<Vertex>& disrupted);
    std::vector<Task> make_terraforming_drafts(const std::vector<int>& affected,
                                               const std::vector<int>& candidates,
                                               const std::vector<Vertex>& disrupted);
    void run_terraforming(const std::vector<int>& affected, const ObserveResult& obs);
    void normalize_committed();
    void fallback_paths(const std::vector<Vertex>& disrupted);
    void advance();

    PlanEntity entity_for(int agent, const std::vector<Vertex>* goals_override = nullptr) const;
    long long committed_cost() const;
    void adopt_solution(const PbsSolution& solution);

    GridMap map_;
    SimConfig config_;
    std::vector<AgentState> agents_;
    std::vector<PodState> pods_;
    std::vector<int> pod_by_home_;  // home vertex -> pod id (kUnreachable none)
    std::vector<Task> tasks_;
    std::deque<int> queue_;
    PrioritySet priorities_;
    DisruptionBook book_;
    EventLog* log_;
    int t_ = 0;
    bool planned_this_tick_ = false;
    std::vector<std::vector<Vertex>> trajectories_;
    double tick_plan_ms_ = 0.0;
};

}  // namespace tmapd
