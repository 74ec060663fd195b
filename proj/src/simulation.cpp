#include "tmapd/simulation.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <deque>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "tmapd/metrics.hpp"

namespace tmapd {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

const char* to_string(TaskKind kind) {
    return kind == TaskKind::Standard ? "standard" : "terraforming";
}

const char* to_string(TaskState state) {
    switch (state) {
        case TaskState::Queued: return "queued";
        case TaskState::Enroute: return "enroute";
        case TaskState::Delivering: return "delivering";
        case TaskState::Restoring: return "restoring";
        case TaskState::Done: return "done";
    }
    return "?";
}

std::vector<int> affected_agents(const std::vector<Path>& paths,
                                 const std::vector<Vertex>& disrupted,
                                 const PrioritySet& priorities, int window) {
    std::unordered_set<Vertex> bad(disrupted.begin(), disrupted.end());
    std::vector<int> seeds;
    for (size_t i = 0; i < paths.size(); ++i) {
        for (int k = 0; k <= window; ++k) {
            if (bad.count(paths[i].at(k))) {
                seeds.push_back(static_cast<int>(i));
                break;
            }
        }
    }
    return priorities.descendants_closure(seeds);
}

std::vector<int> candidate_obstacles(const GridMap& map, const std::vector<PodState>& pods,
                                     const std::vector<char>& claimed,
                                     const std::vector<Vertex>& disrupted, int radius) {
    std::vector<int> out;
    if (radius < 1 || disrupted.empty()) return out;
    std::unordered_set<Vertex> bad(disrupted.begin(), disrupted.end());
    for (const PodState& pod : pods) {
        if (!pod.resting()) continue;
        if (pod.id < static_cast<int>(claimed.size()) && claimed[pod.id]) continue;
        if (bad.count(pod.location)) continue;
        for (Vertex v : disrupted) {
            if (map.graph_distance(pod.location, v) <= radius) {
                out.push_back(pod.id);
                break;
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Vertex nearest_reserved(const GridMap& map, Vertex v, const std::vector<char>& excluded,
                        bool* used_fallback) {
    if (used_fallback) *used_fallback = false;
    Vertex best = -1;
    int best_dist = std::numeric_limits<int>::max();
    for (Vertex r : map.reserved()) {
        if (!excluded.empty() && excluded[static_cast<size_t>(r)]) continue;
        const int d = map.graph_distance(v, r);
        if (d < best_dist || (d == best_dist && r < best)) {
            best = r;
            best_dist = d;
        }
    }
    if (best >= 0) return best;
    // All reserved vertices occupied: nearest unexcluded floor cell adjacent
    // to the reserved set, then any unexcluded floor cell.
    if (used_fallback) *used_fallback = true;
    std::array<Vertex, 4> nbr{};
    for (Vertex r : map.reserved()) {
        const int n = map.neighbors(r, nbr);
        for (int i = 0; i < n; ++i) {
            const Vertex u = nbr[i];
            if (map.cell(u) != Cell::Floor) continue;
            if (!excluded.empty() && excluded[static_cast<size_t>(u)]) continue;
            const int d = map.graph_distance(v, u);
            if (d < best_dist || (d == best_dist && u < best)) {
                best = u;
                best_dist = d;
            }
        }
    }
    if (best >= 0) return best;
    for (Vertex u = 0; u < map.size(); ++u) {
        if (map.cell(u) != Cell::Floor) continue;
        if (!excluded.empty() && excluded[static_cast<size_t>(u)]) continue;
        const int d = map.graph_distance(v, u);
        if (d < best_dist || (d == best_dist && u < best)) {
            best = u;
            best_dist = d;
        }
    }
    if (best < 0) throw std::runtime_error("nearest_reserved: no usable parking cell");
    return best;
}

Simulation::Simulation(GridMap map, SimConfig config, std::vector<Vertex> agent_starts,
                       std::vector<Task> tasks, DisruptionBook book, EventLog* log)
    : map_(std::move(map)),
      config_(config),
      tasks_(std::move(tasks)),
      book_(std::move(book)),
      log_(log) {
    if (config_.window < config_.replan_period || config_.replan_period < 1)
        throw std::invalid_argument("simulation: require window >= replan_period >= 1");
    if (config_.terraforming && map_.reserved().empty())
        throw std::invalid_argument(
            "simulation: terraforming requires reserved parking vertices on the map");

    pod_by_home_.assign(static_cast<size_t>(map_.size()), kUnreachable);
    pods_.reserve(map_.pod_homes().size());
    for (Vertex home : map_.pod_homes()) {
        PodState pod;
        pod.id = static_cast<int>(pods_.size());
        pod.home = home;
        pod.location = home;
        pod.status = PodStatus::AtHome;
        pod_by_home_[static_cast<size_t>(home)] = pod.id;
        pods_.push_back(pod);
    }

    agents_.reserve(agent_starts.size());
    std::unordered_set<Vertex> taken;
    for (Vertex s : agent_starts) {
        if (!map_.contains(s)) throw std::invalid_argument("simulation: agent start off map");
        if (pod_by_home_[static_cast<size_t>(s)] != kUnreachable)
            throw std::invalid_argument("simulation: agent start on a pod cell");
        if (!taken.insert(s).second)
            throw std::invalid_argument("simulation: duplicate agent start");
        AgentState a;
        a.id = static_cast<int>(agents_.size());
        a.position = s;
        agents_.push_back(a);
    }

    for (Task& task : tasks_) {
        if (task.kind == TaskKind::Standard) {
            const int pod = pod_by_home_[static_cast<size_t>(task.pickup)];
            if (pod == kUnreachable)
                throw std::invalid_argument("simulation: task pickup is not a pod cell");
            task.pod = pod;
            if (task.restore_to < 0) task.restore_to = task.pickup;
            if (task.ideal < 0) task.ideal = ideal_service_time(map_, task.pickup, task.delivery);
            if (task.ideal == kUnreachable)
                throw std::invalid_argument("simulation: task delivery unreachable");
        }
        queue_.push_back(task.id);
    }

    trajectories_.resize(agents_.size());
    for (const AgentState& a : agents_) trajectories_[static_cast<size_t>(a.id)] = {a.position};

    if (log_) {
        nlohmann::json starts = nlohmann::json::array();
        for (const AgentState& a : agents_) starts.push_back(a.position);
        log_->emit(0, "run-header",
                   {{"agents", static_cast<int>(agents_.size())},
                    {"height", map_.height()},
                    {"width", map_.width()},
                    {"window", config_.window},
                    {"radius", config_.radius},
                    {"terraforming", config_.terraforming},
                    {"starts", starts}});
        for (const Task& task : tasks_)
            log_->emit(0, "task-created",
                       {{"task", task.id},
                        {"task_kind", to_string(task.kind)},
                        {"pickup", task.pickup},
                        {"delivery", task.delivery},
                        {"ideal", task.ideal}});
    }
}

bool Simulation::finished() const {
    if (!queue_.empty()) return false;
    for (const AgentState& a : agents_)
        if (a.task >= 0) return false;
    return true;
}

OccupancyView Simulation::make_view(const std::vector<Vertex>& disrupted) const {
    return OccupancyView(map_, pods_, disrupted, t_);
}

OccupancyView Simulation::make_view_without(const std::vector<int>& excluded_pods,
                                            const std::vector<Vertex>& disrupted) const {
    std::vector<PodState> pods = pods_;
    for (int id : excluded_pods) pods[static_cast<size_t>(id)].status = PodStatus::Carried;
    return OccupancyView(map_, pods, disrupted, t_);
}

int Simulation::own_pod(int agent) const {
    const int task = agents_[static_cast<size_t>(agent)].task;
    return task >= 0 ? tasks_[static_cast<size_t>(task)].pod : -1;
}

bool Simulation::blocked_at(Vertex v, int agent) const {
    const OccupancyView view = make_view(book_.known_active(t_));
    return view.blocked(v, own_pod(agent));
}

std::vector<Vertex> Simulation::goal_chain(int agent) const {
    const AgentState& a = agents_[static_cast<size_t>(agent)];
    if (a.task < 0) return {};
    const Task& task = tasks_[static_cast<size_t>(a.task)];
    switch (task.state) {
        case TaskState::Enroute: return {task.pickup, task.delivery, task.restore_to};
        case TaskState::Delivering: return {task.delivery, task.restore_to};
        case TaskState::Restoring: return {task.restore_to};
        default: return {};
    }
}

std::vector<char> Simulation::claimed_pods() const {
    std::vector<char> claimed(pods_.size(), 0);
    for (const Task& task : tasks_) {
        if (task.pod < 0) continue;
        const bool active = task.state == TaskState::Enroute ||
                            task.state == TaskState::Delivering ||
                            task.state == TaskState::Restoring;
        const bool queued_terra =
            task.kind == TaskKind::Terraforming && task.state == TaskState::Queued;
        if (active || queued_terra) claimed[static_cast<size_t>(task.pod)] = 1;
    }
    return claimed;
}

std::vector<char> Simulation::reserved_excluded() const {
    std::vector<char> excluded(static_cast<size_t>(map_.size()), 0);
    for (const PodState& pod : pods_)
        if (pod.resting() && map_.cell(pod.location) == Cell::Reserved)
            excluded[static_cast<size_t>(pod.location)] = 1;
    for (const Task& task : tasks_)
        if (task.kind == TaskKind::Terraforming && task.state != TaskState::Done)
            excluded[static_cast<size_t>(task.delivery)] = 1;
    return excluded;
}

bool Simulation::task_startable(const Task& task) const {
    if (task.pod < 0) return true;
    const PodState& pod = pods_[static_cast<size_t>(task.pod)];
    if (pod.status != PodStatus::AtHome) return false;
    for (const Task& other : tasks_) {
        if (other.id == task.id || other.pod != task.pod) continue;
        const bool active = other.state == TaskState::Enroute ||
                            other.state == TaskState::Delivering ||
                            other.state == TaskState::Restoring;
        const bool queued_terra =
            other.kind == TaskKind::Terraforming && other.state == TaskState::Queued;
        if (active || queued_terra) return false;
    }
    return true;
}

void Simulation::assign_tasks() {
    std::vector<int> free;
    for (const AgentState& a : agents_)
        if (a.task < 0) free.push_back(a.id);
    if (free.empty() || queue_.empty()) return;

    // Only the first |free agents| queue positions are eligible this round.
    struct Eligible {
        int task;
        int pos;
    };
    std::vector<Eligible> eligible;
    const int window = std::min<int>(static_cast<int>(free.size()),
                                     static_cast<int>(queue_.size()));
    for (int pos = 0; pos < window; ++pos) {
        const int tid = queue_[static_cast<size_t>(pos)];
        if (task_startable(tasks_[static_cast<size_t>(tid)])) eligible.push_back({tid, pos});
    }

    std::vector<int> assigned;
    while (!free.empty() && !eligible.empty()) {
        int best_agent = -1, best_idx = -1;
        int best_dist = std::numeric_limits<int>::max();
        for (int a : free) {
            for (size_t e = 0; e < eligible.size(); ++e) {
                const Task& task = tasks_[static_cast<size_t>(eligible[e].task)];
                const int d = map_.graph_distance(agents_[static_cast<size_t>(a)].position,
                                                  task.pickup);
                if (d < best_dist ||
                    (d == best_dist &&
                     (a < best_agent ||
                      (a == best_agent && eligible[e].pos < eligible[best_idx].pos)))) {
                    best_dist = d;
                    best_agent = a;
                    best_idx = static_cast<int>(e);
                }
            }
        }
        const int tid = eligible[static_cast<size_t>(best_idx)].task;
        Task& task = tasks_[static_cast<size_t>(tid)];
        AgentState& agent = agents_[static_cast<size_t>(best_agent)];
        task.state = TaskState::Enroute;
        task.agent = best_agent;
        agent.task = tid;
        agent.wipe_priority = true;
        assigned.push_back(tid);
        if (log_)
            log_->emit(t_, "assign",
                       {{"task", tid}, {"agent", best_agent}, {"distance", best_dist}});
        free.erase(std::find(free.begin(), free.end(), best_agent));
        eligible.erase(eligible.begin() + best_idx);
    }
    for (int tid : assigned)
        queue_.erase(std::find(queue_.begin(), queue_.end(), tid));
}

PlanEntity Simulation::entity_for(int agent, const std::vector<Vertex>* goals_override) const {
    const AgentState& a = agents_[static_cast<size_t>(agent)];
    PlanEntity e;
    e.id = agent;
    e.start = a.position;
    e.goals = goals_override ? *goals_override : goal_chain(agent);
    e.own_pod = own_pod(agent);
    return e;
}

long long Simulation::committed_cost() const {
    long long total = 0;
    for (const AgentState& a : agents_) total += a.committed.cost;
    return total;
}

void Simulation::adopt_solution(const PbsSolution& solution) {
    for (AgentState& a : agents_) {
        a.committed = solution.paths[static_cast<size_t>(a.id)];
        a.committed_at = t_;
    }
    priorities_ = solution.priorities;
}

void Simulation::plan_all(const std::vector<Vertex>& known_disrupted) {
    for (AgentState& a : agents_) {
        if (a.wipe_priority) {
            priorities_.erase_involving(a.id);
            a.wipe_priority = false;
        }
    }
    const OccupancyView view = make_view(known_disrupted);
    std::vector<PlanEntity> entities;
    entities.reserve(agents_.size());
    for (const AgentState& a : agents_) entities.push_back(entity_for(a.id));

    PbsOptions options{config_.window, config_.pbs_max_nodes};
    const auto start = std::chrono::steady_clock::now();
    PbsSolution solution = solve_wpbs(map_, view, entities, priorities_, options);
    const double ms = ms_since(start);
    tick_plan_ms_ += ms;
    if (log_)
        log_->emit(t_, "plan-timing",
                   {{"phase", "plan"},
                    {"ms", ms},
                    {"entities", static_cast<int>(entities.size())},
                    {"nodes", solution.stats.nodes_expanded}});
    if (solution.solved) {
        adopt_solution(solution);
    } else {
        fallback_paths(known_disrupted);
    }
}

void Simulation::plan_affected(const std::vector<int>& affected,
                               const std::vector<Vertex>& disrupted) {
    if (affected.empty()) return;
    std::vector<char> is_affected(agents_.size(), 0);
    for (int a : affected) is_affected[static_cast<size_t>(a)] = 1;

    const OccupancyView view = make_view(disrupted);
    std::vector<PlanEntity> entities;
    entities.reserve(agents_.size());
    for (const AgentState& a : agents_) {
        PlanEntity e = entity_for(a.id);
        if (!is_affected[static_cast<size_t>(a.id)]) {
            e.fixed = true;
            e.fixed_path = a.committed;
        }
        entities.push_back(std::move(e));
    }
    PrioritySet seed;
    for (auto [hi, lo] : priorities_.pairs())
        if (is_affected[static_cast<size_t>(hi)] && is_affected[static_cast<size_t>(lo)])
            seed.add(hi, lo);

    PbsOptions options{config_.window, config_.pbs_max_nodes};
    const auto start = std::chrono::steady_clock::now();
    PbsSolution solution = solve_wpbs(map_, view, entities, seed, options);
    const double ms = ms_since(start);
    tick_plan_ms_ += ms;
    if (log_)
        log_->emit(t_, "plan-timing",
                   {{"phase", "replan-affected"},
                    {"ms", ms},
                    {"entities", static_cast<int>(affected.size())},
                    {"nodes", solution.stats.nodes_expanded}});
    if (!solution.solved) {
        fallback_paths(disrupted);
        return;
    }
    for (int a : affected) {
        agents_[static_cast<size_t>(a)].committed = solution.paths[static_cast<size_t>(a)];
        agents_[static_cast<size_t>(a)].committed_at = t_;
    }
    // Keep pairs among unaffected agents, replace the rest with the new
    // solve's relation.
    PrioritySet merged;
    for (auto [hi, lo] : priorities_.pairs())
        if (!is_affected[static_cast<size_t>(hi)] && !is_affected[static_cast<size_t>(lo)])
            merged.add(hi, lo);
    for (auto [hi, lo] : solution.priorities.pairs())
        if (!merged.contains(hi, lo) && !merged.would_cycle(hi, lo)) merged.add(hi, lo);
    priorities_ = merged;
}

std::vector<Task> Simulation::make_terraforming_drafts(const std::vector<int>& affected,
                                                       const std::vector<int>& candidates,
                                                       const std::vector<Vertex>& disrupted) {
    if (affected.empty() || candidates.empty()) return {};

    // TW-PBS hint: affected agents plus candidate pods as self-propelled
    // demi-agents. The demi paths are only a hint on which pods pay to move.
    const OccupancyView view = make_view_without(candidates, disrupted);
    std::vector<PlanEntity> entities;
    entities.reserve(affected.size() + candidates.size());
    for (int agent : affected) {
        PlanEntity e = entity_for(agent);
        e.id = static_cast<int>(entities.size());
        entities.push_back(std::move(e));
    }
    const size_t demi_base = entities.size();
    for (int pod : candidates) {
        PlanEntity e;
        e.id = static_cast<int>(entities.size());
        e.start = pods_[static_cast<size_t>(pod)].location;
        e.goals = {e.start};
        e.demi = true;
        entities.push_back(std::move(e));
    }

    PbsOptions options{config_.window, config_.pbs_max_nodes};
    const auto start = std::chrono::steady_clock::now();
    PbsSolution solution = solve_wpbs(map_, view, entities, PrioritySet{}, options);
    const double ms = ms_since(start);
    tick_plan_ms_ += ms;
    if (log_)
        log_->emit(t_, "plan-timing",
                   {{"phase", "terra-hint"},
                    {"ms", ms},
                    {"entities", static_cast<int>(entities.size())},
                    {"nodes", solution.stats.nodes_expanded}});
    if (!solution.solved) return {};  // terraforming simply not proposed this round

    std::vector<Task> drafts;
    std::vector<char> excluded = reserved_excluded();
    int free_spots = 0;
    for (Vertex r : map_.reserved())
        if (!excluded[static_cast<size_t>(r)]) ++free_spots;
    for (size_t j = 0; j < candidates.size(); ++j) {
        const Path& demi_path = solution.paths[demi_base + j];
        if (demi_path.move_count() == 0) continue;
        if (free_spots == 0) {
            // Parking capacity exhausted; further relocations wait for a
            // later disruption round.
            if (log_)
                log_->emit(t_, "warning",
                           {{"message", "reserved parking exhausted; dropping extra "
                                        "terraforming candidates"}});
            break;
        }
        const PodState& pod = pods_[static_cast<size_t>(candidates[j])];
        bool fallback = false;
        const Vertex parking = nearest_reserved(map_, pod.location, excluded, &fallback);
        if (fallback && log_)
            log_->emit(t_, "warning",
                       {{"message", "all reserved vertices occupied; parking on floor"},
                        {"vertex", parking}});
        excluded[static_cast<size_t>(parking)] = 1;
        --free_spots;
        Task draft;
        draft.kind = TaskKind::Terraforming;
        draft.pod = pod.id;
        draft.pickup = pod.location;
        draft.delivery = parking;
        draft.restore_to = pod.location;
        draft.create_time = t_;
        drafts.push_back(draft);
    }
    return drafts;
}

void Simulation::normalize_committed() {
    for (AgentState& a : agents_) {
        if (a.committed_at == t_ && !a.committed.vertices.empty()) continue;
        Path p;
        p.owner = a.id;
        const int off = a.committed_at >= 0 ? t_ - a.committed_at : 0;
        if (!a.committed.vertices.empty()) {
            for (int k = off; k < a.committed.length(); ++k)
                p.vertices.push_back(a.committed.vertices[static_cast<size_t>(k)]);
        }
        if (p.vertices.empty()) p.vertices.push_back(a.position);
        while (p.length() <= config_.window) p.vertices.push_back(p.vertices.back());
        p.cost = std::max<long long>(0, a.committed.cost - off);
        p.goal_reached = a.committed.goal_reached;
        p.stuck = a.committed.stuck;
        a.committed = std::move(p);
        a.committed_at = t_;
    }
}

void Simulation::fallback_paths(const std::vector<Vertex>& disrupted) {
    (void)disrupted;
    if (log_) log_->emit(t_, "pbs-failure", {});
    normalize_committed();
    // Truncate conflicting agents to waits until the joint plan is clean
    // within the window.
    for (int round = 0; round < static_cast<int>(agents_.size()) + 1; ++round) {
        std::vector<Path> paths;
        paths.reserve(agents_.size());
        for (const AgentState& a : agents_) paths.push_back(a.committed);
        const std::vector<Conflict> conflicts = detect_collisions(paths, config_.window);
        if (conflicts.empty()) break;
        std::unordered_set<int> bad;
        for (const Conflict& c : conflicts) {
            bad.insert(c.first);
            bad.insert(c.second);
        }
        for (int id : bad) {
            AgentState& a = agents_[static_cast<size_t>(id)];
            a.committed.vertices.assign(static_cast<size_t>(config_.window) + 1, a.position);
            a.committed.cost = a.task >= 0 ? kStuckCost : 0;
            a.committed.goal_reached = false;
            a.committed.stuck = true;
        }
    }
}

std::vector<int> Simulation::trapped_agents_now() const {
    const OccupancyView view = make_view(book_.known_active(t_));
    DistanceField dist;
    dist.bind(map_, view);
    std::vector<int> trapped;
    for (const AgentState& a : agents_) {
        const std::vector<Vertex> chain = goal_chain(a.id);
        if (chain.empty()) continue;
        if (dist.distance(a.position, chain.front()) == kUnreachable)
            trapped.push_back(a.id);
    }
    return trapped;
}

AssignmentPlan Simulation::plan_assignment(const std::vector<Task>& drafts) const {
    AssignmentPlan plan;
    // Free agents take any task; enroute agents whose standard task has not
    // been picked up yet may be diverted to a terraforming task (postponing
    // the standard one). Carrying agents are never reassigned.
    std::vector<int> free_pool, enroute_pool;
    for (const AgentState& a : agents_) {
        if (a.task < 0) {
            free_pool.push_back(a.id);
        } else {
            const Task& task = tasks_[static_cast<size_t>(a.task)];
            if (task.state == TaskState::Enroute && task.kind == TaskKind::Standard)
                enroute_pool.push_back(a.id);
        }
    }

    struct Entry {
        int vid;  // draft ids follow the registered tasks
        TaskKind kind;
        Vertex pickup;
        int pos;
    };
    std::vector<Entry> entries;
    int pos = 0;
    const int window = static_cast<int>(free_pool.size() + enroute_pool.size());
    for (size_t k = 0; k < drafts.size() && pos < window; ++k, ++pos)
        entries.push_back(Entry{static_cast<int>(tasks_.size() + k), TaskKind::Terraforming,
                                drafts[k].pickup, pos});
    for (size_t q = 0; q < queue_.size() && pos < window; ++q, ++pos) {
        const Task& task = tasks_[static_cast<size_t>(queue_[q])];
        if (!task_startable(task)) continue;
        entries.push_back(Entry{task.id, task.kind, task.pickup, pos});
    }

    std::vector<int> assigned_agents;
    auto in_pool = [](const std::vector<int>& pool, int id) {
        return std::find(pool.begin(), pool.end(), id) != pool.end();
    };
    while (!entries.empty() && (!free_pool.empty() || !enroute_pool.empty())) {
        int best_agent = -1, best_idx = -1;
        int best_dist = std::numeric_limits<int>::max();
        for (size_t e = 0; e < entries.size(); ++e) {
            std::vector<int> cands = free_pool;
            if (entries[e].kind == TaskKind::Terraforming)
                cands.insert(cands.end(), enroute_pool.begin(), enroute_pool.end());
            for (int a : cands) {
                const int d =
                    map_.graph_distance(agents_[static_cast<size_t>(a)].position,
                                        entries[e].pickup);
                if (d < best_dist ||
                    (d == best_dist &&
                     (a < best_agent ||
                      (a == best_agent && entries[e].pos < entries[static_cast<size_t>(
                                                               best_idx)].pos)))) {
                    best_dist = d;
                    best_agent = a;
                    best_idx = static_cast<int>(e);
                }
            }
        }
        if (best_agent < 0) break;
        plan.pairs.emplace_back(best_agent, entries[static_cast<size_t>(best_idx)].vid);
        if (in_pool(enroute_pool, best_agent)) {
            plan.postponed.push_back(agents_[static_cast<size_t>(best_agent)].task);
            enroute_pool.erase(std::find(enroute_pool.begin(), enroute_pool.end(), best_agent));
        } else {
            free_pool.erase(std::find(free_pool.begin(), free_pool.end(), best_agent));
        }
        entries.erase(entries.begin() + best_idx);
    }
    return plan;
}

void Simulation::apply_assignment(const AssignmentPlan& plan, const std::vector<Task>& drafts) {
    // Register drafts so their virtual ids become real.
    const int base = static_cast<int>(tasks_.size());
    for (size_t k = 0; k < drafts.size(); ++k) {
        Task task = drafts[k];
        task.id = base + static_cast<int>(k);
        tasks_.push_back(task);
        if (log_)
            log_->emit(t_, "task-created",
                       {{"task", task.id},
                        {"task_kind", to_string(task.kind)},
                        {"pickup", task.pickup},
                        {"delivery", task.delivery},
                        {"ideal", task.ideal}});
    }

    std::vector<char> draft_assigned(drafts.size(), 0);
    for (auto [agent_id, vid] : plan.pairs) {
        AgentState& agent = agents_[static_cast<size_t>(agent_id)];
        if (agent.task >= 0) {
            Task& old_task = tasks_[static_cast<size_t>(agent.task)];
            old_task.state = TaskState::Queued;
            old_task.agent = -1;
            if (log_)
                log_->emit(t_, "postpone", {{"task", old_task.id}, {"agent", agent_id}});
        }
        Task& task = tasks_[static_cast<size_t>(vid)];
        task.state = TaskState::Enroute;
        task.agent = agent_id;
        agent.task = vid;
        agent.wipe_priority = true;
        if (vid >= base) draft_assigned[static_cast<size_t>(vid - base)] = 1;
        auto qit = std::find(queue_.begin(), queue_.end(), vid);
        if (qit != queue_.end()) queue_.erase(qit);
        if (log_)
            log_->emit(t_, "assign",
                       {{"task", vid},
                        {"agent", agent_id},
                        {"task_kind", to_string(task.kind)}});
    }

    // Queue front: postponed standard tasks, preceded by unassigned
    // terraforming tasks.
    for (auto it = plan.postponed.rbegin(); it != plan.postponed.rend(); ++it)
        queue_.push_front(*it);
    for (int k = static_cast<int>(drafts.size()) - 1; k >= 0; --k)
        if (!draft_assigned[static_cast<size_t>(k)]) queue_.push_front(base + k);
}

void Simulation::step() {
    if (t_ >= config_.max_timesteps) return;
    tick_plan_ms_ = 0.0;

    bool task_events = false;
    for (const AgentState& a : agents_)
        if (a.wipe_priority || a.committed_at < 0) task_events = true;

    assign_tasks();
    for (const AgentState& a : agents_)
        if (a.wipe_priority) task_events = true;
    const bool plan_tick = (t_ % config_.replan_period == 0) || task_events;

    const std::vector<Vertex> known = book_.known_active(t_);
    if (plan_tick) plan_all(known);
    normalize_committed();

    const ObserveResult obs = book_.observe(t_);
    if (log_)
        for (Vertex v : obs.newly) log_->emit(t_, "disruption-start", {{"vertex", v}});

    if (!obs.newly.empty()) {
        std::vector<Path> current;
        current.reserve(agents_.size());
        for (const AgentState& a : agents_) current.push_back(a.committed);
        const std::vector<int> affected =
            affected_agents(current, obs.newly, priorities_, config_.window);
        if (log_)
            log_->emit(t_, "disruption-response",
                       {{"n_new", static_cast<int>(obs.newly.size())},
                        {"n_affected", static_cast<int>(affected.size())}});
        plan_affected(affected, obs.active);

        if (config_.terraforming) {
            run_terraforming(affected, obs);
        }
    }

    advance();
}

void Simulation::run_terraforming(const std::vector<int>& affected, const ObserveResult& obs) {
    const long long cost_plain = committed_cost();
    const std::vector<int> trapped = trapped_agents_now();
    if (log_ && !trapped.empty()) {
        nlohmann::json ids = nlohmann::json::array();
        for (int a : trapped) ids.push_back(a);
        log_->emit(t_, "trapped", {{"agents", ids}});
    }

    const std::vector<char> claimed = claimed_pods();
    const std::vector<int> candidates =
        candidate_obstacles(map_, pods_, claimed, obs.newly, config_.radius);
    const std::vector<Task> drafts = make_terraforming_drafts(affected, candidates, obs.active);

    long long cost_terra = cost_plain;
    bool terra_failed = false;
    bool have_solution = false;
    PbsSolution terra_solution;
    AssignmentPlan plan;
    if (!drafts.empty()) {
        plan = plan_assignment(drafts);

        // Full plan under the hypothetical assignment.
        std::vector<std::vector<Vertex>> overlay(agents_.size());
        std::vector<char> overlaid(agents_.size(), 0);
        std::vector<int> own(agents_.size());
        for (const AgentState& a : agents_) own[static_cast<size_t>(a.id)] = own_pod(a.id);
        for (auto [agent_id, vid] : plan.pairs) {
            const Task& task = vid < static_cast<int>(tasks_.size())
                                   ? tasks_[static_cast<size_t>(vid)]
                                   : drafts[static_cast<size_t>(vid - tasks_.size())];
            overlay[static_cast<size_t>(agent_id)] = {task.pickup, task.delivery,
                                                      task.restore_to};
            overlaid[static_cast<size_t>(agent_id)] = 1;
            own[static_cast<size_t>(agent_id)] = task.pod;
        }

        const OccupancyView view = make_view(obs.active);
        std::vector<PlanEntity> entities;
        entities.reserve(agents_.size());
        for (const AgentState& a : agents_) {
            PlanEntity e = entity_for(
                a.id, overlaid[static_cast<size_t>(a.id)] ? &overlay[static_cast<size_t>(a.id)]
                                                          : nullptr);
            e.own_pod = own[static_cast<size_t>(a.id)];
            entities.push_back(std::move(e));
        }
        PrioritySet seed = priorities_;
        for (auto [agent_id, vid] : plan.pairs) seed.erase_involving(agent_id);

        PbsOptions options{config_.window, config_.pbs_max_nodes};
        const auto start = std::chrono::steady_clock::now();
        terra_solution = solve_wpbs(map_, view, entities, seed, options);
        const double ms = ms_since(start);
        tick_plan_ms_ += ms;
        if (log_)
            log_->emit(t_, "plan-timing",
                       {{"phase", "terra-plan"},
                        {"ms", ms},
                        {"entities", static_cast<int>(entities.size())},
                        {"nodes", terra_solution.stats.nodes_expanded}});
        if (terra_solution.solved) {
            cost_terra = terra_solution.cost;
            have_solution = true;
        } else {
            terra_failed = true;
        }
    }

    // Lowest-cost plan wins; a trapped agent forces the terraforming plan.
    bool adopt = !terra_failed && (cost_terra < cost_plain || !trapped.empty());
    if (log_)
        log_->emit(t_, adopt ? "terraform-adopted" : "terraform-rejected",
                   {{"cost_plain", cost_plain},
                    {"cost_terra", terra_failed ? nlohmann::json() : nlohmann::json(cost_terra)},
                    {"n_affected", static_cast<int>(affected.size())},
                    {"n_candidates", static_cast<int>(candidates.size())},
                    {"n_tasks", static_cast<int>(drafts.size())},
                    {"n_trapped", static_cast<int>(trapped.size())},
                    {"terra_failed", terra_failed}});
    if (adopt && have_solution) {
        apply_assignment(plan, drafts);
        adopt_solution(terra_solution);
    }
}

bool Simulation::run() {
    while (!finished() && t_ < config_.max_timesteps) step();
    const bool done = finished();
    if (log_) log_->emit(t_, "run-end", {{"completed", done}});
    return done;
}

void Simulation::advance() {
    const int t_next = t_ + 1;
    const std::vector<Vertex> physical = book_.physically_active(t_next);
    std::unordered_set<Vertex> blocked(physical.begin(), physical.end());

    std::vector<Vertex> desired(agents_.size());
    for (const AgentState& a : agents_) {
        const int off = a.committed_at >= 0 ? t_ - a.committed_at : 0;
        desired[static_cast<size_t>(a.id)] =
            a.committed.vertices.empty() ? a.position : a.committed.at(off + 1);
    }

    // Disruptions preempt motion; holds cascade to followers.
    std::vector<char> preempted(agents_.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (const AgentState& a : agents_) {
            const size_t i = static_cast<size_t>(a.id);
            if (preempted[i] || desired[i] == a.position) continue;
            bool blocked_now = blocked.count(desired[i]) > 0;
            if (!blocked_now) {
                for (const AgentState& b : agents_) {
                    if (preempted[static_cast<size_t>(b.id)] && b.position == desired[i]) {
                        blocked_now = true;
                        break;
                    }
                }
            }
            if (blocked_now) {
                preempted[i] = 1;
                changed = true;
                if (log_)
                    log_->emit(t_next, "hold",
                               {{"agent", a.id}, {"blocked_target", desired[i]}});
            }
        }
    }

    std::vector<ExecutedMove> moves;
    for (AgentState& a : agents_) {
        const size_t i = static_cast<size_t>(a.id);
        const Vertex target = preempted[i] ? a.position : desired[i];
        const Vertex old_pos = a.position;
        a.position = target;
        trajectories_[i].push_back(target);
        if (target != old_pos) moves.push_back(ExecutedMove{a.id, old_pos, target});
    }

    // Task lifecycle events.
    for (AgentState& a : agents_) {
        if (a.task < 0) continue;
        Task& task = tasks_[static_cast<size_t>(a.task)];
        PodState& pod = pods_[static_cast<size_t>(task.pod)];
        const Vertex old_pos = trajectories_[static_cast<size_t>(a.id)][static_cast<size_t>(t_)];

        // A parked pod re-attaches when its restorer moves off the parking cell.
        if (task.state == TaskState::Restoring && a.carrying < 0 &&
            pod.status == PodStatus::ParkedAtReserved && old_pos == pod.location &&
            a.position != old_pos) {
            pod.status = PodStatus::Carried;
            pod.carried_by = a.id;
            pod.location = -1;
            a.carrying = task.pod;
        }

        if (task.state == TaskState::Enroute && a.position == task.pickup) {
            assert(pod.resting() && pod.location == task.pickup);
            pod.status = PodStatus::Carried;
            pod.carried_by = a.id;
            pod.location = -1;
            a.carrying = task.pod;
            task.state = TaskState::Delivering;
            task.pickup_time = t_next;
            a.wipe_priority = true;
            if (log_)
                log_->emit(t_next, "pickup",
                           {{"task", task.id}, {"agent", a.id}, {"vertex", task.pickup}});
        } else if (task.state == TaskState::Delivering && a.position == task.delivery) {
            task.state = TaskState::Restoring;
            task.delivery_time = t_next;
            a.wipe_priority = true;
            if (task.kind == TaskKind::Terraforming) {
                pod.status = PodStatus::ParkedAtReserved;
                pod.carried_by = -1;
                pod.location = task.delivery;
                a.carrying = -1;
            }
            if (log_)
                log_->emit(t_next, "deliver",
                           {{"task", task.id},
                            {"agent", a.id},
                            {"vertex", task.delivery},
                            {"parked", task.kind == TaskKind::Terraforming}});
        } else if (task.state == TaskState::Restoring && a.position == task.restore_to &&
                   a.carrying == task.pod) {
            pod.status = PodStatus::AtHome;
            pod.carried_by = -1;
            pod.location = task.restore_to;
            a.carrying = -1;
            task.state = TaskState::Done;
            task.dropoff_time = t_next;
            a.task = -1;
            a.wipe_priority = true;
            if (log_)
                log_->emit(t_next, "restore",
                           {{"task", task.id}, {"agent", a.id}, {"vertex", task.restore_to}});
        }
    }

    // Log executed moves with the pod in transit, after re-attachment.
    if (log_) {
        for (const ExecutedMove& m : moves) {
            nlohmann::json payload = {{"agent", m.agent}, {"from", m.from}, {"to", m.to}};
            const int pod = agents_[static_cast<size_t>(m.agent)].carrying;
            if (pod >= 0) payload["pod"] = pod;
            log_->emit(t_next, "move", payload);
        }
    }

    // Live disruption sampling from the executed moves.
    std::unordered_set<Vertex> occupied_now;
    for (const AgentState& a : agents_) occupied_now.insert(a.position);
    for (const PodState& pod : pods_)
        if (pod.resting()) occupied_now.insert(pod.location);
    book_.on_moves_executed(moves, t_next,
                            [&](Vertex v) { return occupied_now.count(v) > 0; });

    if (log_) {
        for (const Disruption& d : book_.collect_ended(t_next))
            log_->emit(t_next, "disruption-end",
                       {{"vertex", d.vertex}, {"since", d.t_start}, {"until", d.t_end}});
    }

    t_ = t_next;
}

}  // namespace tmapd
