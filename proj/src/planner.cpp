#include "tmapd/planner.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <stdexcept>

namespace tmapd {

void DistanceField::bind(const GridMap& map, const OccupancyView& view) {
    if (map_ != &map || revision_ != view.revision()) fields_.clear();
    map_ = &map;
    view_ = &view;
    revision_ = view.revision();
}

const std::vector<int>& DistanceField::to_goal(Vertex goal) {
    auto it = fields_.find(goal);
    if (it != fields_.end()) return it->second;
    std::vector<int> dist(static_cast<size_t>(map_->size()), kUnreachable);
    std::deque<Vertex> queue;
    dist[static_cast<size_t>(goal)] = 0;
    queue.push_back(goal);
    std::array<Vertex, 4> nbr{};
    while (!queue.empty()) {
        const Vertex v = queue.front();
        queue.pop_front();
        const int d = dist[static_cast<size_t>(v)];
        const int n = map_->neighbors(v, nbr);
        for (int i = 0; i < n; ++i) {
            const Vertex u = nbr[i];
            if (dist[static_cast<size_t>(u)] != kUnreachable) continue;
            if (view_->blocked(u)) continue;
            dist[static_cast<size_t>(u)] = d + 1;
            queue.push_back(u);
        }
    }
    return fields_.emplace(goal, std::move(dist)).first->second;
}

namespace {

struct Node {
    Vertex v;
    int t;       // clamped at window during the static phase
    int g;       // arrival timestep (absolute within the path)
    int waits;
    int parent;  // index into pool
};

struct HeapEntry {
    int f;
    int waits;
    Vertex v;
    uint32_t seq;
    int node;
    bool operator>(const HeapEntry& o) const {
        if (f != o.f) return f > o.f;
        if (waits != o.waits) return waits > o.waits;
        if (v != o.v) return v > o.v;
        return seq > o.seq;
    }
};

struct SegmentResult {
    bool found = false;
    std::vector<Vertex> tail;  // positions from t0+1 .. arrival
    int arrival = 0;
};

bool enterable(const OccupancyView& view, Vertex u, Vertex seg_goal, int own_pod) {
    if (view.disrupted(u)) return false;
    const int pod = view.pod_at(u);
    if (pod < 0) return true;
    return pod == own_pod && u == seg_goal;
}

// Space-time A* for one goal segment. Waits are pruned once reservations no
// longer apply; states beyond the window collapse onto t = window.
SegmentResult plan_segment(const GridMap& map, const OccupancyView& view,
                           const ReservationTable& res, DistanceField& dist, Vertex start,
                           int t0, Vertex goal, bool final_segment, int window, int own_pod) {
    SegmentResult result;
    const std::vector<int>& h = dist.to_goal(goal);

    // The start cell may itself be occupied (the agent stands on its own pod
    // cell, or on a freshly disrupted cell); derive its heuristic from the
    // best open neighbor.
    int h_start = h[static_cast<size_t>(start)];
    if (h_start == kUnreachable) {
        std::array<Vertex, 4> snbr{};
        const int n = map.neighbors(start, snbr);
        for (int i = 0; i < n; ++i) {
            const int hn = h[static_cast<size_t>(snbr[i])];
            if (hn != kUnreachable && (h_start == kUnreachable || hn + 1 < h_start))
                h_start = hn + 1;
        }
        if (h_start == kUnreachable) return result;
    }
    auto h_of = [&](Vertex v) { return v == start ? h_start : h[static_cast<size_t>(v)]; };

    const int hold_from = final_segment ? res.hold_available_from(goal) : 0;
    auto clamp_t = [&](int t) { return std::min(t, window); };

    std::vector<Node> pool;
    pool.reserve(1024);
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> open;
    // Closed set per (v, clamped t).
    std::unordered_map<uint64_t, char> closed;
    auto state_key = [&](Vertex v, int t) {
        return (static_cast<uint64_t>(v) << 20) | static_cast<uint64_t>(clamp_t(t));
    };

    uint32_t seq = 0;
    pool.push_back(Node{start, t0, t0, 0, -1});
    open.push(HeapEntry{t0 + h_start, 0, start, seq++, 0});

    std::array<Vertex, 4> nbr{};
    while (!open.empty()) {
        const HeapEntry top = open.top();
        open.pop();
        const Node cur = pool[static_cast<size_t>(top.node)];
        const uint64_t key = state_key(cur.v, cur.t);
        if (closed.count(key)) continue;
        closed[key] = 1;

        if (cur.v == goal && (!final_segment || cur.g >= hold_from)) {
            std::vector<Vertex> rev;
            int idx = top.node;
            while (idx >= 0 && pool[static_cast<size_t>(idx)].parent >= 0) {
                rev.push_back(pool[static_cast<size_t>(idx)].v);
                idx = pool[static_cast<size_t>(idx)].parent;
            }
            std::reverse(rev.begin(), rev.end());
            result.found = true;
            result.tail = std::move(rev);
            result.arrival = cur.g;
            return result;
        }

        const int tn = cur.g + 1;
        // Wait, only while reservations can still force one.
        if (cur.t < window) {
            if (!res.vertex_reserved(cur.v, tn) && !closed.count(state_key(cur.v, tn))) {
                pool.push_back(Node{cur.v, clamp_t(tn), tn, cur.waits + 1, top.node});
                open.push(HeapEntry{tn + h_of(cur.v), cur.waits + 1, cur.v, seq++,
                                    static_cast<int>(pool.size()) - 1});
            }
        }
        const int n = map.neighbors(cur.v, nbr);
        for (int i = 0; i < n; ++i) {
            const Vertex u = nbr[i];
            if (h[static_cast<size_t>(u)] == kUnreachable) continue;
            if (!enterable(view, u, goal, own_pod)) continue;
            if (res.vertex_reserved(u, tn)) continue;
            // A swap happens when a reserved path crosses u -> cur.v here.
            if (res.edge_reserved(u, cur.v, cur.g)) continue;
            if (closed.count(state_key(u, tn))) continue;
            pool.push_back(Node{u, clamp_t(tn), tn, cur.waits, top.node});
            open.push(HeapEntry{tn + h[static_cast<size_t>(u)], cur.waits, u, seq++,
                                static_cast<int>(pool.size()) - 1});
        }
    }
    return result;
}

// Fewest-moves path over exactly the window, any end position; ties prefer
// ending near `home`. Used for demi-agents and as the stuck fallback.
struct SurvivalResult {
    bool found = false;
    std::vector<Vertex> vertices;  // [0 .. window]
    int moves = 0;
};

struct SurvivalEntry {
    int moves;
    int t;
    Vertex v;
    uint32_t seq;
    int node;
    bool operator>(const SurvivalEntry& o) const {
        if (moves != o.moves) return moves > o.moves;
        if (t != o.t) return t > o.t;
        if (v != o.v) return v > o.v;
        return seq > o.seq;
    }
};

SurvivalResult plan_survival(const GridMap& map, const OccupancyView& view,
                             const ReservationTable& res, DistanceField& dist, Vertex start,
                             Vertex home, int window, int own_pod) {
    SurvivalResult out;
    std::vector<Node> pool;
    std::priority_queue<SurvivalEntry, std::vector<SurvivalEntry>, std::greater<SurvivalEntry>>
        open;
    std::unordered_map<uint64_t, char> closed;
    auto state_key = [&](Vertex v, int t) {
        return (static_cast<uint64_t>(v) << 20) | static_cast<uint64_t>(t);
    };
    pool.push_back(Node{start, 0, 0, 0, -1});
    uint32_t seq = 0;
    open.push(SurvivalEntry{0, 0, start, seq++, 0});

    const std::vector<int>& home_dist = dist.to_goal(home);
    int best_node = -1;
    int best_moves = -1;
    int best_home = -1;
    std::array<Vertex, 4> nbr{};
    while (!open.empty()) {
        const SurvivalEntry top = open.top();
        open.pop();
        const Node cur = pool[static_cast<size_t>(top.node)];
        const uint64_t key = state_key(cur.v, cur.t);
        if (closed.count(key)) continue;
        closed[key] = 1;
        if (best_node >= 0 && top.moves > best_moves) break;
        if (cur.t == window) {
            int hd = home_dist[static_cast<size_t>(cur.v)];
            if (hd == kUnreachable) hd = map.size();
            if (best_node < 0 || top.moves < best_moves ||
                (top.moves == best_moves && hd < best_home)) {
                best_node = top.node;
                best_moves = top.moves;
                best_home = hd;
            }
            continue;
        }
        const int tn = cur.t + 1;
        if (!res.vertex_reserved(cur.v, tn) && !closed.count(state_key(cur.v, tn))) {
            pool.push_back(Node{cur.v, tn, top.moves, cur.waits + 1, top.node});
            open.push(SurvivalEntry{top.moves, tn, cur.v, seq++,
                                    static_cast<int>(pool.size()) - 1});
        }
        const int n = map.neighbors(cur.v, nbr);
        for (int i = 0; i < n; ++i) {
            const Vertex u = nbr[i];
            if (!enterable(view, u, home, own_pod)) continue;
            if (res.vertex_reserved(u, tn)) continue;
            if (res.edge_reserved(u, cur.v, cur.t)) continue;
            if (closed.count(state_key(u, tn))) continue;
            pool.push_back(Node{u, tn, top.moves + 1, cur.waits, top.node});
            open.push(SurvivalEntry{top.moves + 1, tn, u, seq++,
                                    static_cast<int>(pool.size()) - 1});
        }
    }
    if (best_node < 0) return out;
    std::vector<Vertex> rev;
    int idx = best_node;
    while (idx >= 0) {
        rev.push_back(pool[static_cast<size_t>(idx)].v);
        idx = pool[static_cast<size_t>(idx)].parent;
    }
    std::reverse(rev.begin(), rev.end());
    out.found = true;
    out.vertices = std::move(rev);
    out.moves = best_moves;
    return out;
}

Path all_wait_path(const PlanRequest& req) {
    Path p;
    p.owner = req.owner;
    p.demi = req.demi;
    p.vertices.assign(static_cast<size_t>(req.window) + 1, req.start);
    p.cost = req.demi ? 0 : kStuckCost;
    p.goal_reached = false;
    p.stuck = true;
    return p;
}

}  // namespace

Path plan_agent_path(const GridMap& map, const OccupancyView& view, const PlanRequest& req,
                     const ReservationTable& reservations, DistanceField& dist) {
    if (!map.contains(req.start)) throw std::invalid_argument("plan: start not on the map");
    for (Vertex g : req.goals)
        if (!map.contains(g)) throw std::invalid_argument("plan: goal not on the map");
    dist.bind(map, view);

    if (req.demi) {
        auto sur = plan_survival(map, view, reservations, dist, req.start, req.start,
                                 req.window, req.own_pod);
        if (!sur.found) return all_wait_path(req);
        Path p;
        p.owner = req.owner;
        p.demi = true;
        p.vertices = std::move(sur.vertices);
        p.cost = sur.moves;
        p.goal_reached = true;
        return p;
    }

    std::vector<Vertex> goals = req.goals;
    if (goals.empty()) goals.push_back(req.start);

    std::vector<Vertex> vertices{req.start};
    int t = 0;
    bool ok = true;
    for (size_t k = 0; k < goals.size(); ++k) {
        const bool final_segment = (k + 1 == goals.size());
        auto seg = plan_segment(map, view, reservations, dist, vertices.back(), t, goals[k],
                                final_segment, req.window, req.own_pod);
        if (!seg.found) {
            ok = false;
            break;
        }
        vertices.insert(vertices.end(), seg.tail.begin(), seg.tail.end());
        t = seg.arrival;
    }

    if (!ok) {
        const Vertex home = goals.empty() ? req.start : req.start;
        auto sur = plan_survival(map, view, reservations, dist, req.start, home, req.window,
                                 req.own_pod);
        Path p = all_wait_path(req);
        if (sur.found) {
            p.vertices = std::move(sur.vertices);
        }
        return p;
    }

    Path p;
    p.owner = req.owner;
    p.cost = t;
    p.goal_reached = true;
    while (static_cast<int>(vertices.size()) <= req.window) vertices.push_back(vertices.back());
    p.vertices = std::move(vertices);
    return p;
}

}  // namespace tmapd
