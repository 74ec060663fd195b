#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tmapd/grid_map.hpp"
#include "tmapd/occupancy.hpp"
#include "tmapd/path.hpp"

namespace tmapd {

// BFS distance-to-goal fields over an occupancy view, cached per goal vertex.
// The goal cell itself is treated as enterable so that an agent assigned to a
// pod can reach its pickup cell. Rebinding to a view with a different
// revision clears the cache.
class DistanceField {
public:
    void bind(const GridMap& map, const OccupancyView& view);

    // dist[v] = shortest open-path edge count from v to goal, kUnreachable if
    // separated. Entries for blocked vertices other than the goal are
    // kUnreachable.
    const std::vector<int>& to_goal(Vertex goal);

    int distance(Vertex from, Vertex goal) {
        return to_goal(goal)[static_cast<size_t>(from)];
    }

private:
    const GridMap* map_ = nullptr;
    const OccupancyView* view_ = nullptr;
    uint64_t revision_ = 0;
    std::unordered_map<Vertex, std::vector<int>> fields_;
};

struct PlanRequest {
    int owner = -1;
    Vertex start = -1;
    std::vector<Vertex> goals;  // remaining goal chain; empty means hold position
    int window = 20;
    bool demi = false;
    int own_pod = -1;           // pod this entity is assigned to carry
};

// Minimum-cost space-time path through the goal chain, planned segment by
// segment. Reservations bind within the window; blocked vertices bind at all
// times. Paths always cover [0, window]; agents that cannot complete their
// chain fall back to a minimum-movement survival path flagged `stuck` with
// cost kStuckCost. Demi-agents always plan the survival objective: fewest
// moves over the window, ties preferring to end near their home vertex.
Path plan_agent_path(const GridMap& map, const OccupancyView& view, const PlanRequest& req,
                     const ReservationTable& reservations, DistanceField& dist);

}  // namespace tmapd
