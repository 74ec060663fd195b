#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "tmapd/planner.hpp"

namespace tmapd {

// Partial priority order over entity ids, kept acyclic. add(hi, lo) records
// that `hi` has precedence over `lo`.
class PrioritySet {
public:
    bool contains(int hi, int lo) const;
    // True if adding (hi, lo) would close a cycle, i.e. lo already has
    // (transitive) precedence over hi.
    bool would_cycle(int hi, int lo) const;
    void add(int hi, int lo);
    void erase_involving(int id);

    bool empty() const { return succ_.empty(); }
    size_t pair_count() const;
    std::vector<std::pair<int, int>> pairs() const;

    // Ids appearing in the relation, ascending.
    std::vector<int> ids() const;

    // Topological order of ids() (highest priority first), smallest id first
    // among ties.
    std::vector<int> topological_order() const;

    // Strictly-higher-priority entities of id (transitive), ascending.
    std::vector<int> ancestors(int id) const;

    // seeds plus every entity some seed has precedence over (transitive).
    std::vector<int> descendants_closure(const std::vector<int>& seeds) const;

private:
    std::map<int, std::set<int>> succ_;
    std::map<int, std::set<int>> pred_;
};

struct PlanEntity {
    int id = -1;  // index into the solver's path array
    Vertex start = -1;
    std::vector<Vertex> goals;
    bool demi = false;
    int own_pod = -1;
    bool fixed = false;  // path is immutable (kept from a previous solve)
    Path fixed_path;
};

struct PbsOptions {
    int window = 20;
    int max_nodes = 2000;
};

struct PbsStats {
    int nodes_expanded = 0;
    int low_level_calls = 0;
    std::vector<int> root_replan_order;
};

struct PbsSolution {
    bool solved = false;
    std::vector<Path> paths;
    PrioritySet priorities;
    long long cost = 0;
    PbsStats stats;
};

// Sum of agent path costs.
long long flowtime(std::span<const Path> paths);

// Agent paths contribute timestep costs; demi-agent paths contribute move
// counts only (recomputed from the vertices).
long long terra_flowtime(std::span<const Path> paths);

// Windowed PBS over the given entities. Demi-agent entities make this the
// terraforming variant; with none, node costs degenerate to plain flowtime.
// Fixed entities are avoided by everyone and never replanned. The search is
// depth-first over the priority tree seeded with `seed_priorities`.
PbsSolution solve_wpbs(const GridMap& map, const OccupancyView& view,
                       const std::vector<PlanEntity>& entities, const PrioritySet& seed,
                       const PbsOptions& options);

}  // namespace tmapd
