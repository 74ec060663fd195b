#include "tmapd/pbs.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <stdexcept>

namespace tmapd {

bool PrioritySet::contains(int hi, int lo) const {
    auto it = succ_.find(hi);
    return it != succ_.end() && it->second.count(lo) > 0;
}

bool PrioritySet::would_cycle(int hi, int lo) const {
    if (hi == lo) return true;
    // DFS from lo over succ edges looking for hi.
    std::vector<int> stack{lo};
    std::set<int> seen{lo};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        auto it = succ_.find(v);
        if (it == succ_.end()) continue;
        for (int u : it->second) {
            if (u == hi) return true;
            if (seen.insert(u).second) stack.push_back(u);
        }
    }
    return false;
}

void PrioritySet::add(int hi, int lo) {
    if (would_cycle(hi, lo))
        throw std::logic_error("PrioritySet: adding pair would create a cycle");
    succ_[hi].insert(lo);
    pred_[lo].insert(hi);
}

void PrioritySet::erase_involving(int id) {
    auto drop = [&](std::map<int, std::set<int>>& fwd, std::map<int, std::set<int>>& bwd) {
        auto it = fwd.find(id);
        if (it != fwd.end()) {
            for (int other : it->second) {
                auto jt = bwd.find(other);
                if (jt != bwd.end()) {
                    jt->second.erase(id);
                    if (jt->second.empty()) bwd.erase(jt);
                }
            }
            fwd.erase(it);
        }
    };
    drop(succ_, pred_);
    drop(pred_, succ_);
}

size_t PrioritySet::pair_count() const {
    size_t n = 0;
    for (const auto& [_, lows] : succ_) n += lows.size();
    return n;
}

std::vector<std::pair<int, int>> PrioritySet::pairs() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [hi, lows] : succ_)
        for (int lo : lows) out.emplace_back(hi, lo);
    return out;
}

std::vector<int> PrioritySet::ids() const {
    std::set<int> all;
    for (const auto& [hi, lows] : succ_) {
        all.insert(hi);
        all.insert(lows.begin(), lows.end());
    }
    return {all.begin(), all.end()};
}

std::vector<int> PrioritySet::topological_order() const {
    const std::vector<int> all = ids();
    std::map<int, int> indegree;
    for (int v : all) indegree[v] = 0;
    for (const auto& [hi, lows] : succ_)
        for (int lo : lows) ++indegree[lo];
    std::set<int> ready;
    for (auto& [v, d] : indegree)
        if (d == 0) ready.insert(v);
    std::vector<int> order;
    order.reserve(all.size());
    while (!ready.empty()) {
        int v = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(v);
        auto it = succ_.find(v);
        if (it == succ_.end()) continue;
        for (int u : it->second)
            if (--indegree[u] == 0) ready.insert(u);
    }
    if (order.size() != all.size())
        throw std::logic_error("PrioritySet: cycle detected during topological sort");
    return order;
}

std::vector<int> PrioritySet::ancestors(int id) const {
    std::set<int> seen;
    std::vector<int> stack{id};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        auto it = pred_.find(v);
        if (it == pred_.end()) continue;
        for (int u : it->second)
            if (seen.insert(u).second) stack.push_back(u);
    }
    return {seen.begin(), seen.end()};
}

std::vector<int> PrioritySet::descendants_closure(const std::vector<int>& seeds) const {
    std::set<int> seen(seeds.begin(), seeds.end());
    std::vector<int> stack(seeds.begin(), seeds.end());
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        auto it = succ_.find(v);
        if (it == succ_.end()) continue;
        for (int u : it->second)
            if (seen.insert(u).second) stack.push_back(u);
    }
    return {seen.begin(), seen.end()};
}

long long flowtime(std::span<const Path> paths) {
    long long total = 0;
    for (const Path& p : paths) total += p.cost;
    return total;
}

long long terra_flowtime(std::span<const Path> paths) {
    long long total = 0;
    for (const Path& p : paths) total += p.demi ? p.move_count() : p.cost;
    return total;
}

namespace {

struct PtNode {
    PrioritySet priorities;
    std::vector<Path> paths;
    std::vector<Conflict> collisions;
    long long cost = 0;
};

class PbsSearch {
public:
    PbsSearch(const GridMap& map, const OccupancyView& view,
              const std::vector<PlanEntity>& entities, const PbsOptions& options)
        : map_(map), view_(view), entities_(entities), options_(options) {
        dist_.bind(map, view);
    }

    PbsSolution run(const PrioritySet& seed) {
        PbsSolution out;
        auto root = std::make_unique<PtNode>();
        root->priorities = seed;
        root->paths.resize(entities_.size());
        for (const PlanEntity& e : entities_)
            if (e.fixed) root->paths[static_cast<size_t>(e.id)] = e.fixed_path;
        find_paths(*root, /*root=*/true);
        evaluate(*root);
        out.stats.root_replan_order = last_replan_order_;

        std::vector<std::unique_ptr<PtNode>> stack;
        stack.push_back(std::move(root));
        while (!stack.empty()) {
            if (stats_.nodes_expanded >= options_.max_nodes) break;
            std::unique_ptr<PtNode> node = std::move(stack.back());
            stack.pop_back();
            ++stats_.nodes_expanded;
            if (std::getenv("TMAPD_PBS_DEBUG") && stats_.nodes_expanded < 40) {
                std::fprintf(stderr, "[pbs] node %d: %zu pairs, %zu collisions",
                             stats_.nodes_expanded, node->priorities.pair_count(),
                             node->collisions.size());
                if (!node->collisions.empty()) {
                    const Conflict& c = node->collisions.front();
                    std::fprintf(stderr, " first=(%d,%d,%s,t=%d,u=%d)", c.first, c.second,
                                 c.kind == ConflictKind::Vertex ? "v" : "e", c.timestep, c.u);
                }
                std::fprintf(stderr, "\n");
            }
            if (node->collisions.empty()) {
                out.solved = true;
                out.paths = std::move(node->paths);
                out.priorities = std::move(node->priorities);
                out.cost = node->cost;
                out.stats = stats_;
                out.stats.root_replan_order = std::move(last_root_order_);
                return out;
            }
            const Conflict c = node->collisions.front();
            expand(*node, c, stack);
        }
        out.stats = stats_;
        out.stats.root_replan_order = std::move(last_root_order_);
        return out;
    }

private:
    void evaluate(PtNode& node) {
        node.cost = terra_flowtime(node.paths);
        node.collisions = detect_collisions(node.paths, options_.window);
    }

    void find_paths(PtNode& node, bool root) {
        // Entities in the priority relation are replanned in topological
        // order against reservations of their strictly-higher-priority
        // ancestors; everyone else keeps its current path. At the root every
        // non-fixed entity still needs an initial plan.
        std::vector<int> order = node.priorities.topological_order();
        std::vector<char> in_order(entities_.size(), 0);
        for (int id : order) in_order[static_cast<size_t>(id)] = 1;
        if (root) {
            for (const PlanEntity& e : entities_)
                if (!in_order[static_cast<size_t>(e.id)]) order.push_back(e.id);
        }
        std::vector<int> replanned;
        for (int id : order) {
            const PlanEntity& e = entities_[static_cast<size_t>(id)];
            if (e.fixed) continue;
            ReservationTable res(options_.window);
            for (int hi : node.priorities.ancestors(id))
                res.add_path(node.paths[static_cast<size_t>(hi)]);
            for (const PlanEntity& f : entities_)
                if (f.fixed && f.id != id) res.add_path(node.paths[static_cast<size_t>(f.id)]);
            PlanRequest req;
            req.owner = id;
            req.start = e.start;
            req.goals = e.goals;
            req.window = options_.window;
            req.demi = e.demi;
            req.own_pod = e.own_pod;
            node.paths[static_cast<size_t>(id)] = plan_agent_path(map_, view_, req, res, dist_);
            ++stats_.low_level_calls;
            replanned.push_back(id);
        }
        last_replan_order_ = std::move(replanned);
        if (root) last_root_order_ = last_replan_order_;
    }

    void expand(const PtNode& node, const Conflict& c,
                std::vector<std::unique_ptr<PtNode>>& stack) {
        const bool first_fixed = entities_[static_cast<size_t>(c.first)].fixed;
        const bool second_fixed = entities_[static_cast<size_t>(c.second)].fixed;
        if (first_fixed && second_fixed) return;  // unresolvable, dead end

        // Candidate children: (hi, lo) pairs. A fixed entity can only take
        // the high-priority side.
        std::vector<std::pair<int, int>> options;
        if (!second_fixed) options.emplace_back(c.first, c.second);
        if (!first_fixed) options.emplace_back(c.second, c.first);

        // Expand first the child whose new priority favors the entity with
        // the longer current path; ties favor the smaller id. Stack order is
        // reversed so the preferred child is pushed last.
        if (options.size() == 2) {
            const long long len_first = node.paths[static_cast<size_t>(c.first)].cost;
            const long long len_second = node.paths[static_cast<size_t>(c.second)].cost;
            const int favored = len_first > len_second   ? c.first
                                : len_second > len_first ? c.second
                                                         : std::min(c.first, c.second);
            if (options.front().first != favored) std::swap(options.front(), options.back());
        }
        std::reverse(options.begin(), options.end());

        for (auto [hi, lo] : options) {
            if (node.priorities.contains(hi, lo)) continue;   // no progress
            if (node.priorities.would_cycle(hi, lo)) continue;  // pruned
            auto child = std::make_unique<PtNode>();
            child->priorities = node.priorities;
            child->priorities.add(hi, lo);
            child->paths = node.paths;
            find_paths(*child, /*root=*/false);
            evaluate(*child);
            stack.push_back(std::move(child));
        }
    }

    const GridMap& map_;
    const OccupancyView& view_;
    const std::vector<PlanEntity>& entities_;
    const PbsOptions& options_;
    DistanceField dist_;
    PbsStats stats_;
    std::vector<int> last_replan_order_;
    std::vector<int> last_root_order_;
};

}  // namespace

PbsSolution solve_wpbs(const GridMap& map, const OccupancyView& view,
                       const std::vector<PlanEntity>& entities, const PrioritySet& seed,
                       const PbsOptions& options) {
    for (size_t i = 0; i < entities.size(); ++i)
        if (entities[i].id != static_cast<int>(i))
            throw std::invalid_argument("solve_wpbs: entity ids must be dense indexes");
    PbsSearch search(map, view, entities, options);
    return search.run(seed);
}

}  // namespace tmapd
