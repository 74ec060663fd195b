#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tmapd/grid_map.hpp"

namespace tmapd {

// Cost charged to an agent whose goal chain could not be completed (enclosed
// or goal unreachable). Large enough to dominate any real path, finite so
// that plan costs stay comparable.
inline constexpr long long kStuckCost = 1'000'000;

// Time-indexed vertex sequence for one agent or demi-agent. vertices[k] is
// the position at timestep start_time + k. Paths are padded with waits so
// they always cover the full planning window.
struct Path {
    int owner = -1;
    bool demi = false;
    int start_time = 0;
    std::vector<Vertex> vertices;
    long long cost = 0;       // agent: timesteps to final goal; demi: move count
    bool goal_reached = true;
    bool stuck = false;

    int length() const { return static_cast<int>(vertices.size()); }

    // Position at relative time t; paths implicitly hold their last vertex.
    Vertex at(int t) const {
        if (vertices.empty()) return -1;
        if (t >= length()) return vertices.back();
        return vertices[static_cast<size_t>(t)];
    }

    int move_count() const {
        int moves = 0;
        for (size_t k = 1; k < vertices.size(); ++k)
            if (vertices[k] != vertices[k - 1]) ++moves;
        return moves;
    }

    // Timesteps until the path last leaves its final vertex (trailing waits
    // trimmed); 0 for a path that never moves.
    int trimmed_length() const {
        if (vertices.size() <= 1) return 0;
        int t = static_cast<int>(vertices.size()) - 1;
        while (t > 0 && vertices[static_cast<size_t>(t - 1)] == vertices.back()) --t;
        return t;
    }
};

enum class ConflictKind { Vertex, Edge };

struct Conflict {
    int first = -1;   // lower entity id
    int second = -1;  // higher entity id
    ConflictKind kind = ConflictKind::Vertex;
    Vertex u = -1;    // vertex conflict: the shared vertex; edge: first's from-vertex
    Vertex v = -1;    // edge conflict: first's to-vertex
    int timestep = 0;

    friend bool operator==(const Conflict&, const Conflict&) = default;
};

// Every vertex and edge conflict with timestep < window, sorted by timestep
// then (first, second). An edge conflict at t is a swap between t and t+1.
std::vector<Conflict> detect_collisions(std::span<const Path> paths, int window);

// Space-time reservations imposed by higher-priority paths, truncated to the
// window. A path's final vertex stays reserved through the window.
class ReservationTable {
public:
    explicit ReservationTable(int window) : window_(window) {}

    int window() const { return window_; }
    bool empty() const { return vertex_res_.empty(); }

    void add_path(const Path& path);

    bool vertex_reserved(Vertex v, int t) const;
    bool edge_reserved(Vertex from, Vertex to, int t) const;  // move entering `to` at t+1

    // Earliest time h such that v is free of vertex reservations for all
    // t in [h, window). Returns window if v is reserved at window-1.
    int hold_available_from(Vertex v) const;

    // Latest reserved timestep + 1 (0 when empty): beyond this everything is static.
    int horizon() const { return horizon_; }

private:
    static uint64_t vkey(Vertex v, int t) {
        return (static_cast<uint64_t>(v) << 20) | static_cast<uint64_t>(t);
    }
    static uint64_t ekey(Vertex from, Vertex to, int t) {
        return (((static_cast<uint64_t>(from) << 22) | static_cast<uint64_t>(to)) << 20) |
               static_cast<uint64_t>(t);
    }

    int window_;
    int horizon_ = 0;
    std::unordered_set<uint64_t> vertex_res_;
    std::unordered_set<uint64_t> edge_res_;
};

}  // namespace tmapd
