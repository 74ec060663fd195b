#include "tmapd/path.hpp"

#include <algorithm>
#include <unordered_map>

namespace tmapd {
namespace {

using SmallVec = std::vector<int>;

uint64_t cell_key(Vertex v, int t) {
    return (static_cast<uint64_t>(v) << 20) | static_cast<uint64_t>(t);
}

uint64_t edge_key(Vertex from, Vertex to, int t) {
    return (((static_cast<uint64_t>(from) << 22) | static_cast<uint64_t>(to)) << 20) |
           static_cast<uint64_t>(t);
}

}  // namespace

std::vector<Conflict> detect_collisions(std::span<const Path> paths, int window) {
    std::vector<Conflict> out;
    const int n = static_cast<int>(paths.size());
    std::unordered_map<uint64_t, SmallVec> cells;
    std::unordered_map<uint64_t, SmallVec> edges;
    cells.reserve(static_cast<size_t>(n) * (window + 1));
    for (int i = 0; i < n; ++i) {
        const Path& p = paths[static_cast<size_t>(i)];
        if (p.vertices.empty()) continue;
        for (int t = 0; t < window; ++t) {
            const Vertex v = p.at(t);
            SmallVec& occ = cells[cell_key(v, t)];
            for (int j : occ)
                out.push_back(Conflict{j, i, ConflictKind::Vertex, v, -1, t});
            occ.push_back(i);
            const Vertex w = p.at(t + 1);
            if (w != v) {
                edges[edge_key(v, w, t)].push_back(i);
                auto rev = edges.find(edge_key(w, v, t));
                if (rev != edges.end()) {
                    for (int j : rev->second) {
                        const int lo = std::min(i, j), hi = std::max(i, j);
                        const Path& lp = paths[static_cast<size_t>(lo)];
                        out.push_back(Conflict{lo, hi, ConflictKind::Edge, lp.at(t),
                                               lp.at(t + 1), t});
                    }
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Conflict& a, const Conflict& b) {
        if (a.timestep != b.timestep) return a.timestep < b.timestep;
        if (a.first != b.first) return a.first < b.first;
        if (a.second != b.second) return a.second < b.second;
        return a.kind < b.kind;
    });
    return out;
}

void ReservationTable::add_path(const Path& path) {
    if (path.vertices.empty()) return;
    for (int t = 0; t < window_; ++t) {
        vertex_res_.insert(vkey(path.at(t), t));
        const Vertex from = path.at(t), to = path.at(t + 1);
        if (to != from) edge_res_.insert(ekey(from, to, t));
    }
    horizon_ = window_;
}

bool ReservationTable::vertex_reserved(Vertex v, int t) const {
    if (t >= window_) return false;
    return vertex_res_.count(vkey(v, t)) > 0;
}

bool ReservationTable::edge_reserved(Vertex from, Vertex to, int t) const {
    if (t >= window_) return false;
    return edge_res_.count(ekey(from, to, t)) > 0;
}

int ReservationTable::hold_available_from(Vertex v) const {
    for (int t = window_ - 1; t >= 0; --t)
        if (vertex_res_.count(vkey(v, t))) return t + 1;
    return 0;
}

}  // namespace tmapd
