#include "tmapd/occupancy.hpp"

namespace tmapd {
namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

OccupancyView::OccupancyView(const GridMap& map, const std::vector<PodState>& pods,
                             const std::vector<Vertex>& disrupted, int timestep)
    : timestep_(timestep),
      pod_at_(static_cast<size_t>(map.size()), -1),
      disrupted_(static_cast<size_t>(map.size()), 0) {
    // Order-independent so that identical blocked sets share a revision.
    uint64_t h = 0x2545f4914f6cdd1dULL;
    for (const PodState& pod : pods) {
        if (pod.resting()) {
            pod_at_[static_cast<size_t>(pod.location)] = pod.id;
            h += splitmix64(static_cast<uint64_t>(pod.location) * 2 + 1);
        }
    }
    for (Vertex v : disrupted) {
        if (!disrupted_[static_cast<size_t>(v)]) {
            disrupted_[static_cast<size_t>(v)] = 1;
            h += splitmix64(static_cast<uint64_t>(v) * 2);
        }
    }
    revision_ = h;
}

}  // namespace tmapd
