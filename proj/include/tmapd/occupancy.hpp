#pragma once

#include <cstdint>
#include <vector>

#include "tmapd/grid_map.hpp"

namespace tmapd {

enum class PodStatus {
    AtHome,
    Carried,
    ParkedAtReserved,
    ParkedAwaitingRestore,  // parked with an orphaned restore leg (re-queued)
};

struct PodState {
    int id = -1;
    Vertex home = -1;
    Vertex location = -1;        // meaningful unless carried
    int carried_by = -1;         // agent id when status == Carried
    PodStatus status = PodStatus::AtHome;

    bool resting() const { return status != PodStatus::Carried; }
};

// Per-timestep passability snapshot: resting pods plus currently known
// disruption vertices. A resting pod blocks its cell for everyone except the
// agent assigned to carry that exact pod; disruptions block everyone.
class OccupancyView {
public:
    OccupancyView() = default;
    OccupancyView(const GridMap& map, const std::vector<PodState>& pods,
                  const std::vector<Vertex>& disrupted, int timestep);

    int timestep() const { return timestep_; }

    // Pod id resting at v, or -1.
    int pod_at(Vertex v) const { return pod_at_[static_cast<size_t>(v)]; }
    bool disrupted(Vertex v) const { return disrupted_[static_cast<size_t>(v)] != 0; }

    // True iff v hosts an active disruption or a resting pod other than
    // `exempt_pod` (the pod the querying agent is assigned to carry).
    bool blocked(Vertex v, int exempt_pod = -1) const {
        if (disrupted_[static_cast<size_t>(v)]) return true;
        const int p = pod_at_[static_cast<size_t>(v)];
        return p >= 0 && p != exempt_pod;
    }

    // Changes whenever the blocked set could differ; used as a cache key by
    // distance fields.
    uint64_t revision() const { return revision_; }

    int size() const { return static_cast<int>(pod_at_.size()); }

private:
    int timestep_ = 0;
    std::vector<int> pod_at_;
    std::vector<char> disrupted_;
    uint64_t revision_ = 0;
};

}  // namespace tmapd
