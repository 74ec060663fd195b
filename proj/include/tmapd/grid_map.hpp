#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tmapd {

using Vertex = int;

// Distinguished return value for unreachable vertex pairs.
inline constexpr int kUnreachable = -1;

enum class Cell : char {
    Floor = '.',
    PodHome = '@',
    Workstation = 'W',
    Reserved = 'R',
};

// Parameters for the parametric warehouse generator. Pod blocks are laid out
// in horizontal rows separated by aisles; workstations sit on the border
// edges not hosting the reserved strip.
struct GeneratorConfig {
    int height = 24;
    int width = 47;
    int pod_rows = 10;
    int pod_blocks = 4;
    int pods_per_block = 10;
    int aisle_width = 1;            // 1 or 2
    int workstation_spacing = 3;
    char reserved_edge = 'T';       // 'T','B','L','R'
};

// Static warehouse grid. Every cell is a vertex of the 4-connected graph;
// cell classes refine the vertex set, they never remove vertices.
class GridMap {
public:
    GridMap() = default;
    GridMap(int height, int width, std::vector<Cell> cells);

    int height() const { return height_; }
    int width() const { return width_; }
    int size() const { return height_ * width_; }

    Vertex vertex(int row, int col) const { return row * width_ + col; }
    int row(Vertex v) const { return v / width_; }
    int col(Vertex v) const { return v % width_; }
    bool contains(Vertex v) const { return v >= 0 && v < size(); }

    Cell cell(Vertex v) const { return cells_[static_cast<size_t>(v)]; }

    // Up to 4 orthogonal neighbors, in fixed (up, left, right, down) order.
    int neighbors(Vertex v, std::array<Vertex, 4>& out) const;

    const std::vector<Vertex>& pod_homes() const { return pod_homes_; }
    const std::vector<Vertex>& workstations() const { return workstations_; }
    const std::vector<Vertex>& reserved() const { return reserved_; }

    // Shortest-path edge count over the full graph, ignoring pods and
    // disruptions. All cells are vertices of the full 4-connected rectangle,
    // so this is the Manhattan distance.
    int graph_distance(Vertex u, Vertex v) const;

    // ASCII serialization: "height N\nwidth M\n" followed by one row per line.
    std::string to_text() const;
    static GridMap from_text(const std::string& text);
    void save(const std::string& path) const;
    static GridMap load(const std::string& path);

    // Checks class disjointness (structural) and that the subgraph of
    // non-pod-home vertices is connected. Throws std::runtime_error.
    void validate() const;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<Cell> cells_;
    std::vector<Vertex> pod_homes_;
    std::vector<Vertex> workstations_;
    std::vector<Vertex> reserved_;
};

// Deterministic for a fixed (config, seed). Throws std::invalid_argument when
// the requested pod layout does not fit the dimensions.
GridMap generate_warehouse(const GeneratorConfig& config, uint64_t seed);

GeneratorConfig medium_preset();
GeneratorConfig large_preset();
GeneratorConfig large2wide_preset();

// Returns the preset for "medium", "large" or "large2wide"; throws on
// unknown names.
GeneratorConfig preset_by_name(const std::string& name);

}  // namespace tmapd
