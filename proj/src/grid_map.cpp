#include "tmapd/grid_map.hpp"

#include <cstdlib>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tmapd {

GridMap::GridMap(int height, int width, std::vector<Cell> cells)
    : height_(height), width_(width), cells_(std::move(cells)) {
    if (height_ <= 0 || width_ <= 0)
        throw std::invalid_argument("GridMap: dimensions must be positive");
    if (cells_.size() != static_cast<size_t>(height_) * width_)
        throw std::invalid_argument("GridMap: cell count does not match dimensions");
    for (Vertex v = 0; v < size(); ++v) {
        switch (cells_[v]) {
            case Cell::PodHome: pod_homes_.push_back(v); break;
            case Cell::Workstation: workstations_.push_back(v); break;
            case Cell::Reserved: reserved_.push_back(v); break;
            case Cell::Floor: break;
        }
    }
}

int GridMap::neighbors(Vertex v, std::array<Vertex, 4>& out) const {
    int n = 0;
    const int r = row(v), c = col(v);
    if (r > 0) out[n++] = v - width_;
    if (c > 0) out[n++] = v - 1;
    if (c + 1 < width_) out[n++] = v + 1;
    if (r + 1 < height_) out[n++] = v + width_;
    return n;
}

int GridMap::graph_distance(Vertex u, Vertex v) const {
    if (!contains(u) || !contains(v))
        throw std::invalid_argument("graph_distance: vertex out of range");
    return std::abs(row(u) - row(v)) + std::abs(col(u) - col(v));
}

std::string GridMap::to_text() const {
    std::ostringstream out;
    out << "height " << height_ << "\n";
    out << "width " << width_ << "\n";
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c)
            out << static_cast<char>(cells_[vertex(r, c)]);
        out << "\n";
    }
    return out.str();
}

GridMap GridMap::from_text(const std::string& text) {
    std::istringstream in(text);
    std::string key;
    int h = 0, w = 0;
    if (!(in >> key >> h) || key != "height")
        throw std::runtime_error("map parse error: expected 'height N'");
    if (!(in >> key >> w) || key != "width")
        throw std::runtime_error("map parse error: expected 'width M'");
    std::string line;
    std::getline(in, line);  // consume end of header line
    std::vector<Cell> cells;
    cells.reserve(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r) {
        if (!std::getline(in, line))
            throw std::runtime_error("map parse error: missing row " + std::to_string(r));
        if (static_cast<int>(line.size()) < w)
            throw std::runtime_error("map parse error: short row " + std::to_string(r));
        for (int c = 0; c < w; ++c) {
            switch (line[c]) {
                case '.': cells.push_back(Cell::Floor); break;
                case '@': cells.push_back(Cell::PodHome); break;
                case 'W': cells.push_back(Cell::Workstation); break;
                case 'R': cells.push_back(Cell::Reserved); break;
                default:
                    throw std::runtime_error(std::string("map parse error: bad cell '") +
                                             line[c] + "' in row " + std::to_string(r));
            }
        }
    }
    return GridMap(h, w, std::move(cells));
}

void GridMap::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open map file for writing: " + path);
    out << to_text();
}

GridMap GridMap::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open map file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

void GridMap::validate() const {
    // Connectivity of the non-pod subgraph.
    Vertex seed = kUnreachable;
    int open_count = 0;
    for (Vertex v = 0; v < size(); ++v) {
        if (cell(v) != Cell::PodHome) {
            ++open_count;
            if (seed == kUnreachable) seed = v;
        }
    }
    if (open_count == 0) throw std::runtime_error("map invalid: no traversable cells");
    std::vector<char> seen(size(), 0);
    std::deque<Vertex> queue{seed};
    seen[seed] = 1;
    int reached = 1;
    std::array<Vertex, 4> nbr{};
    while (!queue.empty()) {
        Vertex v = queue.front();
        queue.pop_front();
        int n = neighbors(v, nbr);
        for (int i = 0; i < n; ++i) {
            Vertex u = nbr[i];
            if (!seen[u] && cell(u) != Cell::PodHome) {
                seen[u] = 1;
                ++reached;
                queue.push_back(u);
            }
        }
    }
    if (reached != open_count)
        throw std::runtime_error("map invalid: non-pod subgraph is disconnected");
}

GridMap generate_warehouse(const GeneratorConfig& cfg, uint64_t /*seed*/) {
    // Layout is fully determined by the config; the seed is accepted for
    // interface stability and reserved for randomized variants.
    if (cfg.height <= 0 || cfg.width <= 0)
        throw std::invalid_argument("generator: dimensions must be positive");
    if (cfg.aisle_width != 1 && cfg.aisle_width != 2)
        throw std::invalid_argument("generator: aisle width must be 1 or 2");
    if (cfg.pod_rows < 0 || cfg.pod_blocks < 0 || cfg.pods_per_block < 0)
        throw std::invalid_argument("generator: pod counts must be nonnegative");
    if (cfg.workstation_spacing < 1)
        throw std::invalid_argument("generator: workstation spacing must be >= 1");

    const int h = cfg.height, w = cfg.width;
    const bool has_pods = cfg.pod_rows > 0 && cfg.pod_blocks > 0 && cfg.pods_per_block > 0;
    if (has_pods) {
        if (h < 6 || w < 6)
            throw std::invalid_argument("generator: map too small for pod blocks");
        const int rows_used = 1 + (cfg.pod_rows - 1) * (1 + cfg.aisle_width);
        if (2 + rows_used > h - 3 + 1)
            throw std::invalid_argument("generator: pod rows do not fit map height");
        const int cols_used =
            cfg.pod_blocks * cfg.pods_per_block + (cfg.pod_blocks - 1) * cfg.aisle_width;
        if (cols_used > w - 4)
            throw std::invalid_argument("generator: pod blocks do not fit map width");
    }

    std::vector<Cell> cells(static_cast<size_t>(h) * w, Cell::Floor);
    auto at = [&](int r, int c) -> Cell& { return cells[static_cast<size_t>(r) * w + c]; };

    // Reserved strip along one border edge, leaving two corner cells open.
    switch (cfg.reserved_edge) {
        case 'T':
            for (int c = 2; c <= w - 3; ++c) at(0, c) = Cell::Reserved;
            break;
        case 'B':
            for (int c = 2; c <= w - 3; ++c) at(h - 1, c) = Cell::Reserved;
            break;
        case 'L':
            for (int r = 2; r <= h - 3; ++r) at(r, 0) = Cell::Reserved;
            break;
        case 'R':
            for (int r = 2; r <= h - 3; ++r) at(r, w - 1) = Cell::Reserved;
            break;
        default:
            throw std::invalid_argument("generator: reserved edge must be T/B/L/R");
    }

    // Workstations on the remaining border edges.
    const int s = cfg.workstation_spacing;
    if (cfg.reserved_edge != 'B')
        for (int c = 2; c <= w - 3; c += s) at(h - 1, c) = Cell::Workstation;
    if (cfg.reserved_edge != 'T')
        for (int c = 2; c <= w - 3; c += s) at(0, c) = Cell::Workstation;
    if (cfg.reserved_edge != 'L')
        for (int r = 2; r <= h - 3; r += s) at(r, 0) = Cell::Workstation;
    if (cfg.reserved_edge != 'R')
        for (int r = 2; r <= h - 3; r += s) at(r, w - 1) = Cell::Workstation;

    // Pod blocks, horizontally centered between the floor margins.
    if (has_pods) {
        const int cols_used =
            cfg.pod_blocks * cfg.pods_per_block + (cfg.pod_blocks - 1) * cfg.aisle_width;
        const int left = 2 + (w - 4 - cols_used) / 2;
        for (int k = 0; k < cfg.pod_rows; ++k) {
            const int r = 2 + k * (1 + cfg.aisle_width);
            int c = left;
            for (int b = 0; b < cfg.pod_blocks; ++b) {
                for (int i = 0; i < cfg.pods_per_block; ++i) at(r, c++) = Cell::PodHome;
                c += cfg.aisle_width;
            }
        }
    }

    GridMap map(h, w, std::move(cells));
    map.validate();
    return map;
}

GeneratorConfig medium_preset() {
    return GeneratorConfig{24, 47, 10, 4, 10, 1, 3, 'T'};
}

GeneratorConfig large_preset() {
    return GeneratorConfig{32, 75, 14, 6, 11, 1, 3, 'T'};
}

GeneratorConfig large2wide_preset() {
    return GeneratorConfig{32, 75, 10, 5, 12, 2, 3, 'T'};
}

GeneratorConfig preset_by_name(const std::string& name) {
    if (name == "medium") return medium_preset();
    if (name == "large") return large_preset();
    if (name == "large2wide") return large2wide_preset();
    throw std::invalid_argument("unknown map preset: " + name);
}

}  // namespace tmapd
