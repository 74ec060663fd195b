#include "tmapd/disruption.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace tmapd {

const char* to_string(DisruptionCause cause) {
    return cause == DisruptionCause::DroppedItem ? "dropped-item" : "agent-breakdown";
}

DisruptionCause cause_from_string(const std::string& s) {
    if (s == "dropped-item") return DisruptionCause::DroppedItem;
    if (s == "agent-breakdown") return DisruptionCause::AgentBreakdown;
    throw std::invalid_argument("unknown disruption cause: " + s);
}

std::vector<Disruption> sample_disruptions(const std::vector<ExecutedMove>& moves, int t_start,
                                           const DisruptionConfig& config,
                                           std::mt19937_64& rng,
                                           const std::function<bool(Vertex)>& occupied) {
    std::vector<Disruption> out;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> duration(config.duration_min, config.duration_max);
    const std::pair<DisruptionCause, double> causes[] = {
        {DisruptionCause::DroppedItem, config.drop_rate},
        {DisruptionCause::AgentBreakdown, config.breakdown_rate},
    };
    for (const ExecutedMove& move : moves) {
        for (const auto& [cause, rate] : causes) {
            if (rate <= 0.0) continue;
            if (unit(rng) >= rate) continue;
            const int d = duration(rng);
            if (occupied(move.from)) continue;  // sample discarded, not relocated
            out.push_back(Disruption{move.from, t_start, t_start + d - 1, cause});
        }
    }
    return out;
}

DisruptionBook DisruptionBook::live(const DisruptionConfig& config, uint64_t seed) {
    DisruptionBook book;
    book.live_ = true;
    book.config_ = config;
    std::seed_seq seq{static_cast<uint64_t>(0xd157u), seed};
    book.rng_ = std::mt19937_64(seq);
    return book;
}

DisruptionBook DisruptionBook::replay(std::vector<Disruption> trace) {
    DisruptionBook book;
    book.live_ = false;
    book.records_ = std::move(trace);
    book.observed_.assign(book.records_.size(), 0);
    book.end_reported_.assign(book.records_.size(), 0);
    return book;
}

void DisruptionBook::on_moves_executed(const std::vector<ExecutedMove>& moves, int t_next,
                                       const std::function<bool(Vertex)>& occupied) {
    if (!live_) return;
    for (Disruption& d : sample_disruptions(moves, t_next, config_, rng_, occupied)) {
        records_.push_back(d);
        observed_.push_back(0);
        end_reported_.push_back(0);
    }
}

ObserveResult DisruptionBook::observe(int t) {
    ObserveResult out;
    for (size_t i = 0; i < records_.size(); ++i) {
        const Disruption& d = records_[i];
        if (d.t_start > t || d.t_end < t) continue;
        out.active.push_back(d.vertex);
        if (!observed_[i]) out.newly.push_back(d.vertex);
        observed_[i] = 1;
    }
    return out;
}

std::vector<Vertex> DisruptionBook::known_active(int t) const {
    std::vector<Vertex> out;
    for (size_t i = 0; i < records_.size(); ++i)
        if (observed_[i] && records_[i].t_start <= t && t <= records_[i].t_end)
            out.push_back(records_[i].vertex);
    return out;
}

std::vector<Vertex> DisruptionBook::physically_active(int t) const {
    std::vector<Vertex> out;
    for (const Disruption& d : records_)
        if (d.t_start <= t && t <= d.t_end) out.push_back(d.vertex);
    return out;
}

std::vector<Disruption> DisruptionBook::collect_ended(int t) {
    std::vector<Disruption> out;
    for (size_t i = 0; i < records_.size(); ++i) {
        if (observed_[i] && !end_reported_[i] && records_[i].t_end < t) {
            end_reported_[i] = 1;
            out.push_back(records_[i]);
        }
    }
    return out;
}

void DisruptionBook::save_trace(const std::string& path, const std::vector<Disruption>& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
    for (const Disruption& d : trace) {
        nlohmann::json record = {{"vertex", d.vertex},
                                 {"t_start", d.t_start},
                                 {"t_end", d.t_end},
                                 {"cause", to_string(d.cause)}};
        out << record.dump() << "\n";
    }
}

std::vector<Disruption> DisruptionBook::load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::vector<Disruption> trace;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
            trace.push_back(Disruption{record.at("vertex").get<int>(),
                                       record.at("t_start").get<int>(),
                                       record.at("t_end").get<int>(),
                                       cause_from_string(record.at("cause").get<std::string>())});
        } catch (const std::exception& e) {
            throw std::runtime_error("trace parse error at line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return trace;
}

}  // namespace tmapd
