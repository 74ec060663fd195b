#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace tmapd {

// Append-only JSON-lines event log: one record per event with fields
// {"t": timestep, "kind": name, ...payload}. The log is the substrate for
// metrics and post-hoc invariant audits.
class EventLog {
public:
    void emit(int t, const char* kind, nlohmann::json payload = nlohmann::json::object()) {
        payload["t"] = t;
        payload["kind"] = kind;
        records_.push_back(std::move(payload));
    }

    const std::vector<nlohmann::json>& records() const { return records_; }

    void write_jsonl(const std::string& path) const;

    // Throws std::runtime_error naming the first malformed line.
    static std::vector<nlohmann::json> read_jsonl(const std::string& path);

private:
    std::vector<nlohmann::json> records_;
};

}  // namespace tmapd
