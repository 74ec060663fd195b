#include "tmapd/event_log.hpp"

#include <fstream>
#include <stdexcept>

namespace tmapd {

void EventLog::write_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open event log for writing: " + path);
    for (const nlohmann::json& record : records_) out << record.dump() << "\n";
}

std::vector<nlohmann::json> EventLog::read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open event log: " + path);
    std::vector<nlohmann::json> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(nlohmann::json::parse(line));
        } catch (const std::exception& e) {
            throw std::runtime_error("event log parse error at line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace tmapd
