#pragma once

// Structured experiment output shared by the hardy and probes modules.

#include <map>
#include <string>
#include <vector>

namespace ncz {

struct ProbeRecord {
    int sample = 0;
    std::map<std::string, double> values;
};

struct ProbeReport {
    std::string name;
    std::vector<ProbeRecord> rows;
    std::map<std::string, double> aggregates;

    double aggregate_max(const std::string& key) const;
};

}  // namespace ncz
