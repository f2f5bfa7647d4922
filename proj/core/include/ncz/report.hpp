#pragma once

// Machine-readable experiment results. JSON is the source of truth and is
// byte-deterministic under a fixed seed (timing is reported only in the
// human-readable summary). CSV flattens the per-check records.

#include <string>
#include <vector>

#include "ncz/config.hpp"

namespace ncz {

inline constexpr const char* kVersionStamp = "nczlab/0.1.0";
inline constexpr int kReportSchemaVersion = 1;

enum class CheckStatus { pass, fail, measured };

const char* to_string(CheckStatus s);

struct CheckRecord {
    std::string name;
    std::string anchor;  // the inequality or identity being exercised
    double value = 0.0;  // worst measured value across the ensemble
    double bound = 0.0;  // asserted bound (0 for measured-only records)
    CheckStatus status = CheckStatus::measured;
    std::string note;
};

struct ExperimentResult {
    Config config;
    std::string version = kVersionStamp;
    std::vector<CheckRecord> checks;
    double elapsed_ms = 0.0;

    int failures() const;
};

std::string report_json(const ExperimentResult& r);
std::string report_csv(const ExperimentResult& r);
std::string report_summary(const ExperimentResult& r);

// format in {json, csv, summary}; empty path writes to stdout.
void emit_report(const ExperimentResult& r, const std::string& format, const std::string& path);

}  // namespace ncz
