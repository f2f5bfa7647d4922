#pragma once

// Batch configuration: UTF-8 key=value text with dotted section keys.
// Unknown keys are rejected; parameters are validated against module
// preconditions before any computation.

#include <cstdint>
#include <string>
#include <vector>

namespace ncz {

struct Config {
    std::string experiment;

    int n = 1;
    int depth = 4;  // grid.K
    int d = 2;
    int pad = 0;

    int s_min = -6;
    int s_max = 0;
    bool s_max_auto = true;  // derive per sample from ||f||_inf

    int ell_min = 0;
    int ell_max = 3;

    int samples = 50;
    uint64_t seed = 1;
    int spikes = 0;
    double spike_scale = 8.0;

    std::string op_kind = "haar_multiplier";
    std::string op_side = "column";
    std::string op_file;  // serialized OperatorSpec overrides generated ones
    int shift_r = 1;
    int shift_s = 1;

    double ceiling = 100.0;  // sanity ceiling for measured-only ratios
    std::string ledger_path;

    std::string out;  // empty writes to stdout
    std::string format = "summary";
    int jobs = 1;

    bool operator==(const Config&) const = default;
};

const std::vector<std::string>& experiment_names();

Config parse_config(const std::string& text);
// Canonical form: one key=value per line, fixed key order. Re-parsing the
// canonical form reproduces the Config exactly.
std::string emit_config(const Config& cfg);

// Validates ranges and cross-field constraints; throws std::invalid_argument.
void validate_config(const Config& cfg);

}  // namespace ncz
