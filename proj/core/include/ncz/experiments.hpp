#pragma once

// The experiment catalog. Each experiment runs a randomized ensemble,
// aggregates per-check worst cases, and returns pass/fail/measured records.
// Results are deterministic under a fixed seed.

#include "ncz/report.hpp"

namespace ncz {

ExperimentResult run_experiment(const Config& cfg);

}  // namespace ncz
