#pragma once

#include "qhall/app/bundle.hpp"
#include "qhall/app/config.hpp"

namespace qhall::app {

struct RunOptions {
    int threads = 1;
    bool stamp_time = true;   // fill ResultBundle::timestamp
};

// Validates, dispatches on the experiment kind and collects the tables.
// Deterministic for a fixed config (threads only change the wall time).
ResultBundle run(const ExperimentConfig& config, const RunOptions& options = {});

const char* code_version();

}  // namespace qhall::app
