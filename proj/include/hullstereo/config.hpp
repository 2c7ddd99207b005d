#pragma once

#include <cstdint>
#include <string>

#include "hullstereo/matcher.hpp"

namespace hullstereo {

// Everything a run needs to be reproduced bit for bit.
struct RunConfig {
    MatchConfig match;
    int hull_depth = 8;
    uint64_t seed = 1;
    uint64_t pattern_seed = 99;
};

// Absent keys keep their defaults; unknown keys are rejected so typos fail
// loudly, and a missing file is an IoError.
RunConfig run_config_load(const std::string& json_path);
RunConfig run_config_defaults();

// Resolved snapshot; loading it back reproduces the run.
void run_config_save(const std::string& json_path, const RunConfig& cfg);

} // namespace hullstereo
