#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "relq/dqn.hpp"
#include "relq/env.hpp"
#include "relq/eval.hpp"

namespace relq {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a run needs, with defaults equal to the paper's Table-1 values
// where the paper gives one. Profiles set the step budget:
// paper = 20,000,000; desk = 500,000; smoke = 20,000.
struct ExperimentConfig {
    DqnConfig dqn;
    EnvConfig env;
    bool rnd_regularize = true;
    uint64_t seed = 1;
    std::string profile = "desk";
    InitRegion region;
    ScoreHead head = ScoreHead::Features;

    void apply_profile(const std::string& name);
};

// Flat "key = value" text with [section] headers; unknown keys are errors
// (with the line number). Sections: [run], [dqn], [env], [reliability].
ExperimentConfig parse_config_text(const std::string& text, const ExperimentConfig& base = {});
ExperimentConfig load_config_file(const std::string& path, const ExperimentConfig& base = {});

// Fully resolved config in the same format parse_config_text accepts, so a
// manifest alone reproduces the run.
void write_resolved_config(std::ostream& os, const ExperimentConfig& cfg);

std::string region_to_string(const InitRegion& r);
InitRegion region_from_string(const std::string& s);

// FNV-1a over file bytes; manifest fingerprints.
uint64_t file_fnv64(const std::string& path);

// manifest.txt: resolved config plus one content-hash line per artifact.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const ExperimentConfig& cfg, const std::vector<std::string>& artifacts);

}  // namespace relq
