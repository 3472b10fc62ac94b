#pragma once
// Experiment drivers behind the CLI subcommands. Each writes its tables and
// figures into the output directory and returns the process exit code:
// 0 success, 1 verification failure, 2 parameter error, 3 numerical failure
// (2 and 3 are produced by the exception mapping in the entry point).

#include <cstdint>
#include <string>

#include "cellflow/config.hpp"

namespace cellflow {

struct RunOptions {
    std::string out_dir = "out";
    int threads = 0;  // 0: honor the config key
    bool figures = true;
    uint64_t seed_offset = 0;
};

int cmd_verify(const ExperimentConfig& ec, const RunOptions& ro);
int cmd_fields(const ExperimentConfig& ec, const RunOptions& ro);
int cmd_flow(const ExperimentConfig& ec, const RunOptions& ro);
int cmd_particles(const ExperimentConfig& ec, const RunOptions& ro);
int cmd_density(const ExperimentConfig& ec, const RunOptions& ro);
int cmd_rates(const ExperimentConfig& ec, const RunOptions& ro);

}  // namespace cellflow
