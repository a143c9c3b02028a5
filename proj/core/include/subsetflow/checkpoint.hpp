#pragma once

#include <memory>
#include <string>

#include "subsetflow/adam.hpp"
#include "subsetflow/config.hpp"

namespace subsetflow {

// Self-contained training state: the config (with D/K), all parameter tensors,
// optimizer moments, RNG state and step count. Load then save reproduces the
// file byte for byte.
struct Checkpoint {
    RunConfig config;
    std::unique_ptr<SubsetFlowModel> model;
    std::unique_ptr<Dequantizer> dequantizer;  // only for variational objective
    AdamState opt;                             // moments over model then dequantizer params
    uint64_t rng_key = 0;
    uint64_t rng_counter = 0;
    uint64_t steps = 0;
    int epochs_done = 0;
};

// Builds the model (and dequantizer when the objective needs one) from a
// finalized config.
Checkpoint init_checkpoint(const RunConfig& cfg);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace subsetflow
