#pragma once

#include <string>
#include <vector>

#include "subsetflow/adam.hpp"
#include "subsetflow/dequant.hpp"
#include "subsetflow/flow.hpp"

namespace subsetflow {

// Parsed run configuration. model.D and model.K come from the dataset, not the
// config file; call finalize_run_config once the data is known.
struct RunConfig {
    ModelConfig model;

    Objective objective = Objective::Exact;
    AdamConfig adam;
    int batch = 32;
    int epochs = 10;
    uint64_t seed = 0;

    std::vector<std::string> estimators = {"exact", "elbo", "iwbo"};
    std::vector<int> k_list = {10, 100};
    int mc_samples = 100;

    std::vector<int> dequant_hidden = {64};
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);  // canonical, includes D/K

// Fills in D/K and family-dependent default bin counts (linear: K, quadratic:
// 16, mol: 10 mixtures), then checks the capability rules.
void finalize_run_config(RunConfig& cfg, int D, int K);
void validate_run_config(const RunConfig& cfg);

}  // namespace subsetflow
