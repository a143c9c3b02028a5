#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "subsetflow/checkpoint.hpp"
#include "subsetflow/dataset.hpp"

namespace subsetflow {

// Command implementations behind the CLI, usable directly from tests. All
// throw ConfigError / DataFormatError / NumericError; the CLI maps those to
// exit codes 2 / 3 / 4.

void cmd_gen_toy(const std::string& kind, uint32_t n, uint32_t d, uint32_t k, double tau,
                 uint64_t seed, const std::string& out_path, std::ostream& log);

void cmd_train(const std::string& config_path, const std::string& data_path,
               const std::string& out_path, std::ostream& log);

void cmd_eval(const std::string& ckpt_path, const std::string& data_path,
              const std::vector<std::string>& estimators, const std::vector<int>& k_list,
              int mc_samples, uint64_t seed, std::ostream& out);

void cmd_sample(const std::string& ckpt_path, uint32_t n, uint64_t seed,
                const std::string& out_path, std::ostream& log);

void cmd_gap(const std::string& ckpt_path, const std::string& data_path, int mc_samples,
             const std::vector<int>& k_list, uint64_t seed, std::ostream& out);

void cmd_interpolate(const std::string& ckpt_path, const std::string& data_path, uint32_t idx_a,
                     uint32_t idx_b, int steps, uint64_t seed, const std::string& out_path,
                     std::ostream& out);

void cmd_oracle_normalize(const std::string& ckpt_path, std::ostream& out);
void cmd_oracle_mvdmol(uint64_t seed, int trials, std::ostream& out);
void cmd_oracle_gradcheck(uint64_t seed, std::ostream& out);
void cmd_oracle_quadrature(const std::string& ckpt_path, const std::string& data_path,
                           uint32_t idx, int grid, std::ostream& out);

}  // namespace subsetflow
