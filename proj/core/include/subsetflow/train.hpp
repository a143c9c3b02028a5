#pragma once

#include <functional>
#include <vector>

#include "subsetflow/checkpoint.hpp"
#include "subsetflow/dataset.hpp"

namespace subsetflow {

struct EpochLog {
    int epoch = 0;               // 0-based, absolute (continues across resumes)
    double bits_per_dim = 0.0;   // mean training objective over the epoch
};

// Trains the checkpoint in place for config.epochs further epochs. Epoch
// shuffles and dequantization noise derive from the config seed and absolute
// epoch number, so identical seeds give bitwise-identical runs.
std::vector<EpochLog> train(Checkpoint& ck, const OrdinalDataset& data,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace subsetflow
