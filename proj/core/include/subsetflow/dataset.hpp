#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "subsetflow/rng.hpp"

namespace subsetflow {

// N x D grid of ordinal values in {0, ..., K-1}.
struct OrdinalDataset {
    uint32_t N = 0;
    uint32_t D = 0;
    uint32_t K = 0;
    std::vector<uint8_t> data;  // sample-major, N*D bytes

    std::span<const uint8_t> sample(uint32_t i) const {
        return {data.data() + static_cast<size_t>(i) * D, D};
    }
    std::vector<int> sample_ints(uint32_t i) const {
        std::vector<int> x(D);
        for (uint32_t d = 0; d < D; ++d) x[d] = data[static_cast<size_t>(i) * D + d];
        return x;
    }
};

// Binary layout, little-endian: "SUBF", u32 version=1, u32 N, u32 D, u32 K
// (K <= 256), then N*D unsigned bytes sample-major.
OrdinalDataset load_dataset(const std::string& path);
void save_dataset(const OrdinalDataset& ds, const std::string& path);

// Toy generators. Distributions are simple enough that ground-truth entropies
// exist for the first two kinds.

// i.i.d. uniform over {0..K-1} per dimension.
OrdinalDataset gen_independent(uint32_t n, uint32_t d, uint32_t k, uint64_t seed);

// First dimension uniform; transitions T(j|i) = softmax_j(-|i-j| / tau).
OrdinalDataset gen_markov(uint32_t n, uint32_t d, uint32_t k, double tau, uint64_t seed);

// AR(1) Gaussian copula (rho = 0.7) quantized to K levels via the normal CDF.
OrdinalDataset gen_qgauss(uint32_t n, uint32_t d, uint32_t k, uint64_t seed);

// Exact entropies of the generating distributions, in bits per dimension.
double independent_entropy_bits_per_dim(uint32_t k);
double markov_entropy_bits_per_dim(uint32_t d, uint32_t k, double tau);

}  // namespace subsetflow
