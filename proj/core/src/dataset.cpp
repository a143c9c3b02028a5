#include "subsetflow/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "subsetflow/errors.hpp"
#include "subsetflow/numerics.hpp"

namespace subsetflow {

namespace {

constexpr char kMagic[4] = {'S', 'U', 'B', 'F'};
constexpr uint32_t kVersion = 1;

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataFormatError("dataset file truncated in header");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

// Transition row i of the Markov kind: T(j|i) = softmax_j(-|i-j| / tau).
std::vector<double> markov_row(uint32_t k, double tau, uint32_t i) {
    std::vector<double> row(k);
    double z = 0.0;
    for (uint32_t j = 0; j < k; ++j) {
        row[j] = std::exp(-std::abs(static_cast<double>(i) - static_cast<double>(j)) / tau);
        z += row[j];
    }
    for (double& v : row) v /= z;
    return row;
}

uint32_t draw_categorical(std::span<const double> p, Rng& rng) {
    double u = rng.uniform_open();
    double acc = 0.0;
    for (size_t j = 0; j < p.size(); ++j) {
        acc += p[j];
        if (u <= acc) return static_cast<uint32_t>(j);
    }
    return static_cast<uint32_t>(p.size() - 1);
}

}  // namespace

OrdinalDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open dataset file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataFormatError("bad dataset magic (expected SUBF): " + path);
    uint32_t version = read_u32(in);
    if (version != kVersion) throw DataFormatError("unsupported dataset version");
    OrdinalDataset ds;
    ds.N = read_u32(in);
    ds.D = read_u32(in);
    ds.K = read_u32(in);
    if (ds.K == 0 || ds.K > 256) throw DataFormatError("dataset K must be in [1, 256]");
    if (ds.D == 0) throw DataFormatError("dataset D must be positive");
    size_t payload = static_cast<size_t>(ds.N) * ds.D;
    ds.data.resize(payload);
    if (payload > 0) {
        in.read(reinterpret_cast<char*>(ds.data.data()), static_cast<std::streamsize>(payload));
        if (static_cast<size_t>(in.gcount()) != payload)
            throw DataFormatError("dataset payload truncated");
    }
    in.peek();
    if (!in.eof()) throw DataFormatError("trailing bytes after dataset payload");
    for (uint8_t v : ds.data)
        if (v >= ds.K) throw DataFormatError("dataset value >= K");
    return ds;
}

void save_dataset(const OrdinalDataset& ds, const std::string& path) {
    if (ds.K == 0 || ds.K > 256) throw DataFormatError("dataset K must be in [1, 256]");
    if (ds.data.size() != static_cast<size_t>(ds.N) * ds.D)
        throw DataFormatError("dataset payload size mismatch");
    for (uint8_t v : ds.data)
        if (v >= ds.K) throw DataFormatError("dataset value >= K");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataFormatError("cannot write dataset file: " + path);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, ds.N);
    write_u32(out, ds.D);
    write_u32(out, ds.K);
    if (!ds.data.empty())
        out.write(reinterpret_cast<const char*>(ds.data.data()),
                  static_cast<std::streamsize>(ds.data.size()));
    if (!out) throw DataFormatError("write failure: " + path);
}

OrdinalDataset gen_independent(uint32_t n, uint32_t d, uint32_t k, uint64_t seed) {
    OrdinalDataset ds{n, d, k, {}};
    ds.data.resize(static_cast<size_t>(n) * d);
    Rng root(seed);
    for (uint32_t i = 0; i < n; ++i) {
        Rng s = root.split(i);
        for (uint32_t j = 0; j < d; ++j)
            ds.data[static_cast<size_t>(i) * d + j] =
                static_cast<uint8_t>(s.uniform_int(static_cast<int>(k)));
    }
    return ds;
}

OrdinalDataset gen_markov(uint32_t n, uint32_t d, uint32_t k, double tau, uint64_t seed) {
    if (tau <= 0.0) throw ConfigError("markov-chain generator needs tau > 0");
    OrdinalDataset ds{n, d, k, {}};
    ds.data.resize(static_cast<size_t>(n) * d);
    std::vector<std::vector<double>> rows(k);
    for (uint32_t i = 0; i < k; ++i) rows[i] = markov_row(k, tau, i);
    Rng root(seed);
    for (uint32_t i = 0; i < n; ++i) {
        Rng s = root.split(i);
        uint32_t cur = static_cast<uint32_t>(s.uniform_int(static_cast<int>(k)));
        ds.data[static_cast<size_t>(i) * d] = static_cast<uint8_t>(cur);
        for (uint32_t j = 1; j < d; ++j) {
            cur = draw_categorical(rows[cur], s);
            ds.data[static_cast<size_t>(i) * d + j] = static_cast<uint8_t>(cur);
        }
    }
    return ds;
}

OrdinalDataset gen_qgauss(uint32_t n, uint32_t d, uint32_t k, uint64_t seed) {
    constexpr double rho = 0.7;
    OrdinalDataset ds{n, d, k, {}};
    ds.data.resize(static_cast<size_t>(n) * d);
    Rng root(seed);
    for (uint32_t i = 0; i < n; ++i) {
        Rng s = root.split(i);
        double g = s.normal();
        for (uint32_t j = 0; j < d; ++j) {
            if (j > 0) g = rho * g + std::sqrt(1.0 - rho * rho) * s.normal();
            int q = static_cast<int>(std::floor(normal_cdf(g) * k));
            q = std::min(std::max(q, 0), static_cast<int>(k) - 1);
            ds.data[static_cast<size_t>(i) * d + j] = static_cast<uint8_t>(q);
        }
    }
    return ds;
}

double independent_entropy_bits_per_dim(uint32_t k) {
    return std::log2(static_cast<double>(k));
}

double markov_entropy_bits_per_dim(uint32_t d, uint32_t k, double tau) {
    // H(x_1)/D + sum_t H(x_t | x_{t-1})/D with the marginals evolved exactly.
    std::vector<std::vector<double>> rows(k);
    std::vector<double> row_entropy(k, 0.0);
    for (uint32_t i = 0; i < k; ++i) {
        rows[i] = markov_row(k, tau, i);
        for (double p : rows[i])
            if (p > 0.0) row_entropy[i] -= p * std::log2(p);
    }
    std::vector<double> marg(k, 1.0 / k);
    double total = std::log2(static_cast<double>(k));
    for (uint32_t t = 1; t < d; ++t) {
        double h = 0.0;
        for (uint32_t i = 0; i < k; ++i) h += marg[i] * row_entropy[i];
        total += h;
        std::vector<double> next(k, 0.0);
        for (uint32_t i = 0; i < k; ++i)
            for (uint32_t j = 0; j < k; ++j) next[j] += marg[i] * rows[i][j];
        marg = std::move(next);
    }
    return total / d;
}

}  // namespace subsetflow
