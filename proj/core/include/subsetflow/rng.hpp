#pragma once

#include <cstdint>

namespace subsetflow {

// Counter-based splittable generator. A stream is (key, counter); outputs are a
// pure function of both, so substreams obtained via split() are independent of
// evaluation order and two streams with the same seed are identical.
class Rng {
public:
    explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x2545F4914F6CDD1DULL)), counter_(0) {}

    static Rng restore(uint64_t key, uint64_t counter) {
        Rng r(0);
        r.key_ = key;
        r.counter_ = counter;
        return r;
    }

    // Child stream for substream index `stream`; does not advance this stream.
    Rng split(uint64_t stream) const {
        Rng r(0);
        r.key_ = mix(key_ ^ mix(stream + 0x9E3779B97F4A7C15ULL));
        r.counter_ = 0;
        return r;
    }

    uint64_t next_u64() { return mix(key_ ^ mix(++counter_)); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1).
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via the inverse CDF of a (0,1) uniform.
    double normal();

    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

    uint64_t key() const { return key_; }
    uint64_t counter() const { return counter_; }

private:
    static uint64_t mix(uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    uint64_t key_;
    uint64_t counter_;
};

}  // namespace subsetflow
