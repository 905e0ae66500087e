#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace fedgui {

// Deterministic PRNG used everywhere instead of <random> distributions, so
// results are identical across standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64();

    // Uniform in [0, bound), bias-free via rejection. bound must be > 0.
    uint64_t below(uint64_t bound);

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform();

    // Standard normal via Box-Muller.
    double gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<size_t> sample_indices(size_t n, size_t k);

private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stable seed derivation: hash of (master seed, purpose label, indices).
uint64_t derive_seed(uint64_t master, std::string_view label);
uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t a);
uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t a, uint64_t b);
uint64_t derive_seed(uint64_t master, std::string_view label, std::string_view a);

// FNV-1a over arbitrary bytes, used for config and corpus hashes.
uint64_t fnv1a(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace fedgui
