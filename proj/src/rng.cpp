#include "fedgui/rng.hpp"

#include <cmath>

namespace fedgui {

namespace {
inline uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

uint64_t Rng::next_u64() { return splitmix64(state_); }

uint64_t Rng::below(uint64_t bound) {
    // Rejection sampling over the largest multiple of bound.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::vector<size_t> Rng::sample_indices(size_t n, size_t k) {
    // Partial Fisher-Yates over an index vector.
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    std::vector<size_t> out;
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(below(n - i));
        std::swap(idx[i], idx[j]);
        out.push_back(idx[i]);
    }
    return out;
}

uint64_t fnv1a(std::string_view bytes, uint64_t seed) {
    uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {
uint64_t mix_u64(uint64_t h, uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (i * 8)) & 0xff;
        h *= 0x100000001b3ULL;
    }
    return h;
}
}  // namespace

uint64_t derive_seed(uint64_t master, std::string_view label) {
    return mix_u64(fnv1a(label), master);
}

uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t a) {
    return mix_u64(derive_seed(master, label), a);
}

uint64_t derive_seed(uint64_t master, std::string_view label, uint64_t a, uint64_t b) {
    return mix_u64(derive_seed(master, label, a), b);
}

uint64_t derive_seed(uint64_t master, std::string_view label, std::string_view a) {
    return fnv1a(a, derive_seed(master, label));
}

}  // namespace fedgui
