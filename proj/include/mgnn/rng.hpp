#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mgnn {

// All randomness in a run flows from one 64-bit master seed. Each consumer
// derives its own independent stream by name, so adding a consumer never
// perturbs the draws of existing ones.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
    return detail::splitmix64(master ^ detail::splitmix64(detail::fnv1a(stream)));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream) {
    return std::mt19937_64(derive_seed(master, stream));
}

} // namespace mgnn
