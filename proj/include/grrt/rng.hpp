#pragma once

#include <cstdint>
#include <random>

namespace grrt {

// splitmix64 finalizer; good avalanche, used only to derive seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent per-trial stream derived from (master seed, snr index, trial
// index).  Trials can therefore run on any worker in any order and still
// draw identical randomness.
inline std::mt19937_64 trial_stream(std::uint64_t master, std::uint64_t snr_index,
                                    std::uint64_t trial_index) {
    std::uint64_t s = mix64(master);
    s = mix64(s ^ (0xd2b74407b1ce6e93ULL + snr_index));
    s = mix64(s ^ (0x8bb84b93962eacc9ULL + trial_index));
    return std::mt19937_64(s);
}

}  // namespace grrt
