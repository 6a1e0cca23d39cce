#include "rsde/rng.hpp"

namespace rsde {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t s = base;
    const std::uint64_t mixed_base = splitmix64(s);
    std::uint64_t t = mixed_base ^ (index * 0xD1B54A32D192ED03ULL);
    splitmix64(t);
    return splitmix64(t);
}

}  // namespace rsde
