#pragma once

#include <cstdint>
#include <random>

#include "rsde/types.hpp"

namespace rsde {

/// SplitMix64 output function applied to `state`, advancing it.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed of the `index`-th child stream of `base`. Pure function, so ensembles
/// come out identical under any scheduling of their members.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Stream of standard normals for one path.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double next() { return dist_(engine_); }
    void fill(VectorRef z) {
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = dist_(engine_);
    }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace rsde
