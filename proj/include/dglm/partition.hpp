#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dglm/libsvm.hpp"
#include "dglm/shard.hpp"

namespace dglm {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Pseudo-random, reproducible assignment of features to nodes.
struct PartitionSpec {
    int nodes = 1;
    std::uint64_t seed = 0;

    int node_of(std::uint64_t feature_id) const noexcept
    {
        return static_cast<int>(mix64(mix64(feature_id) ^ seed) % static_cast<std::uint64_t>(nodes));
    }

    /// Feature sets S^0..S^{M-1} over ids 0..p-1, each ascending.
    std::vector<std::vector<std::size_t>> sets(std::size_t p) const;
};

PartitionSpec partition_features(int nodes, std::uint64_t seed);

/// Transposes example-major data into one feature-major shard per node.
std::vector<FeatureShard> build_shards(const Dataset& data, const PartitionSpec& spec);

} // namespace dglm
