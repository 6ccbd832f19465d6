#include "dglm/partition.hpp"

#include <stdexcept>

namespace dglm {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<std::vector<std::size_t>> PartitionSpec::sets(std::size_t p) const
{
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(nodes));
    for (std::size_t j = 0; j < p; ++j) out[static_cast<std::size_t>(node_of(j))].push_back(j);
    return out;
}

PartitionSpec partition_features(int nodes, std::uint64_t seed)
{
    if (nodes < 1) throw std::invalid_argument("partition: node count must be >= 1");
    return PartitionSpec{nodes, seed};
}

std::vector<FeatureShard> build_shards(const Dataset& data, const PartitionSpec& spec)
{
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    if (n > 0xFFFFFFFFull) throw std::invalid_argument("build_shards: too many examples");

    // Global column layout first; rows are visited in order so each column comes out sorted.
    std::vector<SparseColumn> columns(p);
    for (std::size_t j = 0; j < p; ++j) columns[j].feature_id = j;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : data.rows[i]) {
            if (e.id >= p) throw std::invalid_argument("build_shards: unknown feature id");
            columns[e.id].rows.push_back(static_cast<std::uint32_t>(i));
            columns[e.id].values.push_back(e.value);
        }
    }

    std::vector<FeatureShard> shards(static_cast<std::size_t>(spec.nodes));
    for (int m = 0; m < spec.nodes; ++m) {
        auto& s = shards[static_cast<std::size_t>(m)];
        s.node_id = m;
        s.world_size = spec.nodes;
        s.n = n;
        s.p = p;
        s.seed = spec.seed;
        s.labels = data.labels;
    }
    for (std::size_t j = 0; j < p; ++j) {
        shards[static_cast<std::size_t>(spec.node_of(j))].columns.push_back(std::move(columns[j]));
    }
    return shards;
}

} // namespace dglm
