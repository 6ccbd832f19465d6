#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dglm {

/// One feature's nonzeros, example indices strictly increasing.
struct SparseColumn {
    std::size_t feature_id = 0;
    std::vector<std::uint32_t> rows;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return rows.size(); }
};

/// Feature-major slice of the design matrix owned by one worker, plus the
/// replicated label vector. Columns are sorted by global feature id.
struct FeatureShard {
    int node_id = 0;
    int world_size = 1;
    std::size_t n = 0;       // examples
    std::size_t p = 0;       // global feature count
    std::uint64_t seed = 0;  // partition seed the shard was built with
    std::vector<SparseColumn> columns;
    std::vector<double> labels;

    std::size_t feature_count() const noexcept { return columns.size(); }
    std::size_t nnz() const noexcept;

    /// Throws std::invalid_argument if any structural invariant is violated.
    void validate() const;
};

} // namespace dglm
