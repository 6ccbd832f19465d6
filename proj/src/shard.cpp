#include "dglm/shard.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dglm {

std::size_t FeatureShard::nnz() const noexcept
{
    std::size_t total = 0;
    for (const auto& c : columns) total += c.nnz();
    return total;
}

void FeatureShard::validate() const
{
    if (world_size < 1 || node_id < 0 || node_id >= world_size) {
        throw std::invalid_argument("shard: node id out of range");
    }
    if (labels.size() != n) {
        throw std::invalid_argument("shard: label count does not match example count");
    }
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const SparseColumn& c = columns[k];
        const std::string where = "shard column " + std::to_string(c.feature_id) + ": ";
        if (c.feature_id >= p) throw std::invalid_argument(where + "feature id >= p");
        if (k > 0 && columns[k - 1].feature_id >= c.feature_id) {
            throw std::invalid_argument(where + "feature ids not strictly increasing");
        }
        if (c.rows.size() != c.values.size()) {
            throw std::invalid_argument(where + "rows/values length mismatch");
        }
        for (std::size_t e = 0; e < c.rows.size(); ++e) {
            if (c.rows[e] >= n) throw std::invalid_argument(where + "example index >= n");
            if (e > 0 && c.rows[e - 1] >= c.rows[e]) {
                throw std::invalid_argument(where + "example indices not strictly increasing");
            }
            if (!std::isfinite(c.values[e]) || c.values[e] == 0.0) {
                throw std::invalid_argument(where + "stored value must be finite and nonzero");
            }
        }
    }
}

} // namespace dglm
