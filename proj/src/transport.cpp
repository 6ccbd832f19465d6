#include "dglm/transport.hpp"

namespace dglm {

void Transport::count(Collective kind, std::size_t doubles) noexcept
{
    const std::uint64_t bytes = static_cast<std::uint64_t>(doubles) * sizeof(double);
    switch (kind) {
    case Collective::vector_sum:
        ++counters_.vector_reduces;
        counters_.vector_payload_bytes += bytes;
        break;
    case Collective::scalar_sum:
        ++counters_.scalar_reduces;
        counters_.scalar_payload_bytes += bytes;
        break;
    case Collective::gather_sum:
        ++counters_.other_reduces;
        counters_.other_payload_bytes += bytes;
        break;
    }
}

} // namespace dglm
