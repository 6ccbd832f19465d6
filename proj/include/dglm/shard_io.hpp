#pragma once

// On-disk layout written by repartition:
//
//   <dir>/shard_<m>.txt   one per node
//   <dir>/labels.txt      one label per line
//   <dir>/idmap.txt       "internal_id raw_id" per line
//
// A shard file is a text header followed by one line per column:
//
//   dglm-shard 1
//   node <m>
//   nodes <M>
//   examples <n>
//   features <p>
//   seed <seed>
//   columns <count>
//   checksum <16 hex digits, FNV-1a 64 over the column lines>
//   <j> <i1>:<v1> <i2>:<v2> ...
//
// Numbers use shortest round-trip decimal formatting.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dglm/libsvm.hpp"
#include "dglm/partition.hpp"
#include "dglm/shard.hpp"

namespace dglm {

std::filesystem::path shard_path(const std::filesystem::path& dir, int node);
std::filesystem::path labels_path(const std::filesystem::path& dir);
std::filesystem::path idmap_path(const std::filesystem::path& dir);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;

struct RepartitionSummary {
    std::size_t examples = 0;
    std::size_t features = 0;
    std::vector<std::size_t> columns_per_node;
};

/// Writes M shard files, the label file and the id map into `out_dir`.
RepartitionSummary repartition(std::istream& libsvm, const PartitionSpec& spec,
                               const std::filesystem::path& out_dir);
RepartitionSummary write_shards(const Dataset& data, const PartitionSpec& spec,
                                const std::filesystem::path& out_dir);

/// Reads a shard file and the sibling labels.txt. Throws LoadError on any
/// format, checksum or invariant violation.
FeatureShard load_shard(const std::filesystem::path& shard_file);

std::vector<double> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<double>& labels);

/// internal id -> raw id
std::vector<std::uint64_t> read_idmap(const std::filesystem::path& path);
void write_idmap(const std::filesystem::path& path, const std::vector<std::uint64_t>& raw_ids);

} // namespace dglm
