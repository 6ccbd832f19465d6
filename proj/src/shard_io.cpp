#include "dglm/shard_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dglm/error.hpp"
#include "dglm/text_format.hpp"

namespace fs = std::filesystem;

namespace dglm {

fs::path shard_path(const fs::path& dir, int node)
{
    return dir / ("shard_" + std::to_string(node) + ".txt");
}

fs::path labels_path(const fs::path& dir) { return dir / "labels.txt"; }
fs::path idmap_path(const fs::path& dir) { return dir / "idmap.txt"; }

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) noexcept
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot read " + path.string());
    return in;
}

std::string column_line(const SparseColumn& c)
{
    std::string line = std::to_string(c.feature_id);
    for (std::size_t e = 0; e < c.rows.size(); ++e) {
        line += ' ';
        line += std::to_string(c.rows[e]);
        line += ':';
        line += format_double(c.values[e]);
    }
    return line;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_shard(const fs::path& path, const FeatureShard& s)
{
    std::string body;
    std::uint64_t sum = fnv1a64("");
    for (const auto& c : s.columns) {
        const std::string line = column_line(c) + '\n';
        sum = fnv1a64(line, sum);
        body += line;
    }
    auto out = open_out(path);
    out << "dglm-shard 1\n"
        << "node " << s.node_id << '\n'
        << "nodes " << s.world_size << '\n'
        << "examples " << s.n << '\n'
        << "features " << s.p << '\n'
        << "seed " << s.seed << '\n'
        << "columns " << s.columns.size() << '\n'
        << "checksum " << hex64(sum) << '\n'
        << body;
    if (!out) throw LoadError("write failed: " + path.string());
}

std::uint64_t header_field(std::istream& in, const std::string& key, const fs::path& path)
{
    std::string line;
    if (!std::getline(in, line)) throw LoadError(path.string() + ": truncated header");
    std::istringstream ss(line);
    std::string k, v, extra;
    ss >> k >> v;
    if (k != key || (ss >> extra)) throw LoadError(path.string() + ": expected '" + key + "' header");
    const auto parsed = parse_u64(v);
    if (!parsed) throw LoadError(path.string() + ": bad value for '" + key + "'");
    return *parsed;
}

} // namespace

RepartitionSummary write_shards(const Dataset& data, const PartitionSpec& spec, const fs::path& out_dir)
{
    fs::create_directories(out_dir);
    const auto shards = build_shards(data, spec);
    RepartitionSummary summary;
    summary.examples = data.n();
    summary.features = data.p();
    for (const auto& s : shards) {
        write_shard(shard_path(out_dir, s.node_id), s);
        summary.columns_per_node.push_back(s.columns.size());
    }
    write_labels(labels_path(out_dir), data.labels);
    write_idmap(idmap_path(out_dir), data.raw_ids);
    return summary;
}

RepartitionSummary repartition(std::istream& libsvm, const PartitionSpec& spec, const fs::path& out_dir)
{
    // Single in-memory transpose; fine at desk scale.
    const Dataset data = read_libsvm(libsvm);
    return write_shards(data, spec, out_dir);
}

FeatureShard load_shard(const fs::path& shard_file)
{
    auto in = open_in(shard_file);
    std::string magic;
    if (!std::getline(in, magic) || magic != "dglm-shard 1") {
        throw LoadError(shard_file.string() + ": not a shard file");
    }
    FeatureShard s;
    s.node_id = static_cast<int>(header_field(in, "node", shard_file));
    s.world_size = static_cast<int>(header_field(in, "nodes", shard_file));
    s.n = header_field(in, "examples", shard_file);
    s.p = header_field(in, "features", shard_file);
    s.seed = header_field(in, "seed", shard_file);
    const std::uint64_t column_count = header_field(in, "columns", shard_file);

    std::string line;
    if (!std::getline(in, line) || line.rfind("checksum ", 0) != 0) {
        throw LoadError(shard_file.string() + ": missing checksum");
    }
    const std::string expected = line.substr(9);

    std::uint64_t sum = fnv1a64("");
    std::size_t line_no = 9;
    while (std::getline(in, line)) {
        ++line_no;
        sum = fnv1a64(line + '\n', sum);
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        const auto j = parse_u64(tok);
        if (!j) throw LoadError(shard_file.string() + ":" + std::to_string(line_no) + ": bad feature id");
        SparseColumn c;
        c.feature_id = *j;
        while (ss >> tok) {
            const auto colon = tok.find(':');
            const auto i = colon == std::string::npos ? std::nullopt : parse_u64(tok.substr(0, colon));
            const auto v = colon == std::string::npos ? std::nullopt : parse_double(tok.substr(colon + 1));
            if (!i || !v || *i > 0xFFFFFFFFull) {
                throw LoadError(shard_file.string() + ":" + std::to_string(line_no) + ": bad entry '" + tok + "'");
            }
            c.rows.push_back(static_cast<std::uint32_t>(*i));
            c.values.push_back(*v);
        }
        s.columns.push_back(std::move(c));
    }
    if (hex64(sum) != expected) throw LoadError(shard_file.string() + ": checksum mismatch");
    if (s.columns.size() != column_count) throw LoadError(shard_file.string() + ": column count mismatch");

    s.labels = read_labels(labels_path(shard_file.parent_path()));
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw LoadError(shard_file.string() + ": " + e.what());
    }
    return s;
}

std::vector<double> read_labels(const fs::path& path)
{
    auto in = open_in(path);
    std::vector<double> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto v = parse_double(line);
        if (!v) throw LoadError(path.string() + ":" + std::to_string(line_no) + ": bad label");
        labels.push_back(*v);
    }
    return labels;
}

void write_labels(const fs::path& path, const std::vector<double>& labels)
{
    auto out = open_out(path);
    for (double y : labels) out << format_double(y) << '\n';
    if (!out) throw LoadError("write failed: " + path.string());
}

std::vector<std::uint64_t> read_idmap(const fs::path& path)
{
    auto in = open_in(path);
    std::vector<std::uint64_t> raw;
    std::uint64_t internal = 0, id = 0;
    while (in >> internal >> id) {
        if (internal != raw.size()) throw LoadError(path.string() + ": id map out of order");
        raw.push_back(id);
    }
    if (!in.eof()) throw LoadError(path.string() + ": malformed id map");
    return raw;
}

void write_idmap(const fs::path& path, const std::vector<std::uint64_t>& raw_ids)
{
    auto out = open_out(path);
    for (std::size_t k = 0; k < raw_ids.size(); ++k) out << k << ' ' << raw_ids[k] << '\n';
    if (!out) throw LoadError("write failed: " + path.string());
}

} // namespace dglm
