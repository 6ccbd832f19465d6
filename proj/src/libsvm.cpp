#include "dglm/libsvm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <string>
#include <unordered_map>

#include "dglm/error.hpp"
#include "dglm/text_format.hpp"

namespace dglm {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

std::string_view strip_comment(std::string_view line)
{
    const auto hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
}

bool blank(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), is_space);
}

} // namespace

LibsvmRecord parse_libsvm_line(std::string_view line, std::size_t line_no)
{
    line = strip_comment(line);
    LibsvmRecord rec;
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
        while (pos < line.size() && is_space(line[pos])) ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && !is_space(line[pos])) ++pos;
        return line.substr(start, pos - start);
    };

    const std::string_view label_tok = next_token();
    if (label_tok.empty()) throw ParseError(line_no, "empty line");
    const auto label = parse_double(label_tok);
    if (!label || !std::isfinite(*label)) {
        throw ParseError(line_no, "bad label '" + std::string(label_tok) + "'");
    }
    rec.label = *label;

    for (std::string_view tok = next_token(); !tok.empty(); tok = next_token()) {
        const auto colon = tok.find(':');
        if (colon == std::string_view::npos) {
            throw ParseError(line_no, "expected id:value, got '" + std::string(tok) + "'");
        }
        const auto id = parse_u64(tok.substr(0, colon));
        const auto value = parse_double(tok.substr(colon + 1));
        if (!id || !value) throw ParseError(line_no, "malformed token '" + std::string(tok) + "'");
        if (!std::isfinite(*value)) throw ParseError(line_no, "non-finite value in '" + std::string(tok) + "'");
        rec.entries.push_back({*id, *value});
    }

    std::stable_sort(rec.entries.begin(), rec.entries.end(),
                     [](const LibsvmEntry& a, const LibsvmEntry& b) { return a.id < b.id; });
    for (std::size_t k = 1; k < rec.entries.size(); ++k) {
        if (rec.entries[k].id == rec.entries[k - 1].id) {
            throw ParseError(line_no, "duplicate feature id " + std::to_string(rec.entries[k].id));
        }
    }
    std::erase_if(rec.entries, [](const LibsvmEntry& e) { return e.value == 0.0; });
    return rec;
}

Dataset read_libsvm(std::istream& in)
{
    std::vector<LibsvmRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(strip_comment(line))) continue;
        records.push_back(parse_libsvm_line(line, line_no));
    }

    Dataset ds;
    for (const auto& r : records) {
        for (const auto& e : r.entries) ds.raw_ids.push_back(e.id);
    }
    std::sort(ds.raw_ids.begin(), ds.raw_ids.end());
    ds.raw_ids.erase(std::unique(ds.raw_ids.begin(), ds.raw_ids.end()), ds.raw_ids.end());
    std::unordered_map<std::uint64_t, std::uint64_t> internal;
    internal.reserve(ds.raw_ids.size());
    for (std::size_t k = 0; k < ds.raw_ids.size(); ++k) internal.emplace(ds.raw_ids[k], k);

    ds.labels.reserve(records.size());
    ds.rows.reserve(records.size());
    for (auto& r : records) {
        ds.labels.push_back(r.label);
        for (auto& e : r.entries) e.id = internal.at(e.id);
        ds.rows.push_back(std::move(r.entries));
    }
    return ds;
}

Dataset dataset_from_dense(std::size_t n, std::size_t p, const std::vector<double>& x_row_major,
                           const std::vector<double>& labels)
{
    Dataset ds;
    ds.labels = labels;
    ds.rows.resize(n);
    ds.raw_ids.resize(p);
    for (std::size_t j = 0; j < p; ++j) ds.raw_ids[j] = j;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double v = x_row_major[i * p + j];
            if (v != 0.0) ds.rows[i].push_back({j, v});
        }
    }
    return ds;
}

} // namespace dglm
