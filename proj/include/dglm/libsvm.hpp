#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace dglm {

struct LibsvmEntry {
    std::uint64_t id = 0;
    double value = 0.0;

    bool operator==(const LibsvmEntry&) const = default;
};

/// One example as it appears in the file: ids are the raw (pre-normalization)
/// ids, sorted ascending; explicit zeros are dropped.
struct LibsvmRecord {
    double label = 0.0;
    std::vector<LibsvmEntry> entries;
};

/// Throws ParseError (carrying `line_no`) on malformed tokens, duplicate ids
/// or non-finite numbers. Text after '#' is ignored.
LibsvmRecord parse_libsvm_line(std::string_view line, std::size_t line_no = 1);

/// Example-major data with raw ids remapped to dense 0-based internal ids.
struct Dataset {
    std::vector<double> labels;
    std::vector<std::vector<LibsvmEntry>> rows;  // entry ids are internal ids
    std::vector<std::uint64_t> raw_ids;          // internal id -> raw id, ascending

    std::size_t n() const noexcept { return labels.size(); }
    std::size_t p() const noexcept { return raw_ids.size(); }
};

/// Reads every non-blank line. Internal id k is the k-th smallest raw id
/// observed, which also maps 1-based files onto 0-based ids.
Dataset read_libsvm(std::istream& in);

/// Builds a Dataset from a dense row-major matrix, skipping zeros. Raw ids are 0..p-1.
Dataset dataset_from_dense(std::size_t n, std::size_t p, const std::vector<double>& x_row_major,
                           const std::vector<double>& labels);

} // namespace dglm
