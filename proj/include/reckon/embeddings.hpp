#pragma once

// Sentence-embedding matrices produced by an external encoder.
//
// Text format: first line `n_rows n_cols`, then n_rows lines of n_cols
// whitespace-separated decimals. Binary format: two little-endian uint64
// (n_rows, n_cols) followed by n_rows * n_cols little-endian float32,
// row-major. Rows must all have the same length; padding or truncating
// variable-length token sequences is the producer's job.

#include "reckon/corpus.hpp"
#include "reckon/error.hpp"
#include "reckon/matrix.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace reckon {

static_assert(std::endian::native == std::endian::little, "binary I/O assumes a little-endian host");

enum class EmbeddingFormat { automatic, text, binary };

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
    const auto* first = tok.data();
    const auto* last  = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const auto start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

inline RowMatrix load_embeddings_text(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        header = split_ws(line);
    }
    std::size_t rows = 0, cols = 0;
    if (header.size() != 2 || std::from_chars(header[0].data(), header[0].data() + header[0].size(), rows).ec != std::errc{} ||
        std::from_chars(header[1].data(), header[1].data() + header[1].size(), cols).ec != std::errc{}) {
        throw ParseError("header must be 'n_rows n_cols'", line_no);
    }
    RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::size_t r = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (r >= rows || toks.size() != cols) {
            throw ParseError("shape mismatch: header declares " + std::to_string(rows) + "x" + std::to_string(cols),
                             line_no);
        }
        for (std::size_t c = 0; c < cols; ++c) {
            double v = 0.0;
            if (!parse_double(toks[c], v)) {
                throw ParseError("invalid number '" + std::string(toks[c]) + "'", line_no);
            }
            if (!std::isfinite(v)) {
                throw NonFiniteError("non-finite value at line " + std::to_string(line_no));
            }
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
        ++r;
    }
    if (r != rows) {
        throw ParseError("shape mismatch: header declares " + std::to_string(rows) + " rows, found " +
                             std::to_string(r),
                         0);
    }
    return m;
}

inline RowMatrix load_embeddings_binary(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 16) {
        throw ParseError("binary embedding file shorter than its 16-byte header", 0);
    }
    std::uint64_t rows = 0, cols = 0;
    std::memcpy(&rows, bytes.data(), 8);
    std::memcpy(&cols, bytes.data() + 8, 8);
    const auto expected = 16 + rows * cols * 4;
    if (cols != 0 && rows > (bytes.size() / 4) / cols) {
        throw ParseError("shape mismatch: payload too short for declared shape", 0);
    }
    if (bytes.size() != expected) {
        throw ParseError("shape mismatch: expected " + std::to_string(expected) + " bytes, found " +
                             std::to_string(bytes.size()),
                         0);
    }
    RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const char* p = bytes.data() + 16;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        float f = 0.0f;
        std::memcpy(&f, p + 4 * i, 4);
        if (!std::isfinite(f)) {
            throw NonFiniteError("non-finite value at element " + std::to_string(i));
        }
        m.data()[i] = static_cast<double>(f);
    }
    return m;
}

}  // namespace detail

inline EmbeddingFormat embedding_format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".bin" || ext == ".f32") ? EmbeddingFormat::binary : EmbeddingFormat::text;
}

inline RowMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format = EmbeddingFormat::automatic) {
    if (!std::filesystem::exists(path)) {
        throw Error("embedding file not found: '" + path.string() + "'");
    }
    if (format == EmbeddingFormat::automatic) format = embedding_format_from_path(path);
    return format == EmbeddingFormat::binary ? detail::load_embeddings_binary(path) : detail::load_embeddings_text(path);
}

/// Companion id list, one id per line; must have exactly `expected_rows` entries.
inline std::vector<std::string> load_embedding_ids(const std::filesystem::path& path, std::size_t expected_rows) {
    std::istringstream in(detail::read_file(path));
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        auto id = detail::trim(line);
        if (!id.empty()) ids.push_back(std::move(id));
    }
    if (ids.size() != expected_rows) {
        throw ParseError("id file has " + std::to_string(ids.size()) + " ids for " + std::to_string(expected_rows) +
                             " embedding rows",
                         0);
    }
    return ids;
}

inline void write_embeddings_text(const std::filesystem::path& path, const RowMatrix& m) {
    std::ofstream out(path);
    out << m.rows() << ' ' << m.cols() << '\n';
    out.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << (c ? " " : "") << m(r, c);
        }
        out << '\n';
    }
}

inline void write_embeddings_binary(const std::filesystem::path& path, const RowMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    const std::uint64_t rows = static_cast<std::uint64_t>(m.rows()), cols = static_cast<std::uint64_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const float f = static_cast<float>(m.data()[i]);
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
}

}  // namespace reckon
