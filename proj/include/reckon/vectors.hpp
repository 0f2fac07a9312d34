#pragma once

// Term index and sparse TF-IDF weights (raw count x ln(N / df)).

#include "reckon/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace reckon {

struct Document {
    std::string id;
    std::map<std::string, std::size_t> counts;
};

inline Document make_document(std::string id, const std::vector<std::string>& tokens) {
    Document d{std::move(id), {}};
    for (const auto& t : tokens) {
        ++d.counts[t];
    }
    return d;
}

class TermIndex {
public:
    TermIndex() = default;

    explicit TermIndex(std::vector<std::string> terms) : terms_(std::move(terms)) {
        std::sort(terms_.begin(), terms_.end());
        terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            positions_.emplace(terms_[i], i);
        }
    }

    const std::vector<std::string>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }

    std::size_t position(const std::string& term) const {
        auto it = positions_.find(term);
        if (it == positions_.end()) {
            throw PreconditionError("term '" + term + "' is not in the index");
        }
        return it->second;
    }

    bool contains(const std::string& term) const { return positions_.count(term) > 0; }

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::size_t> positions_;
};

struct SparseEntry {
    std::size_t row;
    std::size_t col;
    double weight;
};

/// Coordinate-format matrix with entries sorted by (row, col) and no stored zeros.
struct TfIdfMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<SparseEntry> entries;
    std::vector<std::size_t> row_start;  // n_rows + 1 offsets into `entries`

    double at(std::size_t row, std::size_t col) const {
        auto first = entries.begin() + static_cast<std::ptrdiff_t>(row_start[row]);
        auto last  = entries.begin() + static_cast<std::ptrdiff_t>(row_start[row + 1]);
        auto it    = std::lower_bound(first, last, col, [](const SparseEntry& e, std::size_t c) { return e.col < c; });
        return (it != last && it->col == col) ? it->weight : 0.0;
    }
};

inline TermIndex build_term_index(const std::vector<Document>& docs) {
    std::set<std::string> terms;
    for (const auto& d : docs) {
        for (const auto& [term, count] : d.counts) {
            if (count > 0) terms.insert(term);
        }
    }
    if (terms.empty()) {
        throw EmptyInputError("no terms in any document");
    }
    return TermIndex(std::vector<std::string>(terms.begin(), terms.end()));
}

inline TfIdfMatrix tfidf_matrix(const std::vector<Document>& docs, const TermIndex& index) {
    std::vector<std::size_t> df(index.size(), 0);
    for (const auto& d : docs) {
        for (const auto& [term, count] : d.counts) {
            if (!index.contains(term)) {
                throw PreconditionError("term '" + term + "' missing from index");
            }
            if (count > 0) ++df[index.position(term)];
        }
    }

    TfIdfMatrix m;
    m.n_rows = docs.size();
    m.n_cols = index.size();
    m.row_start.reserve(docs.size() + 1);
    const double n = static_cast<double>(docs.size());
    for (std::size_t r = 0; r < docs.size(); ++r) {
        m.row_start.push_back(m.entries.size());
        std::vector<SparseEntry> row;
        for (const auto& [term, count] : docs[r].counts) {
            const auto col = index.position(term);
            if (count == 0 || df[col] == docs.size()) continue;
            const double w = static_cast<double>(count) * std::log(n / static_cast<double>(df[col]));
            if (w != 0.0) row.push_back({r, col, w});
        }
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.col < b.col; });
        m.entries.insert(m.entries.end(), row.begin(), row.end());
    }
    m.row_start.push_back(m.entries.size());
    return m;
}

/// Header `n_rows n_cols nnz`, then `row col weight` lines, 0-based.
inline void write_coo(std::ostream& out, const TfIdfMatrix& m) {
    out << m.n_rows << ' ' << m.n_cols << ' ' << m.entries.size() << '\n';
    for (const auto& e : m.entries) {
        out << fmt::format("{} {} {:.17g}\n", e.row, e.col, e.weight);
    }
}

}  // namespace reckon
