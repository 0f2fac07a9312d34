#include "reckon/kmedoids.hpp"
#include "reckon/rules.hpp"
#include "reckon/vectors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace reckon;

namespace {

Document doc(const std::string& id, std::map<std::string, std::size_t> counts) { return {id, std::move(counts)}; }

}  // namespace

TEST(TermIndex, SortedPositions) {
    const auto idx = build_term_index({doc("1", {{"a", 1}}), doc("2", {{"b", 2}})});
    EXPECT_EQ(idx.terms(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(idx.position("a"), 0u);
    EXPECT_EQ(idx.position("b"), 1u);
    EXPECT_THROW(idx.position("c"), PreconditionError);
}

TEST(TermIndex, OrderIndependent) {
    const auto x = build_term_index({doc("1", {{"a", 1}}), doc("2", {{"b", 1}})});
    const auto y = build_term_index({doc("1", {{"b", 1}}), doc("2", {{"a", 1}})});
    EXPECT_EQ(x.terms(), y.terms());
}

TEST(TermIndex, SingleDocAndEmpty) {
    EXPECT_EQ(build_term_index({doc("1", {{"x", 3}})}).size(), 1u);
    EXPECT_THROW(build_term_index({doc("1", {})}), EmptyInputError);
}

TEST(TfIdf, HandComputedWeights) {
    const std::vector<Document> docs{doc("d1", {{"cade", 1}, {"scala", 1}}), doc("d2", {{"cade", 1}, {"martello", 1}})};
    const auto idx = build_term_index(docs);
    const auto m   = tfidf_matrix(docs, idx);
    EXPECT_NEAR(m.at(0, idx.position("scala")), std::log(2.0), 1e-12);
    EXPECT_NEAR(m.at(0, idx.position("scala")), 0.693147, 1e-6);
    EXPECT_EQ(m.at(0, idx.position("cade")), 0.0);
    EXPECT_EQ(m.entries.size(), 2u);
}

TEST(TfIdf, CountScalesWeight) {
    const std::vector<Document> docs{doc("d1", {{"u", 2}}), doc("d2", {{"v", 1}})};
    const auto idx = build_term_index(docs);
    const auto m   = tfidf_matrix(docs, idx);
    EXPECT_NEAR(m.at(0, idx.position("u")), 2.0 * std::log(2.0), 1e-12);
    EXPECT_NEAR(m.at(0, idx.position("u")), 1.386294, 1e-6);
}

TEST(TfIdf, SingleDocAllZero) {
    const std::vector<Document> docs{doc("d1", {{"u", 2}, {"v", 1}})};
    const auto m = tfidf_matrix(docs, build_term_index(docs));
    EXPECT_TRUE(m.entries.empty());
    EXPECT_EQ(m.at(0, 0), 0.0);
}

TEST(TfIdf, UnknownTermRejected) {
    const auto idx = build_term_index({doc("1", {{"a", 1}})});
    EXPECT_THROW(tfidf_matrix({doc("1", {{"zz", 1}})}, idx), PreconditionError);
}

TEST(TfIdf, ConsistentWithRuleIdf) {
    std::mt19937_64 rng(17);
    std::vector<Document> docs;
    std::vector<Transaction> T;
    for (int d = 0; d < 30; ++d) {
        std::set<std::string> items;
        for (int i = 0; i < 6; ++i) items.insert("w" + std::to_string(rng() % 10));
        Document dd{std::to_string(d), {}};
        for (const auto& it : items) dd.counts[it] = 1;
        docs.push_back(dd);
        T.push_back({dd.id, {items.begin(), items.end()}});
    }
    const auto idx = build_term_index(docs);
    const auto m   = tfidf_matrix(docs, idx);
    for (std::size_t r = 0; r < docs.size(); ++r) {
        for (const auto& [term, count] : docs[r].counts) {
            EXPECT_NEAR(m.at(r, idx.position(term)), static_cast<double>(count) * idf(term, T), 1e-12);
        }
    }
}

TEST(TfIdf, RowPermutationEquivariance) {
    std::mt19937_64 rng(23);
    std::vector<Document> docs;
    for (int d = 0; d < 12; ++d) {
        Document dd{std::to_string(d), {}};
        for (int i = 0; i < 5; ++i) dd.counts["t" + std::to_string(rng() % 8)] += 1;
        docs.push_back(dd);
    }
    std::vector<std::size_t> perm(docs.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Document> shuffled;
    for (auto p : perm) shuffled.push_back(docs[p]);

    const auto idx = build_term_index(docs);
    ASSERT_EQ(build_term_index(shuffled).terms(), idx.terms());
    const auto a = tfidf_matrix(docs, idx);
    const auto b = tfidf_matrix(shuffled, idx);
    for (std::size_t r = 0; r < docs.size(); ++r) {
        for (std::size_t c = 0; c < idx.size(); ++c) EXPECT_EQ(b.at(r, c), a.at(perm[r], c));
    }
}

TEST(TfIdf, StoredEntriesAreExactlyNonzeros) {
    std::mt19937_64 rng(29);
    std::vector<Document> docs;
    for (int d = 0; d < 15; ++d) {
        Document dd{std::to_string(d), {}};
        for (int i = 0; i < 4; ++i) dd.counts["t" + std::to_string(rng() % 6)] += 1;
        dd.counts["everywhere"] = 1;
        docs.push_back(dd);
    }
    const auto idx = build_term_index(docs);
    const auto m   = tfidf_matrix(docs, idx);
    std::size_t nonzero = 0;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        for (std::size_t c = 0; c < m.n_cols; ++c) nonzero += m.at(r, c) != 0.0;
    }
    EXPECT_EQ(nonzero, m.entries.size());
    for (const auto& e : m.entries) EXPECT_NE(e.weight, 0.0);
    for (std::size_t i = 1; i < m.entries.size(); ++i) {
        const auto& p = m.entries[i - 1];
        const auto& q = m.entries[i];
        EXPECT_TRUE(p.row < q.row || (p.row == q.row && p.col < q.col));
    }
}

TEST(TfIdf, CooExport) {
    const std::vector<Document> docs{doc("d1", {{"u", 2}}), doc("d2", {{"v", 1}})};
    std::ostringstream out;
    write_coo(out, tfidf_matrix(docs, build_term_index(docs)));
    EXPECT_EQ(out.str(), "2 2 2\n0 0 1.3862943611198906\n1 1 0.69314718055994529\n");
}

TEST(TfIdf, SparseDistancesMatchDense) {
    std::mt19937_64 rng(31);
    std::vector<Document> docs;
    for (int d = 0; d < 10; ++d) {
        Document dd{std::to_string(d), {}};
        for (int i = 0; i < 4; ++i) dd.counts["t" + std::to_string(rng() % 7)] += 1;
        docs.push_back(dd);
    }
    const auto idx = build_term_index(docs);
    const auto m   = tfidf_matrix(docs, idx);
    RowMatrix dense = RowMatrix::Zero(static_cast<Eigen::Index>(m.n_rows), static_cast<Eigen::Index>(m.n_cols));
    for (const auto& e : m.entries) dense(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.weight;
    for (auto metric : {Metric::cosine, Metric::euclidean}) {
        const auto a = distance_matrix(m, metric);
        const auto b = distance_matrix(dense, metric);
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a(i, j), b(i, j), 1e-12);
        }
    }
}
