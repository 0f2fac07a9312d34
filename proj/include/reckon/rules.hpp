#pragma once

// Support / confidence / lift, IDF, level-wise Apriori and FISinFIS-style
// mining of positive and negative association rules from frequent and
// infrequent itemsets, restricted to an IDF band.

#include "reckon/corpus.hpp"
#include "reckon/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace reckon {

/// Non-empty, sorted, duplicate-free set of items.
class Itemset {
public:
    Itemset() = default;  // empty placeholder; never returned by the miners
    explicit Itemset(std::vector<std::string> items) : items_(std::move(items)) {
        std::sort(items_.begin(), items_.end());
        items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
        if (items_.empty()) {
            throw PreconditionError("itemset must be non-empty");
        }
    }
    Itemset(std::initializer_list<std::string> items) : Itemset(std::vector<std::string>(items)) {}

    const std::vector<std::string>& items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }
    auto begin() const noexcept { return items_.begin(); }
    auto end() const noexcept { return items_.end(); }

    bool contains(const std::string& item) const { return std::binary_search(items_.begin(), items_.end(), item); }

    bool disjoint_with(const Itemset& other) const {
        auto a = items_.begin();
        auto b = other.items_.begin();
        while (a != items_.end() && b != other.items_.end()) {
            if (*a == *b) return false;
            if (*a < *b) ++a;
            else ++b;
        }
        return true;
    }

    /// True when every item is in the sorted `transaction_items`.
    bool subset_of(const std::vector<std::string>& transaction_items) const {
        return std::includes(transaction_items.begin(), transaction_items.end(), items_.begin(), items_.end());
    }

    std::string join(std::string_view sep = "+") const {
        std::string out;
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (i) out += sep;
            out += items_[i];
        }
        return out;
    }

    auto operator<=>(const Itemset&) const = default;
    bool operator==(const Itemset&) const = default;

private:
    std::vector<std::string> items_;
};

struct RuleMetrics {
    double support    = 0.0;
    double confidence = 0.0;
    double lift       = 0.0;
};

struct Rule {
    Itemset antecedent;
    Itemset consequent;
    bool neg_antecedent = false;
    bool neg_consequent = false;
    RuleMetrics metrics;

    bool positive() const noexcept { return !neg_antecedent && !neg_consequent; }
};

struct MiningConfig {
    double minsupp = 0.05;
    double mincnf  = 0.6;
    double idf_min = 0.1;
    std::optional<double> idf_max;  // unset: ln(|T|) - 0.1
    std::size_t max_itemset_size = 4;
    bool require_lift_gt1        = true;

    double resolved_idf_max(std::size_t n_transactions) const {
        return idf_max ? *idf_max : std::log(static_cast<double>(n_transactions)) - 0.1;
    }

    void validate(std::size_t n_transactions) const {
        if (!(minsupp > 0.0 && minsupp <= 1.0)) throw PreconditionError("minsupp must be in (0,1]");
        if (!(mincnf > 0.0 && mincnf <= 1.0)) throw PreconditionError("mincnf must be in (0,1]");
        if (!(idf_min >= 0.0)) throw PreconditionError("idf_min must be >= 0");
        if (!(resolved_idf_max(n_transactions) > idf_min)) throw PreconditionError("idf_max must exceed idf_min");
        if (max_itemset_size < 1) throw PreconditionError("max_itemset_size must be >= 1");
    }
};

struct FrequentItemset {
    Itemset itemset;
    double support = 0.0;
};

namespace detail {

inline void require_transactions(std::span<const Transaction> T) {
    if (T.empty()) {
        throw EmptyInputError("transaction list is empty");
    }
}

inline std::size_t count_containing(const Itemset& s, std::span<const Transaction> T) {
    std::size_t n = 0;
    for (const auto& t : T) {
        if (s.subset_of(t.items)) ++n;
    }
    return n;
}

/// Metrics for the rule whose antecedent event has `count_a` occurrences,
/// consequent event `count_b`, and both together `count_ab`, out of `n`.
inline RuleMetrics metrics_from_event_counts(std::size_t n, std::size_t count_a, std::size_t count_b,
                                             std::size_t count_ab) {
    if (count_a == 0) throw UndefinedError("confidence undefined: antecedent event has probability 0");
    if (count_b == 0) throw UndefinedError("lift undefined: consequent event has probability 0");
    const double total = static_cast<double>(n);
    RuleMetrics m;
    m.support    = static_cast<double>(count_ab) / total;
    m.confidence = static_cast<double>(count_ab) / static_cast<double>(count_a);
    m.lift       = m.confidence / (static_cast<double>(count_b) / total);
    return m;
}

/// Event counts for the four polarity combinations from the positive counts.
struct EventCounts {
    std::size_t a, b, ab;
};

inline EventCounts event_counts(std::size_t n, std::size_t n_a, std::size_t n_b, std::size_t n_ab, bool neg_a,
                                bool neg_b) {
    EventCounts e{};
    e.a = neg_a ? n - n_a : n_a;
    e.b = neg_b ? n - n_b : n_b;
    if (!neg_a && !neg_b) e.ab = n_ab;
    else if (!neg_a && neg_b) e.ab = n_a - n_ab;
    else if (neg_a && !neg_b) e.ab = n_b - n_ab;
    else e.ab = n - n_a - n_b + n_ab;
    return e;
}

using ItemIds = std::vector<std::uint32_t>;

/// Vertical (tid-bitset) view of a transaction list over a subset of items.
class BitsetIndex {
public:
    BitsetIndex(std::span<const Transaction> T, const std::vector<std::string>& items)
        : n_(T.size()), words_((T.size() + 63) / 64), names_(items) {
        std::unordered_map<std::string, std::uint32_t> id_of;
        for (std::uint32_t i = 0; i < names_.size(); ++i) {
            id_of.emplace(names_[i], i);
        }
        bits_.assign(names_.size() * words_, 0);
        for (std::size_t t = 0; t < T.size(); ++t) {
            for (const auto& item : T[t].items) {
                auto it = id_of.find(item);
                if (it != id_of.end()) {
                    bits_[it->second * words_ + t / 64] |= std::uint64_t{1} << (t % 64);
                }
            }
        }
    }

    std::size_t n_transactions() const noexcept { return n_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::vector<std::uint64_t> cover(const ItemIds& ids) const {
        std::vector<std::uint64_t> acc(words_, ~std::uint64_t{0});
        if (words_ > 0 && n_ % 64 != 0) acc.back() = (std::uint64_t{1} << (n_ % 64)) - 1;
        for (auto id : ids) {
            const auto* row = &bits_[id * words_];
            for (std::size_t w = 0; w < words_; ++w) acc[w] &= row[w];
        }
        return acc;
    }

    static std::size_t popcount(const std::vector<std::uint64_t>& v) {
        std::size_t c = 0;
        for (auto w : v) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    static std::size_t intersect_count(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
        std::size_t c = 0;
        for (std::size_t w = 0; w < a.size(); ++w) c += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
        return c;
    }

    std::size_t count(const ItemIds& ids) const { return popcount(cover(ids)); }

    Itemset to_itemset(const ItemIds& ids) const {
        std::vector<std::string> v;
        v.reserve(ids.size());
        for (auto id : ids) v.push_back(names_[id]);
        return Itemset(std::move(v));
    }

private:
    std::size_t n_;
    std::size_t words_;
    std::vector<std::string> names_;
    std::vector<std::uint64_t> bits_;
};

struct LevelwiseResult {
    std::vector<ItemIds> frequent;    // all levels, level order then lexicographic
    std::vector<ItemIds> infrequent;  // candidates that failed minsupp
};

/// Level-wise candidate generation with join + subset pruning. Item ids are
/// ordered consistently with item names so id order equals lexicographic order.
inline LevelwiseResult levelwise(const BitsetIndex& index, double minsupp, std::size_t max_size) {
    LevelwiseResult out;
    const double n = static_cast<double>(index.n_transactions());
    auto is_frequent = [&](std::size_t count) { return static_cast<double>(count) / n >= minsupp; };

    std::vector<ItemIds> level;
    for (std::uint32_t i = 0; i < index.names().size(); ++i) {
        ItemIds c{i};
        (is_frequent(index.count(c)) ? level : out.infrequent).push_back(c);
    }
    out.frequent.insert(out.frequent.end(), level.begin(), level.end());

    for (std::size_t k = 2; k <= max_size && level.size() >= 2; ++k) {
        std::set<ItemIds> prev(level.begin(), level.end());
        std::vector<ItemIds> next;
        for (std::size_t i = 0; i < level.size(); ++i) {
            for (std::size_t j = i + 1; j < level.size(); ++j) {
                if (!std::equal(level[i].begin(), level[i].end() - 1, level[j].begin())) {
                    break;  // level is sorted: later j cannot share the prefix either
                }
                ItemIds cand = level[i];
                cand.push_back(level[j].back());
                bool all_frequent = true;
                for (std::size_t drop = 0; drop + 2 < cand.size() && all_frequent; ++drop) {
                    ItemIds sub;
                    for (std::size_t p = 0; p < cand.size(); ++p) {
                        if (p != drop) sub.push_back(cand[p]);
                    }
                    all_frequent = prev.count(sub) > 0;
                }
                if (!all_frequent) {
                    continue;
                }
                (is_frequent(index.count(cand)) ? next : out.infrequent).push_back(std::move(cand));
            }
        }
        std::sort(next.begin(), next.end());
        out.frequent.insert(out.frequent.end(), next.begin(), next.end());
        level = std::move(next);
    }
    return out;
}

inline std::vector<std::string> distinct_items(std::span<const Transaction> T) {
    std::set<std::string> all;
    for (const auto& t : T) all.insert(t.items.begin(), t.items.end());
    return {all.begin(), all.end()};
}

}  // namespace detail

/// Fraction of transactions containing every item of `s`.
inline double support(const Itemset& s, std::span<const Transaction> T) {
    detail::require_transactions(T);
    return static_cast<double>(detail::count_containing(s, T)) / static_cast<double>(T.size());
}

/// Support, confidence and lift of A => B where each side is the event
/// "itemset contained in the transaction" or its complement.
inline RuleMetrics rule_metrics(const Itemset& A, const Itemset& B, bool neg_a, bool neg_b,
                                std::span<const Transaction> T) {
    detail::require_transactions(T);
    if (!A.disjoint_with(B)) {
        throw PreconditionError("antecedent and consequent must be disjoint");
    }
    std::size_t n_a = 0, n_b = 0, n_ab = 0;
    for (const auto& t : T) {
        const bool a = A.subset_of(t.items);
        const bool b = B.subset_of(t.items);
        n_a += a;
        n_b += b;
        n_ab += a && b;
    }
    const auto e = detail::event_counts(T.size(), n_a, n_b, n_ab, neg_a, neg_b);
    return detail::metrics_from_event_counts(T.size(), e.a, e.b, e.ab);
}

/// Natural-log inverse document frequency ln(|T| / df(item)).
inline double idf(const std::string& item, std::span<const Transaction> T) {
    detail::require_transactions(T);
    std::size_t df = 0;
    for (const auto& t : T) {
        df += std::binary_search(t.items.begin(), t.items.end(), item);
    }
    if (df == 0) {
        throw UndefinedError("idf undefined: item '" + item + "' occurs in no transaction");
    }
    return std::log(static_cast<double>(T.size()) / static_cast<double>(df));
}

/// Every itemset of size <= max_size with support >= minsupp, level by level.
inline std::vector<FrequentItemset> apriori_frequent(std::span<const Transaction> T, double minsupp,
                                                     std::size_t max_size) {
    detail::require_transactions(T);
    const detail::BitsetIndex index(T, detail::distinct_items(T));
    const auto lw = detail::levelwise(index, minsupp, max_size);
    std::vector<FrequentItemset> out;
    out.reserve(lw.frequent.size());
    for (const auto& ids : lw.frequent) {
        out.push_back({index.to_itemset(ids),
                       static_cast<double>(index.count(ids)) / static_cast<double>(T.size())});
    }
    return out;
}

/// Total order used for mined rule lists: lift desc, confidence desc, then
/// antecedent, consequent and polarity flags ascending.
inline bool rule_order(const Rule& x, const Rule& y) {
    if (x.metrics.lift != y.metrics.lift) return x.metrics.lift > y.metrics.lift;
    if (x.metrics.confidence != y.metrics.confidence) return x.metrics.confidence > y.metrics.confidence;
    if (x.antecedent != y.antecedent) return x.antecedent < y.antecedent;
    if (x.consequent != y.consequent) return x.consequent < y.consequent;
    if (x.neg_antecedent != y.neg_antecedent) return !x.neg_antecedent;
    return !x.neg_consequent && y.neg_consequent;
}

struct MiningReport {
    std::vector<Rule> rules;
    std::vector<std::string> excluded_items;  // outside the IDF band
    std::size_t n_frequent   = 0;
    std::size_t n_infrequent = 0;
    double idf_min = 0.0;
    double idf_max = 0.0;
};

/// Positive and negative rules from frequent and infrequent itemsets.
///
/// Items outside [idf_min, idf_max] are dropped first; |T| is unchanged.
/// The remaining items are mined level-wise: candidates reaching minsupp are
/// frequent, the rest are infrequent. Every disjoint pair (A, B) of mined
/// itemsets with |A| + |B| <= max_itemset_size is then tested in the four
/// forms A=>B, A=>!B, !A=>B, !A=>!B; a form is kept when its support and
/// confidence reach the thresholds and (if required) its lift exceeds 1.
inline MiningReport fisinfis_mine_report(std::span<const Transaction> T, const MiningConfig& config) {
    detail::require_transactions(T);
    config.validate(T.size());

    MiningReport report;
    report.idf_min = config.idf_min;
    report.idf_max = config.resolved_idf_max(T.size());

    std::vector<std::string> band;
    for (const auto& item : detail::distinct_items(T)) {
        const double v = idf(item, T);
        if (v < report.idf_min || v > report.idf_max) {
            report.excluded_items.push_back(item);
        } else {
            band.push_back(item);
        }
    }

    const detail::BitsetIndex index(T, band);
    const std::size_t max_side = config.max_itemset_size > 1 ? config.max_itemset_size - 1 : 0;
    const auto lw = detail::levelwise(index, config.minsupp, max_side);
    report.n_frequent   = lw.frequent.size();
    report.n_infrequent = lw.infrequent.size();

    struct Mined {
        detail::ItemIds ids;
        std::vector<std::uint64_t> cover;
        std::size_t count;
        bool frequent;
    };
    std::vector<Mined> mined;
    for (const auto* group : {&lw.frequent, &lw.infrequent}) {
        for (const auto& ids : *group) {
            auto cover = index.cover(ids);
            const auto count = detail::BitsetIndex::popcount(cover);
            mined.push_back({ids, std::move(cover), count, group == &lw.frequent});
        }
    }

    const std::size_t n = T.size();
    auto passes = [&](const RuleMetrics& m) {
        return m.support >= config.minsupp && m.confidence >= config.mincnf &&
               (!config.require_lift_gt1 || m.lift > 1.0);
    };

    for (const auto& a : mined) {
        for (const auto& b : mined) {
            if (a.ids.size() + b.ids.size() > config.max_itemset_size) continue;
            bool disjoint = true;
            for (auto id : a.ids) {
                if (std::binary_search(b.ids.begin(), b.ids.end(), id)) {
                    disjoint = false;
                    break;
                }
            }
            if (!disjoint) continue;

            const auto n_ab = detail::BitsetIndex::intersect_count(a.cover, b.cover);
            for (int form = 0; form < 4; ++form) {
                const bool neg_a = form & 2;
                const bool neg_b = form & 1;
                const auto e     = detail::event_counts(n, a.count, b.count, n_ab, neg_a, neg_b);
                if (e.a == 0 || e.b == 0) continue;
                const auto m = detail::metrics_from_event_counts(n, e.a, e.b, e.ab);
                if (passes(m)) {
                    report.rules.push_back({index.to_itemset(a.ids), index.to_itemset(b.ids), neg_a, neg_b, m});
                }
            }
        }
    }
    std::sort(report.rules.begin(), report.rules.end(), rule_order);
    return report;
}

inline std::vector<Rule> fisinfis_mine(std::span<const Transaction> T, const MiningConfig& config) {
    return fisinfis_mine_report(T, config).rules;
}

}  // namespace reckon
