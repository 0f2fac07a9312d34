#pragma once

// Brute-force rule enumeration straight from the definitions: every event
// count is a scan over the transactions, every candidate itemset is a
// bitmask over the IDF-band items.

#include "reckon/corpus.hpp"
#include "reckon/rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

using reckon::Transaction;

struct RuleKey {
    std::vector<std::string> a, b;
    bool neg_a, neg_b;
    auto operator<=>(const RuleKey&) const = default;
};

struct Metrics {
    double support, confidence, lift;
};

inline bool contains_all(const Transaction& t, const std::vector<std::string>& s) {
    for (const auto& x : s) {
        if (std::find(t.items.begin(), t.items.end(), x) == t.items.end()) return false;
    }
    return true;
}

inline std::size_t count_containing(const std::vector<Transaction>& T, const std::vector<std::string>& s) {
    std::size_t c = 0;
    for (const auto& t : T) c += contains_all(t, s);
    return c;
}

inline std::vector<std::string> band_items(const std::vector<Transaction>& T, double lo, double hi) {
    std::set<std::string> all;
    for (const auto& t : T) all.insert(t.items.begin(), t.items.end());
    std::vector<std::string> out;
    for (const auto& item : all) {
        const double v = std::log(static_cast<double>(T.size()) / static_cast<double>(count_containing(T, {item})));
        if (v >= lo && v <= hi) out.push_back(item);
    }
    return out;
}

inline std::vector<std::string> from_mask(const std::vector<std::string>& items, std::uint32_t mask) {
    std::vector<std::string> s;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (mask & (1u << i)) s.push_back(items[i]);
    }
    return s;
}

/// Itemsets a level-wise miner reaches: singletons of band items, and larger
/// sets whose proper non-empty subsets are all frequent.
inline std::vector<std::uint32_t> mined_masks(const std::vector<Transaction>& T, const std::vector<std::string>& items,
                                              double minsupp, std::size_t max_size) {
    const std::uint32_t full = items.empty() ? 0 : ((1u << items.size()) - 1);
    std::vector<char> frequent(full + 1, 0);
    for (std::uint32_t m = 1; m <= full; ++m) {
        frequent[m] = static_cast<double>(count_containing(T, from_mask(items, m))) / static_cast<double>(T.size()) >= minsupp;
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t m = 1; m <= full; ++m) {
        const auto size = static_cast<std::size_t>(std::popcount(m));
        if (size > max_size) continue;
        bool ok = true;
        for (std::uint32_t sub = (m - 1) & m; sub > 0; sub = (sub - 1) & m) {
            if (!frequent[sub]) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(m);
    }
    return out;
}

inline std::map<RuleKey, Metrics> enumerate_rules(const std::vector<Transaction>& T, const reckon::MiningConfig& c) {
    const double n   = static_cast<double>(T.size());
    const auto items = band_items(T, c.idf_min, c.resolved_idf_max(T.size()));
    const auto max_side = c.max_itemset_size > 1 ? c.max_itemset_size - 1 : 0;
    const auto mined = mined_masks(T, items, c.minsupp, max_side);

    std::map<RuleKey, Metrics> out;
    for (auto ma : mined) {
        for (auto mb : mined) {
            if ((ma & mb) != 0) continue;
            if (static_cast<std::size_t>(std::popcount(ma) + std::popcount(mb)) > c.max_itemset_size) continue;
            const auto A = from_mask(items, ma);
            const auto B = from_mask(items, mb);
            for (int na = 0; na < 2; ++na) {
                for (int nb = 0; nb < 2; ++nb) {
                    std::size_t ca = 0, cb = 0, cab = 0;
                    for (const auto& t : T) {
                        const bool ea = contains_all(t, A) != static_cast<bool>(na);
                        const bool eb = contains_all(t, B) != static_cast<bool>(nb);
                        ca += ea;
                        cb += eb;
                        cab += ea && eb;
                    }
                    if (ca == 0 || cb == 0) continue;
                    const double supp = static_cast<double>(cab) / n;
                    const double conf = static_cast<double>(cab) / static_cast<double>(ca);
                    const double lift = conf / (static_cast<double>(cb) / n);
                    if (supp >= c.minsupp && conf >= c.mincnf && (!c.require_lift_gt1 || lift > 1.0)) {
                        out[{A, B, na == 1, nb == 1}] = {supp, conf, lift};
                    }
                }
            }
        }
    }
    return out;
}

/// Random transactions over items i00..i(n_items-1); item frequencies vary
/// so both frequent and rare items occur.
inline std::vector<Transaction> random_transactions(std::mt19937_64& rng, std::size_t n_items, std::size_t n_tx) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(n_items);
    for (auto& x : p) x = 0.05 + 0.9 * u(rng);
    std::vector<Transaction> T;
    for (std::size_t t = 0; t < n_tx; ++t) {
        Transaction tx{"t" + std::to_string(t), {}};
        for (std::size_t i = 0; i < n_items; ++i) {
            if (u(rng) < p[i]) tx.items.push_back((i < 10 ? "i0" : "i") + std::to_string(i));
        }
        if (tx.items.empty()) tx.items.push_back("i00");
        std::sort(tx.items.begin(), tx.items.end());
        T.push_back(std::move(tx));
    }
    return T;
}

/// Random thresholds; idf_max is left unset or drawn above idf_min.
inline reckon::MiningConfig random_config(std::mt19937_64& rng, std::size_t n_tx) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    reckon::MiningConfig c;
    c.minsupp          = 0.05 + 0.45 * u(rng);
    c.mincnf           = 0.3 + 0.65 * u(rng);
    c.idf_min          = (rng() % 3 == 0) ? 0.0 : 0.3 * u(rng);
    c.max_itemset_size = 2 + rng() % 3;
    c.require_lift_gt1 = rng() % 4 != 0;
    const double top   = std::log(static_cast<double>(n_tx));
    if (rng() % 2 == 0) c.idf_max = c.idf_min + 0.05 + (top - c.idf_min) * u(rng);
    if (!(c.resolved_idf_max(n_tx) > c.idf_min)) c.idf_max = c.idf_min + 1.0;
    return c;
}

/// Runs the miner and the enumerator and describes the first disagreement,
/// or returns an empty string.
inline std::string compare_with_miner(const std::vector<Transaction>& T, const reckon::MiningConfig& c, double tol) {
    const auto rules    = reckon::fisinfis_mine(T, c);
    const auto expected = enumerate_rules(T, c);
    std::map<RuleKey, Metrics> got;
    for (const auto& r : rules) {
        RuleKey k{r.antecedent.items(), r.consequent.items(), r.neg_antecedent, r.neg_consequent};
        if (!got.emplace(k, Metrics{r.metrics.support, r.metrics.confidence, r.metrics.lift}).second) {
            return "duplicate rule " + r.antecedent.join() + " => " + r.consequent.join();
        }
    }
    auto name = [](const RuleKey& k) {
        std::string s = k.neg_a ? "!" : "";
        for (const auto& x : k.a) s += x + "+";
        s += " => ";
        s += k.neg_b ? "!" : "";
        for (const auto& x : k.b) s += x + "+";
        return s;
    };
    for (const auto& [k, m] : expected) {
        auto it = got.find(k);
        if (it == got.end()) return "missing rule " + name(k);
        const auto& g = it->second;
        if (std::abs(g.support - m.support) > tol || std::abs(g.confidence - m.confidence) > tol ||
            std::abs(g.lift - m.lift) > tol) {
            return "metric mismatch on " + name(k);
        }
    }
    for (const auto& [k, m] : got) {
        if (expected.count(k) == 0) return "unexpected rule " + name(k);
    }
    return {};
}

}  // namespace oracle
