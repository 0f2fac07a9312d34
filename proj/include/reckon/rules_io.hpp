#pragma once

#include "reckon/rules.hpp"

#include <fmt/format.h>

#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace reckon {

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace detail

/// `antecedent,consequent,neg_a,neg_c,support,confidence,lift`, items joined
/// by '+', flags 0/1, metrics with 6 decimals.
inline void write_rules_csv(std::ostream& out, const std::vector<Rule>& rules) {
    out << "antecedent,consequent,neg_a,neg_c,support,confidence,lift\n";
    for (const auto& r : rules) {
        out << detail::csv_field(r.antecedent.join()) << ',' << detail::csv_field(r.consequent.join()) << ','
            << (r.neg_antecedent ? 1 : 0) << ',' << (r.neg_consequent ? 1 : 0) << ','
            << fmt::format("{:.6f},{:.6f},{:.6f}", r.metrics.support, r.metrics.confidence, r.metrics.lift) << '\n';
    }
}

/// GraphViz digraph: one box per distinct itemset, one edge per rule.
/// Negative rules are dashed and carry "¬<items>" as tail/head labels on the
/// negated sides. Output depends only on the rule set, not its order.
inline std::string export_rule_graph(const std::vector<Rule>& rules) {
    std::set<Itemset> nodes;
    for (const auto& r : rules) {
        nodes.insert(r.antecedent);
        nodes.insert(r.consequent);
    }
    std::map<Itemset, std::size_t> node_id;
    for (const auto& s : nodes) {
        node_id.emplace(s, node_id.size());
    }

    using EdgeKey = std::tuple<std::size_t, std::size_t, bool, bool>;
    std::map<EdgeKey, const Rule*> edges;
    for (const auto& r : rules) {
        edges.emplace(EdgeKey{node_id.at(r.antecedent), node_id.at(r.consequent), r.neg_antecedent, r.neg_consequent},
                      &r);
    }

    std::ostringstream out;
    out << "digraph rules {\n";
    out << "  rankdir=LR;\n";
    out << "  node [shape=box];\n";
    for (const auto& [set, id] : node_id) {
        out << "  n" << id << " [label=\"" << detail::dot_escape(set.join()) << "\"];\n";
    }
    for (const auto& [key, r] : edges) {
        const auto& [from, to, neg_a, neg_c] = key;
        out << "  n" << from << " -> n" << to << " [label=\""
            << fmt::format("s={:.3f} c={:.3f} l={:.3f}", r->metrics.support, r->metrics.confidence, r->metrics.lift)
            << '"';
        if (neg_a || neg_c) {
            out << ", style=dashed";
        }
        if (neg_a) {
            out << ", taillabel=\"¬" << detail::dot_escape(r->antecedent.join()) << '"';
        }
        if (neg_c) {
            out << ", headlabel=\"¬" << detail::dot_escape(r->consequent.join()) << '"';
        }
        out << "];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace reckon
