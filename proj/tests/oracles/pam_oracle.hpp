#pragma once

#include "reckon/kmedoids.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace oracle {

struct PamOptimum {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> medoids;
};

inline double medoid_cost(const reckon::DistanceMatrix& d, const std::vector<std::size_t>& medoids) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (auto m : medoids) best = std::min(best, d(i, m));
        total += best;
    }
    return total;
}

/// Minimum cost over every k-subset of points; the first subset in
/// lexicographic order wins ties.
inline PamOptimum exhaustive_kmedoids(const reckon::DistanceMatrix& d, std::size_t k) {
    PamOptimum best;
    std::vector<std::size_t> pick(k);
    auto rec = [&](auto&& self, std::size_t depth, std::size_t from) -> void {
        if (depth == k) {
            const double c = medoid_cost(d, pick);
            if (c < best.cost) best = {c, pick};
            return;
        }
        for (std::size_t i = from; i + (k - depth) <= d.size(); ++i) {
            pick[depth] = i;
            self(self, depth + 1, i + 1);
        }
    };
    rec(rec, 0, 0);
    return best;
}

struct PamFixture {
    std::string name;
    reckon::DistanceMatrix d;
};

/// Small k=2 fixtures: the 1-D two-pairs example, then for every n in [3,10]
/// and every group split, two jittered groups (far apart for euclidean,
/// orthogonal directions for cosine).
inline std::vector<PamFixture> pam_fixture_suite() {
    using reckon::Metric;
    using reckon::RowMatrix;
    std::vector<PamFixture> out;
    RowMatrix pairs(4, 1);
    pairs << 0, 1, 10, 11;
    out.push_back({"two-pairs", reckon::distance_matrix(pairs, Metric::euclidean)});

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    for (std::size_t n = 3; n <= 10; ++n) {
        for (std::size_t split = 1; split < n; ++split) {
            RowMatrix e(static_cast<Eigen::Index>(n), 2), c(static_cast<Eigen::Index>(n), 2);
            for (std::size_t i = 0; i < n; ++i) {
                const bool second = i >= split;
                const auto r      = static_cast<Eigen::Index>(i);
                e(r, 0) = (second ? 10.0 : 0.0) + jitter(rng);
                e(r, 1) = jitter(rng);
                const double angle = (second ? M_PI / 2 : 0.0) + 0.3 * jitter(rng);
                const double len   = 1.0 + std::abs(jitter(rng));
                c(r, 0) = len * std::cos(angle);
                c(r, 1) = len * std::sin(angle);
            }
            const auto tag = "n" + std::to_string(n) + "-split" + std::to_string(split);
            out.push_back({tag + "-euclidean", reckon::distance_matrix(e, Metric::euclidean)});
            out.push_back({tag + "-cosine", reckon::distance_matrix(c, Metric::cosine)});
        }
    }
    return out;
}

}  // namespace oracle
