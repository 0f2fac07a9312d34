#pragma once

// K-Medoids by PAM (BUILD + SWAP) over a precomputed distance matrix, mean
// silhouette, and silhouette-driven sweeps over k.

#include "reckon/error.hpp"
#include "reckon/matrix.hpp"
#include "reckon/vectors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace reckon {

enum class Metric { cosine, euclidean };

inline std::string to_string(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

inline Metric parse_metric(const std::string& s) {
    if (s == "cosine") return Metric::cosine;
    if (s == "euclidean") return Metric::euclidean;
    throw PreconditionError("unknown metric '" + s + "' (expected cosine or euclidean)");
}

/// Symmetric n x n matrix of pairwise distances with a zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double v) noexcept {
        d_[i * n_ + j] = v;
        d_[j * n_ + i] = v;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

namespace detail {

/// 1 - cos(x, y), clamped to [0, 2]. Two zero vectors are at distance 0,
/// a zero vector and a non-zero one at distance 1.
inline double cosine_distance(double dot, double norm_x, double norm_y) {
    if (norm_x == 0.0 || norm_y == 0.0) {
        return (norm_x == 0.0 && norm_y == 0.0) ? 0.0 : 1.0;
    }
    return std::clamp(1.0 - dot / (norm_x * norm_y), 0.0, 2.0);
}

}  // namespace detail

inline DistanceMatrix distance_matrix(const RowMatrix& points, Metric metric) {
    require_finite(points, "points");
    const auto n = static_cast<std::size_t>(points.rows());
    DistanceMatrix d(n);
    Eigen::VectorXd norms = points.rowwise().norm();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto ri = points.row(static_cast<Eigen::Index>(i));
            const auto rj = points.row(static_cast<Eigen::Index>(j));
            double v      = 0.0;
            if (metric == Metric::euclidean) {
                v = (ri - rj).norm();
            } else {
                v = detail::cosine_distance(ri.dot(rj), norms[static_cast<Eigen::Index>(i)],
                                            norms[static_cast<Eigen::Index>(j)]);
            }
            d.set(i, j, v);
        }
    }
    return d;
}

inline DistanceMatrix distance_matrix(const TfIdfMatrix& m, Metric metric) {
    const std::size_t n = m.n_rows;
    std::vector<double> sq(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (auto e = m.row_start[r]; e < m.row_start[r + 1]; ++e) {
            if (!std::isfinite(m.entries[e].weight)) {
                throw NonFiniteError("tf-idf matrix contains non-finite values");
            }
            sq[r] += m.entries[e].weight * m.entries[e].weight;
        }
    }
    auto dot = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        auto i = m.row_start[a], ie = m.row_start[a + 1];
        auto j = m.row_start[b], je = m.row_start[b + 1];
        while (i < ie && j < je) {
            if (m.entries[i].col == m.entries[j].col) {
                s += m.entries[i++].weight * m.entries[j++].weight;
            } else if (m.entries[i].col < m.entries[j].col) {
                ++i;
            } else {
                ++j;
            }
        }
        return s;
    };
    DistanceMatrix d(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const double ab = dot(a, b);
            double v        = 0.0;
            if (metric == Metric::euclidean) {
                v = std::sqrt(std::max(0.0, sq[a] + sq[b] - 2.0 * ab));
            } else {
                v = detail::cosine_distance(ab, std::sqrt(sq[a]), std::sqrt(sq[b]));
            }
            d.set(a, b, v);
        }
    }
    return d;
}

struct ClusterConfig {
    std::optional<std::size_t> k;  // fixed k; unset means sweep [k_lo, k_hi]
    std::size_t k_lo     = 2;
    std::size_t k_hi     = 100;
    Metric metric        = Metric::euclidean;
    std::size_t max_iter = 100;
    std::uint64_t seed   = 0;

    void validate() const {
        if (k && *k < 2) throw PreconditionError("k must be >= 2");
        if (!k && k_lo < 2) throw PreconditionError("k_lo must be >= 2");
        if (!k && k_lo > k_hi) throw PreconditionError("k_lo must not exceed k_hi");
    }
};

struct ClusterAssignment {
    std::vector<std::size_t> medoids;  // ascending row indices; cluster c has medoid medoids[c]
    std::vector<std::size_t> labels;
    double cost       = 0.0;
    double silhouette = 0.0;
    double build_cost = 0.0;
    std::vector<double> pass_costs;  // cost after each accepted SWAP pass
    std::uint64_t seed = 0;

    std::size_t k() const noexcept { return medoids.size(); }
};

namespace detail {

/// Medoids label themselves; other points go to the nearest medoid, ties to
/// the lowest cluster index. Returns the total cost.
inline double assign(const DistanceMatrix& d, const std::vector<std::size_t>& medoids, std::vector<std::size_t>& labels) {
    const std::size_t n = d.size();
    labels.assign(n, 0);
    std::vector<std::size_t> own(n, medoids.size());
    for (std::size_t c = 0; c < medoids.size(); ++c) own[medoids[c]] = c;
    double cost = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (own[j] != medoids.size()) {
            labels[j] = own[j];
            continue;
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < medoids.size(); ++c) {
            if (d(j, medoids[c]) < d(j, medoids[best])) best = c;
        }
        labels[j] = best;
        cost += d(j, medoids[best]);
    }
    return cost;
}

inline std::vector<std::size_t> pam_build(const DistanceMatrix& d, std::size_t k) {
    const std::size_t n = d.size();
    std::vector<std::size_t> medoids;
    std::vector<bool> is_medoid(n, false);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

    while (medoids.size() < k) {
        std::size_t best_i = n;
        double best_cost   = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (is_medoid[i]) continue;
            double c = 0.0;
            for (std::size_t j = 0; j < n; ++j) c += std::min(nearest[j], d(i, j));
            if (c < best_cost) {
                best_cost = c;
                best_i    = i;
            }
        }
        medoids.push_back(best_i);
        is_medoid[best_i] = true;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], d(best_i, j));
    }
    std::sort(medoids.begin(), medoids.end());
    return medoids;
}

/// One SWAP pass: applies the single best cost-lowering medoid/non-medoid
/// exchange. Returns false when no exchange lowers the cost.
inline bool pam_swap_pass(const DistanceMatrix& d, std::vector<std::size_t>& medoids, std::vector<std::size_t>& labels,
                          double& cost) {
    const std::size_t n = d.size();
    const std::size_t k = medoids.size();
    std::vector<bool> is_medoid(n, false);
    for (auto m : medoids) is_medoid[m] = true;

    // nearest and second-nearest medoid distances per point
    std::vector<double> first(n), second(n);
    std::vector<std::size_t> first_c(n);
    for (std::size_t j = 0; j < n; ++j) {
        double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
        std::size_t c1 = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double v = d(j, medoids[c]);
            if (v < d1) {
                d2 = d1;
                d1 = v;
                c1 = c;
            } else if (v < d2) {
                d2 = v;
            }
        }
        first[j]   = d1;
        second[j]  = d2;
        first_c[j] = c1;
    }

    double best_delta  = 0.0;
    std::size_t best_c = k, best_h = n;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t h = 0; h < n; ++h) {
            if (is_medoid[h]) continue;
            double delta = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double dh = d(j, h);
                if (first_c[j] == c) {
                    delta += std::min(dh, second[j]) - first[j];
                } else if (dh < first[j]) {
                    delta += dh - first[j];
                }
            }
            if (delta < best_delta) {
                best_delta = delta;
                best_c     = c;
                best_h     = h;
            }
        }
    }
    if (best_c == k) {
        return false;
    }
    auto candidate    = medoids;
    candidate[best_c] = best_h;
    std::sort(candidate.begin(), candidate.end());
    std::vector<std::size_t> new_labels;
    const double new_cost = assign(d, candidate, new_labels);
    if (!(new_cost < cost)) {
        return false;  // rounding ate the predicted improvement
    }
    medoids = std::move(candidate);
    labels  = std::move(new_labels);
    cost    = new_cost;
    return true;
}

/// Moves each medoid to the lowest-index member of its cluster with no larger
/// within-cluster cost, as long as the total cost does not increase.
inline void canonicalize_medoids(const DistanceMatrix& d, std::vector<std::size_t>& medoids,
                                 std::vector<std::size_t>& labels, double& cost) {
    const std::size_t n = d.size();
    for (std::size_t guard = 0; guard < n; ++guard) {
        auto candidate = medoids;
        bool moved     = false;
        for (std::size_t c = 0; c < medoids.size(); ++c) {
            auto within = [&](std::size_t center) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (labels[j] == c) s += d(j, center);
                }
                return s;
            };
            const double current = within(medoids[c]);
            for (std::size_t x = 0; x < medoids[c]; ++x) {
                if (labels[x] == c && within(x) <= current) {
                    candidate[c] = x;
                    moved        = true;
                    break;
                }
            }
        }
        if (!moved) return;
        std::sort(candidate.begin(), candidate.end());
        std::vector<std::size_t> new_labels;
        const double new_cost = assign(d, candidate, new_labels);
        if (new_cost > cost) return;
        medoids = std::move(candidate);
        labels  = std::move(new_labels);
        cost    = new_cost;
    }
}

}  // namespace detail

/// Mean silhouette. A point in a singleton cluster scores 0, as does a point
/// with a = b = 0.
inline double silhouette(const DistanceMatrix& d, const std::vector<std::size_t>& labels) {
    const std::size_t n = d.size();
    if (labels.size() != n) {
        throw PreconditionError("labels size does not match the number of points");
    }
    if (n == 0) {
        throw PreconditionError("silhouette needs at least one point");
    }
    const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    const auto non_empty = static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](auto s) { return s > 0; }));
    if (non_empty < 2) {
        throw PreconditionError("silhouette needs at least two non-empty clusters");
    }

    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] == 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sums[labels[j]] += d(i, j);
        }
        const double a = sums[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
        double b       = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != labels[i] && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

inline ClusterAssignment kmedoids_fit(const DistanceMatrix& d, std::size_t k, std::size_t max_iter = 100,
                                      std::uint64_t seed = 0) {
    if (k < 2) {
        throw PreconditionError("k must be >= 2");
    }
    if (k > d.size()) {
        throw PreconditionError("k = " + std::to_string(k) + " exceeds the number of points (" +
                                std::to_string(d.size()) + ")");
    }
    ClusterAssignment out;
    out.seed       = seed;
    out.medoids    = detail::pam_build(d, k);
    out.cost       = detail::assign(d, out.medoids, out.labels);
    out.build_cost = out.cost;
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (!detail::pam_swap_pass(d, out.medoids, out.labels, out.cost)) break;
        out.pass_costs.push_back(out.cost);
    }
    detail::canonicalize_medoids(d, out.medoids, out.labels, out.cost);
    out.silhouette = silhouette(d, out.labels);
    return out;
}

inline ClusterAssignment kmedoids_fit(const RowMatrix& points, const ClusterConfig& config) {
    config.validate();
    if (!config.k) {
        throw PreconditionError("kmedoids_fit needs a fixed k");
    }
    return kmedoids_fit(distance_matrix(points, config.metric), *config.k, config.max_iter, config.seed);
}

struct SweepRow {
    std::size_t k;
    double cost;
    double silhouette;
};

struct SweepResult {
    ClusterAssignment best;
    std::vector<SweepRow> table;
    bool truncated = false;  // k_hi exceeded the number of points
    std::size_t k_hi_effective = 0;
};

/// Fits every k in [k_lo, min(k_hi, n)] and keeps the highest mean
/// silhouette, ties going to the smaller k.
inline SweepResult sweep_k(const DistanceMatrix& d, std::size_t k_lo, std::size_t k_hi, std::size_t max_iter = 100,
                           std::uint64_t seed = 0) {
    if (k_lo < 2 || k_lo > k_hi) {
        throw PreconditionError("sweep range must satisfy 2 <= k_lo <= k_hi");
    }
    SweepResult out;
    out.truncated      = k_hi > d.size();
    out.k_hi_effective = std::min(k_hi, d.size());
    if (k_lo > out.k_hi_effective) {
        throw PreconditionError("k_lo = " + std::to_string(k_lo) + " exceeds the number of points (" +
                                std::to_string(d.size()) + ")");
    }
    bool have = false;
    for (std::size_t k = k_lo; k <= out.k_hi_effective; ++k) {
        auto fit = kmedoids_fit(d, k, max_iter, seed);
        out.table.push_back({k, fit.cost, fit.silhouette});
        if (!have || fit.silhouette > out.best.silhouette) {
            out.best = std::move(fit);
            have     = true;
        }
    }
    return out;
}

}  // namespace reckon
