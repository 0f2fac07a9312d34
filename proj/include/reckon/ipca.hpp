#pragma once

// Incremental PCA: the mean, per-feature variance and principal subspace are
// updated one batch at a time by re-decomposing the previous components
// (scaled by their singular values) stacked with the centred new batch and a
// mean-shift correction row.

#include "reckon/error.hpp"
#include "reckon/matrix.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reckon {

struct IpcaModel {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;       // per feature, population (divide by n)
    RowMatrix components;           // m x n_cols, orthonormal rows
    Eigen::VectorXd singular_values;
    Eigen::VectorXd explained_variance_ratio;
    std::size_t n_seen = 0;

    std::size_t n_features() const noexcept { return static_cast<std::size_t>(mean.size()); }
    std::size_t n_components() const noexcept { return static_cast<std::size_t>(components.rows()); }
};

class IncrementalPca {
public:
    explicit IncrementalPca(std::optional<std::size_t> max_components = std::nullopt)
        : max_components_(max_components) {}

    void partial_fit(const RowMatrix& batch) {
        if (batch.rows() < 1) {
            throw PreconditionError("every batch needs at least one row");
        }
        require_finite(batch, "batch");
        auto& m = model_;
        if (m.n_seen > 0 && static_cast<std::size_t>(batch.cols()) != m.n_features()) {
            throw PreconditionError("batch has " + std::to_string(batch.cols()) + " columns, expected " +
                                    std::to_string(m.n_features()));
        }

        const auto n_new      = static_cast<double>(batch.rows());
        const auto n_old      = static_cast<double>(m.n_seen);
        const double n_total  = n_old + n_new;
        Eigen::VectorXd batch_mean = batch.colwise().mean().transpose();
        RowMatrix centred          = batch.rowwise() - batch_mean.transpose();
        Eigen::VectorXd batch_m2   = centred.colwise().squaredNorm().transpose();

        RowMatrix stacked;
        if (m.n_seen == 0) {
            stacked    = centred;
            m.mean     = batch_mean;
            m.variance = batch_m2 / n_new;
        } else {
            const Eigen::VectorXd delta = batch_mean - m.mean;
            const Eigen::VectorXd m2 =
                m.variance * n_old + batch_m2 + delta.cwiseAbs2() * (n_old * n_new / n_total);
            const Eigen::RowVectorXd correction = std::sqrt(n_old * n_new / n_total) * (m.mean - batch_mean).transpose();

            const auto k = m.components.rows();
            stacked.resize(k + batch.rows() + 1, batch.cols());
            stacked.topRows(k)                         = m.singular_values.asDiagonal() * m.components;
            stacked.middleRows(k, batch.rows())        = centred;
            stacked.bottomRows(1)                      = correction;
            m.mean     = (m.mean * n_old + batch_mean * n_new) / n_total;
            m.variance = m2 / n_total;
        }
        m.n_seen += static_cast<std::size_t>(batch.rows());

        Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(stacked), Eigen::ComputeThinV);
        Eigen::Index keep = svd.singularValues().size();
        keep = std::min<Eigen::Index>(keep, static_cast<Eigen::Index>(m.n_seen));
        if (max_components_) keep = std::min<Eigen::Index>(keep, static_cast<Eigen::Index>(*max_components_));

        m.singular_values = svd.singularValues().head(keep);
        m.components      = svd.matrixV().leftCols(keep).transpose();
        // sign convention: the largest-magnitude loading of each component is positive
        for (Eigen::Index r = 0; r < m.components.rows(); ++r) {
            Eigen::Index arg = 0;
            m.components.row(r).cwiseAbs().maxCoeff(&arg);
            if (m.components(r, arg) < 0.0) m.components.row(r) *= -1.0;
        }
        const double total_m2 = m.variance.sum() * static_cast<double>(m.n_seen);
        m.explained_variance_ratio =
            total_m2 > 0.0 ? Eigen::VectorXd(m.singular_values.cwiseAbs2() / total_m2) : Eigen::VectorXd::Zero(keep);
    }

    const IpcaModel& model() const noexcept { return model_; }

private:
    std::optional<std::size_t> max_components_;
    IpcaModel model_;
};

inline IpcaModel ipca_fit(std::span<const RowMatrix> batches, std::optional<std::size_t> max_components = std::nullopt) {
    IncrementalPca ipca(max_components);
    std::size_t total = 0;
    for (const auto& b : batches) {
        ipca.partial_fit(b);
        total += static_cast<std::size_t>(b.rows());
    }
    if (total < 2) {
        throw PreconditionError("IPCA needs at least two samples");
    }
    return ipca.model();
}

/// Splits `data` into consecutive row batches of `batch_size` (the last may be shorter).
inline IpcaModel ipca_fit(const RowMatrix& data, std::size_t batch_size,
                          std::optional<std::size_t> max_components = std::nullopt) {
    if (batch_size < 1) {
        throw PreconditionError("batch_size must be >= 1");
    }
    std::vector<RowMatrix> batches;
    for (Eigen::Index start = 0; start < data.rows(); start += static_cast<Eigen::Index>(batch_size)) {
        const auto rows = std::min<Eigen::Index>(static_cast<Eigen::Index>(batch_size), data.rows() - start);
        batches.emplace_back(data.middleRows(start, rows));
    }
    return ipca_fit(batches, max_components);
}

struct Reduction {
    RowMatrix reduced;
    std::size_t m = 0;
    double cumulative_ratio = 0.0;
};

/// Projects onto the shortest prefix of components whose cumulative explained
/// variance ratio reaches `threshold`.
inline Reduction reduce_to_variance(const IpcaModel& model, const RowMatrix& points, double threshold = 0.85) {
    if (model.n_seen == 0) {
        throw PreconditionError("IPCA model is not fitted");
    }
    if (static_cast<std::size_t>(points.cols()) != model.n_features()) {
        throw PreconditionError("points have " + std::to_string(points.cols()) + " columns, model expects " +
                                std::to_string(model.n_features()));
    }
    require_finite(points, "points");
    constexpr double slack = 1e-12;
    Reduction out;
    double cum = 0.0;
    for (Eigen::Index i = 0; i < model.explained_variance_ratio.size(); ++i) {
        cum += model.explained_variance_ratio[i];
        if (cum >= threshold - slack) {
            out.m                = static_cast<std::size_t>(i + 1);
            out.cumulative_ratio = cum;
            break;
        }
    }
    if (out.m == 0) {
        throw PreconditionError("retained components explain at most " + std::to_string(cum) +
                                " of the variance, below threshold " + std::to_string(threshold));
    }
    const auto m = static_cast<Eigen::Index>(out.m);
    out.reduced  = (points.rowwise() - model.mean.transpose()) * model.components.topRows(m).transpose();
    return out;
}

}  // namespace reckon
