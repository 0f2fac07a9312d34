#pragma once

#include "reckon/error.hpp"
#include "reckon/lm/model.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace reckon::lm {

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1         = 0.9;
    double beta2         = 0.999;
    double epsilon       = 1e-8;

    static AdamHyper from(const LmConfig& c) { return {c.learning_rate, c.beta1, c.beta2, c.epsilon}; }
};

/// Moment update and bias-corrected step for one tensor at step `t` (t >= 1).
template <typename Scalar>
void adam_update(Mat<Scalar>& theta, const Mat<Scalar>& grad, Mat<Scalar>& m, Mat<Scalar>& v, std::uint64_t t,
                 const AdamHyper& h) {
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double g  = static_cast<double>(grad.data()[i]);
        const double mi = h.beta1 * static_cast<double>(m.data()[i]) + (1.0 - h.beta1) * g;
        const double vi = h.beta2 * static_cast<double>(v.data()[i]) + (1.0 - h.beta2) * g * g;
        m.data()[i]     = static_cast<Scalar>(mi);
        v.data()[i]     = static_cast<Scalar>(vi);
        const double step = h.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + h.epsilon);
        theta.data()[i] = static_cast<Scalar>(static_cast<double>(theta.data()[i]) - step);
    }
}

/// Applies one ADAM step to every tensor and increments `state.t`.
template <typename Scalar>
void adam_step(std::span<Mat<Scalar>* const> params, std::span<const Mat<Scalar>* const> grads, AdamState<Scalar>& state,
               const AdamHyper& hyper) {
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
        throw PreconditionError("parameter, gradient and moment tensor counts differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols()) {
            throw PreconditionError("gradient shape mismatch for tensor " + std::to_string(i));
        }
    }
    ++state.t;
    for (std::size_t i = 0; i < params.size(); ++i) {
        adam_update(*params[i], *grads[i], state.m[i], state.v[i], state.t, hyper);
    }
}

template <typename Scalar>
void adam_step(LmModel<Scalar>& model, const LmParams<Scalar>& grads) {
    auto p = model.params.tensors();
    auto g = grads.tensors();
    adam_step<Scalar>(p, g, model.adam, AdamHyper::from(model.config));
}

}  // namespace reckon::lm
