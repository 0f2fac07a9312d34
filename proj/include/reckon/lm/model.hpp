#pragma once

// Consequence predictor: token embedding -> two stacked bidirectional LSTM
// layers -> flatten -> two ReLU dense layers -> dropout -> dense -> sigmoid,
// trained with mean binary cross-entropy over the vocabulary. Forward and
// reverse-mode backward passes are written out by hand.

#include "reckon/corpus.hpp"
#include "reckon/error.hpp"
#include "reckon/lm/config.hpp"
#include "reckon/lm/vocab.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace reckon::lm {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Rng = std::mt19937_64;

inline constexpr std::size_t n_layers     = 2;
inline constexpr std::size_t n_directions = 2;
inline constexpr double prob_clamp        = 1e-7;

/// Gate blocks are stacked in the order input, forget, cell, output.
template <typename Scalar>
struct LstmParams {
    Mat<Scalar> W;  // 4H x in
    Mat<Scalar> U;  // 4H x H
    Mat<Scalar> b;  // 4H x 1
};

template <typename Scalar>
struct LmParams {
    Mat<Scalar> embedding;  // vocab x embed
    std::array<std::array<LstmParams<Scalar>, n_directions>, n_layers> lstm;
    Mat<Scalar> dense1_w, dense1_b;
    Mat<Scalar> dense2_w, dense2_b;
    Mat<Scalar> output_w, output_b;

    static LmParams zeros(const LmConfig& c, std::size_t vocab_size) {
        const auto V = static_cast<Eigen::Index>(vocab_size);
        const auto D = static_cast<Eigen::Index>(c.embed_dim);
        const auto H = static_cast<Eigen::Index>(c.recurrent_units);
        const auto F = static_cast<Eigen::Index>(c.dense_units);
        const auto T = static_cast<Eigen::Index>(c.seq_len);
        LmParams p;
        p.embedding = Mat<Scalar>::Zero(V, D);
        for (std::size_t l = 0; l < n_layers; ++l) {
            const auto in = l == 0 ? D : 2 * H;
            for (auto& dir : p.lstm[l]) {
                dir.W = Mat<Scalar>::Zero(4 * H, in);
                dir.U = Mat<Scalar>::Zero(4 * H, H);
                dir.b = Mat<Scalar>::Zero(4 * H, 1);
            }
        }
        p.dense1_w = Mat<Scalar>::Zero(F, T * 2 * H);
        p.dense1_b = Mat<Scalar>::Zero(F, 1);
        p.dense2_w = Mat<Scalar>::Zero(F, F);
        p.dense2_b = Mat<Scalar>::Zero(F, 1);
        p.output_w = Mat<Scalar>::Zero(V, F);
        p.output_b = Mat<Scalar>::Zero(V, 1);
        return p;
    }

    /// Every tensor in a fixed order matching `tensor_names()`.
    std::vector<Mat<Scalar>*> tensors() {
        std::vector<Mat<Scalar>*> out{&embedding};
        for (auto& layer : lstm) {
            for (auto& dir : layer) {
                out.insert(out.end(), {&dir.W, &dir.U, &dir.b});
            }
        }
        out.insert(out.end(), {&dense1_w, &dense1_b, &dense2_w, &dense2_b, &output_w, &output_b});
        return out;
    }

    std::vector<const Mat<Scalar>*> tensors() const {
        auto mut = const_cast<LmParams*>(this)->tensors();
        return {mut.begin(), mut.end()};
    }

    static std::vector<std::string> tensor_names() {
        std::vector<std::string> out{"embedding"};
        for (std::size_t l = 0; l < n_layers; ++l) {
            for (const char* dir : {"fwd", "bwd"}) {
                const std::string base = "lstm" + std::to_string(l) + "_" + dir + "_";
                out.insert(out.end(), {base + "W", base + "U", base + "b"});
            }
        }
        out.insert(out.end(), {"dense1_W", "dense1_b", "dense2_W", "dense2_b", "output_W", "output_b"});
        return out;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
        return n;
    }
};

template <typename Scalar>
struct AdamState {
    std::vector<Mat<Scalar>> m, v;
    std::uint64_t t = 0;
};

template <typename Scalar>
struct LmModel {
    LmConfig config;
    LmVocabulary vocab;
    PreprocessConfig preprocess;  // tokenizer settings for raw-text prediction
    LmParams<Scalar> params;
    AdamState<Scalar> adam;

    std::size_t output_size() const noexcept { return vocab.size(); }
};

namespace detail {

template <typename Scalar>
Scalar sigmoid_scalar(Scalar x) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    return x.unaryExpr([](Scalar v) { return sigmoid_scalar(v); });
}

template <typename Scalar>
void reset_adam(LmModel<Scalar>& model) {
    model.adam = {};
    for (const auto* t : model.params.tensors()) {
        model.adam.m.push_back(Mat<Scalar>::Zero(t->rows(), t->cols()));
        model.adam.v.push_back(Mat<Scalar>::Zero(t->rows(), t->cols()));
    }
}

}  // namespace detail

/// Model with every parameter zero (all outputs exactly 0.5).
template <typename Scalar>
LmModel<Scalar> zero_model(const LmConfig& config, const LmVocabulary& vocab, PreprocessConfig preprocess = {}) {
    config.validate();
    if (vocab.size() > config.vocab_size) {
        throw PreconditionError("vocabulary has " + std::to_string(vocab.size()) + " entries, cap is " +
                                std::to_string(config.vocab_size));
    }
    LmModel<Scalar> model{config, vocab, std::move(preprocess), LmParams<Scalar>::zeros(config, vocab.size()), {}};
    detail::reset_adam(model);
    return model;
}

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)) per tensor, biases zero.
template <typename Scalar>
LmModel<Scalar> init_model(const LmConfig& config, const LmVocabulary& vocab, PreprocessConfig preprocess = {}) {
    auto model = zero_model<Scalar>(config, vocab, std::move(preprocess));
    Rng rng(config.seed);
    const auto names = LmParams<Scalar>::tensor_names();
    auto tensors     = model.params.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (names[i].back() == 'b') continue;
        auto& t            = *tensors[i];
        const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = static_cast<Scalar>(dist(rng));
    }
    return model;
}

template <typename Scalar>
struct LstmTrace {
    Mat<Scalar> gates;  // 4H x T, post-activation
    Mat<Scalar> c;      // H x T
    Mat<Scalar> h;      // H x T
};

/// Intermediate values of one forward pass, kept for the backward pass.
template <typename Scalar>
struct ForwardTrace {
    std::vector<TokenId> ids;
    Mat<Scalar> x;  // embed x T
    std::array<std::array<LstmTrace<Scalar>, n_directions>, n_layers> lstm;
    std::array<Mat<Scalar>, n_layers> layer_out;  // 2H x T
    Vec<Scalar> flat, z1, a1, z2, a2, mask, dropped, logits, probs;
};

namespace detail {

template <typename Scalar>
void lstm_forward(const LstmParams<Scalar>& p, const Mat<Scalar>& in, bool reverse, LstmTrace<Scalar>& tr) {
    const auto H = p.U.cols();
    const auto T = in.cols();
    const Mat<Scalar> wx = (p.W * in).colwise() + p.b.col(0);
    tr.gates.resize(4 * H, T);
    tr.c.resize(H, T);
    tr.h.resize(H, T);
    Vec<Scalar> h_prev = Vec<Scalar>::Zero(H), c_prev = Vec<Scalar>::Zero(H);
    for (Eigen::Index s = 0; s < T; ++s) {
        const auto t        = reverse ? T - 1 - s : s;
        const Vec<Scalar> a = wx.col(t) + p.U * h_prev;
        auto g              = tr.gates.col(t);
        g.segment(0, H)     = sigmoid(a.segment(0, H));
        g.segment(H, H)     = sigmoid(a.segment(H, H));
        g.segment(2 * H, H) = a.segment(2 * H, H).array().tanh().matrix();
        g.segment(3 * H, H) = sigmoid(a.segment(3 * H, H));
        tr.c.col(t) = g.segment(H, H).cwiseProduct(c_prev) + g.segment(0, H).cwiseProduct(g.segment(2 * H, H));
        tr.h.col(t) = g.segment(3 * H, H).cwiseProduct(tr.c.col(t).array().tanh().matrix());
        h_prev      = tr.h.col(t);
        c_prev      = tr.c.col(t);
    }
}

/// Backpropagates `d_h` (H x T, gradient w.r.t. this direction's outputs)
/// through time; accumulates parameter gradients and adds the input gradient to `d_in`.
template <typename Scalar>
void lstm_backward(const LstmParams<Scalar>& p, const Mat<Scalar>& in, bool reverse, const LstmTrace<Scalar>& tr,
                   const Mat<Scalar>& d_h, LstmParams<Scalar>& grad, Mat<Scalar>& d_in) {
    const auto H = p.U.cols();
    const auto T = in.cols();
    Mat<Scalar> d_pre(4 * H, T);
    Mat<Scalar> h_prev_all = Mat<Scalar>::Zero(H, T);
    Vec<Scalar> dh_next = Vec<Scalar>::Zero(H), dc_next = Vec<Scalar>::Zero(H);
    for (Eigen::Index s = T - 1; s >= 0; --s) {
        const auto t  = reverse ? T - 1 - s : s;
        const auto tp = reverse ? t + 1 : t - 1;
        const Vec<Scalar> c_prev = s > 0 ? Vec<Scalar>(tr.c.col(tp)) : Vec<Scalar>::Zero(H);
        if (s > 0) h_prev_all.col(t) = tr.h.col(tp);

        const auto g  = tr.gates.col(t);
        const auto gi = g.segment(0, H).array();
        const auto gf = g.segment(H, H).array();
        const auto gg = g.segment(2 * H, H).array();
        const auto go = g.segment(3 * H, H).array();
        const Eigen::Array<Scalar, Eigen::Dynamic, 1> tc = tr.c.col(t).array().tanh();

        const Eigen::Array<Scalar, Eigen::Dynamic, 1> dh = d_h.col(t).array() + dh_next.array();
        const Eigen::Array<Scalar, Eigen::Dynamic, 1> dc = dh * go * (Scalar(1) - tc.square()) + dc_next.array();

        d_pre.col(t).segment(0, H)     = (dc * gg * gi * (Scalar(1) - gi)).matrix();
        d_pre.col(t).segment(H, H)     = (dc * c_prev.array() * gf * (Scalar(1) - gf)).matrix();
        d_pre.col(t).segment(2 * H, H) = (dc * gi * (Scalar(1) - gg.square())).matrix();
        d_pre.col(t).segment(3 * H, H) = (dh * tc * go * (Scalar(1) - go)).matrix();

        dc_next = (dc * gf).matrix();
        dh_next = p.U.transpose() * d_pre.col(t);
    }
    grad.W.noalias() += d_pre * in.transpose();
    grad.U.noalias() += d_pre * h_prev_all.transpose();
    grad.b.col(0) += d_pre.rowwise().sum();
    d_in.noalias() += p.W.transpose() * d_pre;
}

template <typename Scalar>
Vec<Scalar> sample_dropout_mask(std::size_t n, double rate, Rng& rng) {
    const double keep = 1.0 - rate;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec<Scalar> mask(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask[i] = u(rng) < keep ? static_cast<Scalar>(1.0 / keep) : Scalar(0);
    }
    return mask;
}

template <typename Scalar>
void require_finite_vec(const Vec<Scalar>& v, const char* what) {
    if (!v.allFinite()) {
        throw NonFiniteError(std::string("non-finite ") + what + " (training diverged?)");
    }
}

}  // namespace detail

/// Runs the network on one id sequence. `mask` (dense_units entries,
/// already scaled by 1/keep) enables dropout; pass nullptr for eval mode.
template <typename Scalar>
ForwardTrace<Scalar> forward_trace(const LmModel<Scalar>& model, std::span<const TokenId> ids,
                                   const Vec<Scalar>* mask = nullptr) {
    const auto& p = model.params;
    const auto T  = static_cast<Eigen::Index>(model.config.seq_len);
    if (static_cast<Eigen::Index>(ids.size()) != T) {
        throw PreconditionError("input has " + std::to_string(ids.size()) + " ids, seq_len is " +
                                std::to_string(model.config.seq_len));
    }
    ForwardTrace<Scalar> tr;
    tr.ids.assign(ids.begin(), ids.end());
    tr.x.resize(p.embedding.cols(), T);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto id = ids[static_cast<std::size_t>(t)];
        if (id < 0 || id >= p.embedding.rows()) {
            throw PreconditionError("token id " + std::to_string(id) + " outside the vocabulary");
        }
        tr.x.col(t) = p.embedding.row(id).transpose();
    }

    const Mat<Scalar>* in = &tr.x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto H = p.lstm[l][0].U.cols();
        detail::lstm_forward(p.lstm[l][0], *in, false, tr.lstm[l][0]);
        detail::lstm_forward(p.lstm[l][1], *in, true, tr.lstm[l][1]);
        tr.layer_out[l].resize(2 * H, T);
        tr.layer_out[l].topRows(H)    = tr.lstm[l][0].h;
        tr.layer_out[l].bottomRows(H) = tr.lstm[l][1].h;
        in                            = &tr.layer_out[l];
    }

    tr.flat    = Eigen::Map<const Vec<Scalar>>(tr.layer_out.back().data(), tr.layer_out.back().size());
    tr.z1      = p.dense1_w * tr.flat + p.dense1_b.col(0);
    tr.a1      = tr.z1.cwiseMax(Scalar(0));
    tr.z2      = p.dense2_w * tr.a1 + p.dense2_b.col(0);
    tr.a2      = tr.z2.cwiseMax(Scalar(0));
    if (mask != nullptr) {
        tr.mask    = *mask;
        tr.dropped = tr.a2.cwiseProduct(*mask);
    } else {
        tr.dropped = tr.a2;
    }
    tr.logits = p.output_w * tr.dropped + p.output_b.col(0);
    tr.probs  = detail::sigmoid(tr.logits);
    detail::require_finite_vec(tr.probs, "output");
    return tr;
}

/// Pre-sigmoid output activations. In train mode a dropout mask is drawn from `rng`.
template <typename Scalar>
Vec<Scalar> forward_logits(const LmModel<Scalar>& model, std::span<const TokenId> ids, bool train_mode, Rng& rng) {
    if (train_mode && model.config.dropout_rate > 0.0) {
        const auto mask = detail::sample_dropout_mask<Scalar>(model.config.dense_units, model.config.dropout_rate, rng);
        return forward_trace(model, ids, &mask).logits;
    }
    return forward_trace(model, ids).logits;
}

/// Probability per vocabulary entry, each in (0, 1); entries do not sum to 1.
template <typename Scalar>
Vec<Scalar> forward(const LmModel<Scalar>& model, std::span<const TokenId> ids, bool train_mode, Rng& rng) {
    if (train_mode && model.config.dropout_rate > 0.0) {
        const auto mask = detail::sample_dropout_mask<Scalar>(model.config.dense_units, model.config.dropout_rate, rng);
        return forward_trace(model, ids, &mask).probs;
    }
    return forward_trace(model, ids).probs;
}

/// Eval-mode forward pass.
template <typename Scalar>
Vec<Scalar> forward(const LmModel<Scalar>& model, std::span<const TokenId> ids) {
    return forward_trace(model, ids).probs;
}

/// Mean over entries of -[y ln p + (1-y) ln(1-p)], p clamped to [1e-7, 1-1e-7].
template <typename Scalar, typename Target>
double bce_loss(const Vec<Scalar>& probs, const Target& target) {
    if (static_cast<std::size_t>(probs.size()) != static_cast<std::size_t>(target.size())) {
        throw PreconditionError("probability and target sizes differ");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(static_cast<double>(probs[i]), prob_clamp, 1.0 - prob_clamp);
        const double y = static_cast<double>(target[static_cast<std::size_t>(i)]);
        sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    return sum / static_cast<double>(probs.size());
}

/// One supervised example: padded dynamics ids and a multi-hot target over
/// the vocabulary marking the consequence tokens.
struct TrainPair {
    std::vector<TokenId> input_ids;
    std::vector<std::uint8_t> target;
};

template <typename Scalar>
struct Gradients {
    LmParams<Scalar> grads;
    double loss = 0.0;
};

/// Exact gradient of the mean BCE over `batch`, accumulated from the trace
/// of a forward pass. In train mode one dropout mask per example is drawn
/// from `rng`, in batch order.
template <typename Scalar>
Gradients<Scalar> backward(const LmModel<Scalar>& model, std::span<const TrainPair> batch, Rng& rng,
                           bool train_mode = true) {
    if (batch.empty()) {
        throw PreconditionError("backward needs a non-empty batch");
    }
    const auto& p = model.params;
    Gradients<Scalar> out{LmParams<Scalar>::zeros(model.config, model.vocab.size()), 0.0};
    auto& g             = out.grads;
    const auto V        = static_cast<Eigen::Index>(model.vocab.size());
    const bool dropout  = train_mode && model.config.dropout_rate > 0.0;

    for (const auto& ex : batch) {
        if (static_cast<Eigen::Index>(ex.target.size()) != V) {
            throw PreconditionError("target size does not match the vocabulary");
        }
        Vec<Scalar> mask;
        if (dropout) mask = detail::sample_dropout_mask<Scalar>(model.config.dense_units, model.config.dropout_rate, rng);
        const auto tr = forward_trace(model, ex.input_ids, dropout ? &mask : nullptr);
        out.loss += bce_loss(tr.probs, ex.target);

        Vec<Scalar> d_logits(V);
        for (Eigen::Index v = 0; v < V; ++v) {
            const double pv = static_cast<double>(tr.probs[v]);
            const bool clamped = pv < prob_clamp || pv > 1.0 - prob_clamp;
            d_logits[v] = clamped ? Scalar(0) : (tr.probs[v] - static_cast<Scalar>(ex.target[static_cast<std::size_t>(v)])) /
                                                     static_cast<Scalar>(V);
        }
        g.output_w.noalias() += d_logits * tr.dropped.transpose();
        g.output_b.col(0) += d_logits;
        Vec<Scalar> d_a2 = p.output_w.transpose() * d_logits;
        if (dropout) d_a2 = d_a2.cwiseProduct(tr.mask);

        const Vec<Scalar> d_z2 = d_a2.cwiseProduct((tr.z2.array() > Scalar(0)).template cast<Scalar>().matrix());
        g.dense2_w.noalias() += d_z2 * tr.a1.transpose();
        g.dense2_b.col(0) += d_z2;
        const Vec<Scalar> d_a1 = p.dense2_w.transpose() * d_z2;
        const Vec<Scalar> d_z1 = d_a1.cwiseProduct((tr.z1.array() > Scalar(0)).template cast<Scalar>().matrix());
        g.dense1_w.noalias() += d_z1 * tr.flat.transpose();
        g.dense1_b.col(0) += d_z1;
        const Vec<Scalar> d_flat = p.dense1_w.transpose() * d_z1;

        Mat<Scalar> d_out = Eigen::Map<const Mat<Scalar>>(d_flat.data(), tr.layer_out.back().rows(),
                                                          tr.layer_out.back().cols());
        for (std::size_t l = n_layers; l-- > 0;) {
            const Mat<Scalar>& in = l == 0 ? tr.x : tr.layer_out[l - 1];
            const auto H          = p.lstm[l][0].U.cols();
            Mat<Scalar> d_in      = Mat<Scalar>::Zero(in.rows(), in.cols());
            detail::lstm_backward(p.lstm[l][0], in, false, tr.lstm[l][0], Mat<Scalar>(d_out.topRows(H)), g.lstm[l][0], d_in);
            detail::lstm_backward(p.lstm[l][1], in, true, tr.lstm[l][1], Mat<Scalar>(d_out.bottomRows(H)), g.lstm[l][1], d_in);
            d_out = std::move(d_in);
        }
        for (std::size_t t = 0; t < tr.ids.size(); ++t) {
            g.embedding.row(tr.ids[t]) += d_out.col(static_cast<Eigen::Index>(t)).transpose();
        }
    }

    const auto scale = Scalar(1) / static_cast<Scalar>(batch.size());
    for (auto* t : g.tensors()) *t *= scale;
    out.loss /= static_cast<double>(batch.size());
    if (!std::isfinite(out.loss)) {
        throw NonFiniteError("non-finite loss");
    }
    return out;
}

}  // namespace reckon::lm
