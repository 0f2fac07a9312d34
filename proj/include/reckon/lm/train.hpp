#pragma once

#include "reckon/corpus.hpp"
#include "reckon/error.hpp"
#include "reckon/lm/adam.hpp"
#include "reckon/lm/model.hpp"
#include "reckon/lm/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace reckon::lm {

/// Input ids from the dynamics tokens; the target marks every in-vocabulary
/// consequence token. Unknown consequence tokens are not representable and are skipped.
inline TrainPair make_train_pair(const std::vector<std::string>& dynamics_tokens,
                                 const std::vector<std::string>& consequence_tokens, const LmVocabulary& vocab,
                                 std::size_t seq_len) {
    TrainPair pair{encode(dynamics_tokens, vocab, seq_len), std::vector<std::uint8_t>(vocab.size(), 0)};
    for (const auto& tok : consequence_tokens) {
        const auto id = vocab.id(tok);
        if (id != unk_id && id != pad_id) pair.target[static_cast<std::size_t>(id)] = 1;
    }
    return pair;
}

/// Scales all gradients so their joint L2 norm is at most `max_norm`. Returns the pre-clip norm.
template <typename Scalar>
double clip_gradients(LmParams<Scalar>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto* t : std::as_const(grads).tensors()) sq += static_cast<double>(t->squaredNorm());
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const auto s = static_cast<Scalar>(max_norm / norm);
        for (auto* t : grads.tensors()) *t *= s;
    }
    return norm;
}

template <typename Scalar>
struct TrainResult {
    LmModel<Scalar> model;
    std::vector<double> history;  // mean example loss per epoch
};

/// Continues training `model` for `epochs` passes over `pairs` in shuffled
/// mini-batches. `rng` drives both shuffling and dropout.
template <typename Scalar>
std::vector<double> train_epochs(LmModel<Scalar>& model, std::span<const TrainPair> pairs, std::size_t epochs, Rng& rng) {
    if (pairs.empty()) {
        throw PreconditionError("training needs at least one pair");
    }
    std::vector<double> history;
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch_size = model.config.batch_size;
    std::vector<TrainPair> batch;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0, b = 0; start < order.size(); start += batch_size, ++b) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
                batch.push_back(pairs[order[i]]);
            }
            try {
                auto g = backward(model, std::span<const TrainPair>(batch), rng);
                clip_gradients(g.grads, model.config.clip_norm);
                adam_step(model, g.grads);
                for (const auto* t : std::as_const(model.params).tensors()) {
                    if (!t->allFinite()) throw NonFiniteError("non-finite parameter after update");
                }
                total += g.loss * static_cast<double>(batch.size());
            } catch (const NonFiniteError& e) {
                throw NonFiniteError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                                     std::to_string(b + 1) + ": " + e.what());
            }
        }
        history.push_back(total / static_cast<double>(pairs.size()));
    }
    return history;
}

/// Initializes a model from `config.seed` and trains it for `config.epochs`.
template <typename Scalar>
TrainResult<Scalar> train(std::span<const TrainPair> pairs, const LmConfig& config, const LmVocabulary& vocab,
                          PreprocessConfig preprocess = {}) {
    if (pairs.empty()) {
        throw PreconditionError("training needs at least one pair");
    }
    TrainResult<Scalar> out{init_model<Scalar>(config, vocab, std::move(preprocess)), {}};
    Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    out.history = train_epochs(out.model, pairs, config.epochs, rng);
    return out;
}

struct Prediction {
    std::string token;
    double probability;
};

/// Top-k vocabulary entries for already-tokenized input, PAD and UNK
/// excluded, ties broken by lower index.
template <typename Scalar>
std::vector<Prediction> predict_tokens(const LmModel<Scalar>& model, const std::vector<std::string>& tokens,
                                       std::size_t top_k) {
    if (top_k < 1) {
        throw PreconditionError("top_k must be >= 1");
    }
    const auto ids   = encode(tokens, model.vocab, model.config.seq_len);
    const auto probs = forward(model, std::span<const TokenId>(ids));
    std::vector<std::size_t> order;
    for (std::size_t i = 2; i < model.vocab.size(); ++i) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return probs[static_cast<Eigen::Index>(a)] > probs[static_cast<Eigen::Index>(b)];
    });
    order.resize(std::min(order.size(), top_k));
    std::vector<Prediction> out;
    for (auto i : order) {
        out.push_back({model.vocab.token(static_cast<TokenId>(i)), static_cast<double>(probs[static_cast<Eigen::Index>(i)])});
    }
    return out;
}

/// Preprocesses `text` with the model's tokenizer settings, then ranks tokens.
template <typename Scalar>
std::vector<Prediction> predict_consequence(const LmModel<Scalar>& model, std::string_view text, std::size_t top_k) {
    return predict_tokens(model, preprocess(text, model.preprocess), top_k);
}

}  // namespace reckon::lm
