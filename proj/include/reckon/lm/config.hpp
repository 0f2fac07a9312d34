#pragma once

#include "reckon/error.hpp"

#include <cstddef>
#include <cstdint>
#include <string>

namespace reckon::lm {

/// Architecture and optimizer settings. The defaults are the full-size
/// predictor: 5000-token vocabulary, 128-d embeddings, two bidirectional LSTM
/// layers of 100 units per direction, two 50-unit ReLU layers, 50% dropout.
struct LmConfig {
    std::size_t vocab_size      = 5000;  // tokenizer cap, including PAD and UNK
    std::size_t embed_dim       = 128;
    std::size_t recurrent_units = 100;   // per direction
    std::size_t dense_units     = 50;
    double dropout_rate         = 0.5;
    std::size_t seq_len         = 32;

    double learning_rate = 1e-3;
    double beta1         = 0.9;
    double beta2         = 0.999;
    double epsilon       = 1e-8;
    double clip_norm     = 5.0;

    std::size_t batch_size = 32;
    std::size_t epochs     = 10;
    std::uint64_t seed     = 0;

    static LmConfig paper_defaults() { return LmConfig{}; }

    void validate() const {
        auto positive = [](std::size_t v, const char* name) {
            if (v < 1) throw PreconditionError(std::string(name) + " must be >= 1");
        };
        positive(embed_dim, "embed_dim");
        positive(recurrent_units, "recurrent_units");
        positive(dense_units, "dense_units");
        positive(seq_len, "seq_len");
        positive(batch_size, "batch_size");
        if (vocab_size < 3) throw PreconditionError("vocab_size must be >= 3 (PAD, UNK and one token)");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw PreconditionError("dropout_rate must be in [0,1)");
        if (!(learning_rate > 0.0)) throw PreconditionError("learning_rate must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
            throw PreconditionError("beta1 and beta2 must be in [0,1)");
        }
        if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be > 0");
        if (!(clip_norm > 0.0)) throw PreconditionError("clip_norm must be > 0");
    }
};

}  // namespace reckon::lm
