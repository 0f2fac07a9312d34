#include "lm_fixtures.hpp"

#include <gtest/gtest.h>

using namespace reckon::lm;

TEST(Gradcheck, EveryTensorAgreesWithFiniteDifferences) {
    for (std::uint64_t seed : {1u, 2u}) {
        auto model = fixtures::gradcheck_model(seed);
        std::mt19937_64 rng(seed + 100);
        const auto batch = fixtures::random_pairs(rng, 3, 12, 5);
        const auto res   = fixtures::gradcheck(model, batch, 11, 1e-5, seed);
        EXPECT_EQ(res.tensors_covered, LmParams<double>::tensor_names().size());
        EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
    }
}

TEST(Gradcheck, DropoutMaskIsPartOfTheGraph) {
    // with a fixed mask, the train-mode loss must still be differentiated exactly
    auto model               = fixtures::gradcheck_model(9);
    model.config.dropout_rate = 0.5;
    std::mt19937_64 rng(10);
    const auto batch = fixtures::random_pairs(rng, 2, 12, 5);

    Rng r0(77);
    const auto g = backward(model, std::span<const TrainPair>(batch), r0, true);
    auto loss    = [&] {
        Rng r(77);
        double s = 0.0;
        for (const auto& ex : batch) s += bce_loss(forward(model, std::span<const TokenId>(ex.input_ids), true, r), ex.target);
        return s / static_cast<double>(batch.size());
    };
    auto params = model.params.tensors();
    auto grads  = g.grads.tensors();
    double worst = 0.0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (Eigen::Index i = 0; i < std::min<Eigen::Index>(params[t]->size(), 5); ++i) {
            const double num = oracle::central_difference(*params[t], i, 1e-5, loss);
            worst            = std::max(worst, oracle::relative_error(grads[t]->data()[i], num));
        }
    }
    EXPECT_LT(worst, 1e-4);
}
