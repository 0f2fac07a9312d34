#include "reckon/embeddings.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace reckon;
using testutil::write_text;

TEST(Embeddings, TextShape) {
    const auto dir = testutil::scratch_dir();
    std::string body = "3 16\n";
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 16; ++c) body += std::to_string(r * 16 + c) + (c == 15 ? "\n" : " ");
    }
    const auto m = load_embeddings(write_text(dir / "e.txt", body));
    EXPECT_EQ(m.rows(), 3);
    EXPECT_EQ(m.cols(), 16);
    EXPECT_EQ(m(2, 15), 47.0);
}

TEST(Embeddings, ShapeMismatch) {
    const auto dir = testutil::scratch_dir();
    try {
        load_embeddings(write_text(dir / "e.txt", "2 4\n1 2 3 4\n5 6 7\n"));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos);
    }
}

TEST(Embeddings, NanRejected) {
    const auto dir = testutil::scratch_dir();
    EXPECT_THROW(load_embeddings(write_text(dir / "e.txt", "1 2\n1 nan\n")), NonFiniteError);
}

TEST(Embeddings, MissingFile) {
    EXPECT_THROW(load_embeddings("/nonexistent/e.txt"), Error);
}

TEST(Embeddings, BinaryRoundTrip) {
    const auto dir = testutil::scratch_dir();
    std::mt19937_64 rng(3);
    std::normal_distribution<float> g;
    RowMatrix m(5, 7);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(g(rng));
    write_embeddings_binary(dir / "e.bin", m);
    const auto back = load_embeddings(dir / "e.bin");
    EXPECT_EQ(back, m);
    EXPECT_EQ(std::filesystem::file_size(dir / "e.bin"), 16u + 35u * 4u);
}

TEST(Embeddings, BinaryTruncated) {
    const auto dir = testutil::scratch_dir();
    write_embeddings_binary(dir / "e.bin", RowMatrix::Ones(2, 3));
    std::filesystem::resize_file(dir / "e.bin", 16 + 20);
    EXPECT_THROW(load_embeddings(dir / "e.bin"), ParseError);
}

TEST(Embeddings, TextRoundTrip) {
    const auto dir = testutil::scratch_dir();
    RowMatrix m(2, 3);
    m << 0.1, -2.5e-7, 3.0, 1e10, 0.0, -1.0 / 3.0;
    write_embeddings_text(dir / "e.txt", m);
    EXPECT_EQ(load_embeddings(dir / "e.txt", EmbeddingFormat::text), m);
}

TEST(Embeddings, Ids) {
    const auto dir = testutil::scratch_dir();
    const auto p   = write_text(dir / "ids.txt", "s1\ns2\ns3\n");
    EXPECT_EQ(load_embedding_ids(p, 3), (std::vector<std::string>{"s1", "s2", "s3"}));
    EXPECT_THROW(load_embedding_ids(p, 4), ParseError);
}
