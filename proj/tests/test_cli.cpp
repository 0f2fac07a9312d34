#include "reckon/cli/app.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

namespace fs = std::filesystem;
using testutil::read_text;
using testutil::write_text;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = reckon::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string sample(const char* name) { return (testutil::data_dir() / name).string(); }

fs::path fixture_corpus(const fs::path& dir) {
    return write_text(dir / "fixture.csv",
                      "id,dynamics,consequence\n1,alfa beta,x\n2,alfa beta,x\n3,alfa beta,x\n4,gamma delta,y\n");
}

fs::path embeddings(const fs::path& dir) {
    std::string body = "12 3\n";
    std::string ids;
    for (int i = 0; i < 12; ++i) {
        const double c = i < 6 ? 0.0 : 20.0;
        body += std::to_string(c + 0.1 * i) + " " + std::to_string(c - 0.05 * i) + " " + std::to_string(0.01 * i * i) + "\n";
        ids += "s" + std::to_string(i) + "\n";
    }
    write_text(dir / "ids.txt", ids);
    return write_text(dir / "emb.txt", body);
}

std::vector<std::string> lm_flags() {
    return {"--epochs", "5", "--embed-dim", "8", "--units", "6", "--dense-units", "8", "--seq-len", "8", "--batch-size", "16"};
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto rel = fs::relative(e.path(), a);
        ASSERT_TRUE(fs::exists(b / rel)) << rel;
        EXPECT_EQ(read_text(e.path()), read_text(b / rel)) << rel;
    }
    EXPECT_GT(files, 0u);
}

}  // namespace

TEST(Cli, MineRulesFixture) {
    const auto dir = testutil::scratch_dir();
    const auto r   = run({"mine-rules", "--corpus", fixture_corpus(dir).string(), "--minsupp", "0.5", "--mincnf", "0.8",
                          "--output-dir", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "out" / "rules.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "rules.dot"));
    EXPECT_NE(read_text(dir / "out" / "rules.csv").find("alfa,beta,0,0,0.750000,1.000000,1.333333"), std::string::npos);
    EXPECT_NE(r.out.find("mine-rules:"), std::string::npos);
}

TEST(Cli, ClusterTfidfK30) {
    const auto dir = testutil::scratch_dir();
    const auto r   = run({"cluster-tfidf", "--corpus", sample("sample_incidents.csv"), "--stopwords",
                          sample("stopwords_it.txt"), "--k", "30", "--output-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = nlohmann::json::parse(read_text(dir / "clusters.json"));
    EXPECT_EQ(summary["k"], 30);
    EXPECT_EQ(summary["medoid_ids"].size(), 30u);
    EXPECT_TRUE(summary.contains("per_k_table"));
    EXPECT_TRUE(fs::exists(dir / "clusters.csv"));
    EXPECT_TRUE(fs::exists(dir / "tfidf.coo"));
}

TEST(Cli, MissingCorpusIsDataError) {
    const auto dir = testutil::scratch_dir();
    const auto r   = run({"mine-rules", "--corpus", "/no/such/corpus.csv", "--output-dir", dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("/no/such/corpus.csv"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    auto r = run({"bogus"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE((r.out + r.err).find("Subcommands:"), std::string::npos);
    r = run({"mine-rules", "--no-such-flag"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE((r.out + r.err).find("--minsupp"), std::string::npos);
    r = run({});
    EXPECT_EQ(r.code, 1);
    r = run({"mine-rules", "--minsupp", "abc"});
    EXPECT_EQ(r.code, 1);
    r = run({"cluster-tfidf", "--corpus", sample("sample_incidents.csv"), "--metric", "manhattan", "--output-dir",
             testutil::scratch_dir().string()});
    EXPECT_EQ(r.code, 1);
}

TEST(Cli, HelpExitsZero) {
    const auto r = run({"train-lm", "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("--epochs"), std::string::npos);
}

TEST(Cli, InvalidThresholdIsUsageError) {
    const auto dir = testutil::scratch_dir();
    const auto r   = run({"mine-rules", "--corpus", fixture_corpus(dir).string(), "--minsupp", "1.5", "--output-dir",
                          dir.string()});
    EXPECT_EQ(r.code, 1);
}

TEST(Cli, ConfigFileAndOverride) {
    const auto dir = testutil::scratch_dir();
    const auto cfg = write_text(dir / "r.conf", "# settings\npaths.corpus = " + fixture_corpus(dir).string() +
                                                    "\nrules.minsupp = 0.5\nrules.mincnf = 0.8\nglobal.output_dir = " +
                                                    (dir / "a").string() + "\n");
    auto r = run({"mine-rules", "--config", cfg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto summary = nlohmann::json::parse(read_text(dir / "a" / "rules.json"));
    EXPECT_EQ(summary["minsupp"], 0.5);

    r = run({"mine-rules", "--config", cfg.string(), "--minsupp", "0.25", "--output-dir", (dir / "b").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    summary = nlohmann::json::parse(read_text(dir / "b" / "rules.json"));
    EXPECT_EQ(summary["minsupp"], 0.25);
    EXPECT_EQ(summary["mincnf"], 0.8);
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
    const auto dir = testutil::scratch_dir();
    const auto cfg = write_text(dir / "r.conf", "rules.minsup = 0.5\n");
    EXPECT_EQ(run({"mine-rules", "--config", cfg.string()}).code, 1);
    EXPECT_EQ(run({"mine-rules", "--config", (dir / "missing.conf").string()}).code, 2);
}

TEST(Cli, PreprocessOutputs) {
    const auto dir = testutil::scratch_dir();
    const auto r   = run({"preprocess", "--corpus", sample("sample_incidents.csv"), "--stopwords", sample("stopwords_it.txt"),
                          "--ontology", sample("ontology_sample.tsv"), "--top-k", "10", "--output-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto top = read_text(dir / "top_words.csv");
    EXPECT_EQ(std::count(top.begin(), top.end(), '\n'), 11);
    const auto report = nlohmann::json::parse(read_text(dir / "preprocess.json"));
    EXPECT_EQ(report["dropped_placeholders"], 2);
    EXPECT_NE(read_text(dir / "transactions.tsv").find("ATTREZZATURA"), std::string::npos);
}

TEST(Cli, TagsCanBeDisabled) {
    const auto dir = testutil::scratch_dir();
    const auto r   = run({"preprocess", "--corpus", sample("sample_incidents.csv"), "--ontology",
                          sample("ontology_sample.tsv"), "--use-tags", "false", "--output-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_text(dir / "transactions.tsv").find("ATTREZZATURA"), std::string::npos);
}

TEST(Cli, ClusterEmbeddings) {
    const auto dir = testutil::scratch_dir();
    const auto r   = run({"cluster-embeddings", "--embeddings", embeddings(dir).string(), "--ids", (dir / "ids.txt").string(),
                          "--k-range", "2:5", "--batch-size", "5", "--output-dir", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = nlohmann::json::parse(read_text(dir / "out" / "clusters.json"));
    EXPECT_EQ(summary["k"], 2);
    EXPECT_EQ(summary["per_k_table"].size(), 4u);
    EXPECT_NE(read_text(dir / "out" / "clusters.csv").find("s11,1"), std::string::npos);
}

TEST(Cli, ClusterEmbeddingsShapeErrorIsDataError) {
    const auto dir = testutil::scratch_dir();
    const auto bad = write_text(dir / "bad.txt", "2 3\n1 2 3\n4 5\n");
    EXPECT_EQ(run({"cluster-embeddings", "--embeddings", bad.string(), "--output-dir", dir.string()}).code, 2);
}

TEST(Cli, TrainThenPredict) {
    const auto dir = testutil::scratch_dir();
    auto args      = std::vector<std::string>{"train-lm", "--corpus", sample("sample_incidents.csv"), "--stopwords",
                                         sample("stopwords_it.txt"), "--output-dir", (dir / "t").string()};
    for (const auto& f : lm_flags()) args.push_back(f);
    auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "t" / "model" / "manifest.json"));
    const auto history = read_text(dir / "t" / "train_history.csv");
    EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 6);

    r = run({"predict", "--model", (dir / "t" / "model").string(), "--text", "operaio caduto dalla scala", "--top-k", "3",
             "--output-dir", (dir / "p").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto preds = nlohmann::json::parse(read_text(dir / "p" / "predictions.json"));
    ASSERT_EQ(preds.size(), 1u);
    EXPECT_EQ(preds[0]["predictions"].size(), 3u);

    EXPECT_EQ(run({"predict", "--model", (dir / "nope").string(), "--text", "x", "--output-dir", dir.string()}).code, 2);
    EXPECT_EQ(run({"predict", "--model", (dir / "t" / "model").string(), "--output-dir", dir.string()}).code, 1);
}

TEST(Cli, RepeatedRunsByteIdentical) {
    const auto dir = testutil::scratch_dir();
    const std::string corpus = sample("sample_incidents.csv"), stop = sample("stopwords_it.txt"),
                      onto = sample("ontology_sample.tsv");
    std::vector<std::vector<std::string>> commands{
        {"preprocess", "--corpus", corpus, "--stopwords", stop, "--ontology", onto},
        {"mine-rules", "--corpus", corpus, "--stopwords", stop, "--ontology", onto, "--max-itemset-size", "3"},
        {"cluster-tfidf", "--corpus", corpus, "--stopwords", stop, "--k-range", "2:6"},
        {"cluster-embeddings", "--embeddings", embeddings(dir).string(), "--k-range", "2:4"},
    };
    auto lm = std::vector<std::string>{"train-lm", "--corpus", corpus, "--stopwords", stop};
    for (const auto& f : lm_flags()) lm.push_back(f);
    commands.push_back(lm);
    for (std::size_t c = 0; c < commands.size(); ++c) {
        for (const char* rep : {"a", "b"}) {
            auto args = commands[c];
            args.insert(args.end(), {"--seed", "3", "--output-dir", (dir / std::to_string(c) / rep).string()});
            ASSERT_EQ(run(args).code, 0) << commands[c][0];
        }
        expect_same_tree(dir / std::to_string(c) / "a", dir / std::to_string(c) / "b");
    }
}

TEST(Cli, BinaryExitCodes) {
    const auto dir      = testutil::scratch_dir();
    const std::string b = RECKON_CLI_PATH;
    auto status = [&](const std::string& args) {
        const int raw = std::system((b + " " + args + " >" + (dir / "o.txt").string() + " 2>" + (dir / "e.txt").string()).c_str());
        return WEXITSTATUS(raw);
    };
    EXPECT_EQ(status("mine-rules --corpus " + fixture_corpus(dir).string() + " --minsupp 0.5 --mincnf 0.8 --output-dir " +
                     (dir / "out").string()),
              0);
    EXPECT_EQ(status("nonsense"), 1);
    EXPECT_EQ(status("mine-rules --corpus /no/such/file.csv --output-dir " + dir.string()), 2);
    EXPECT_NE(read_text(dir / "e.txt").find("/no/such/file.csv"), std::string::npos);
}
