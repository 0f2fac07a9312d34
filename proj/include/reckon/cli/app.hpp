#pragma once

// `reckon` command line: preprocess, mine-rules, cluster-tfidf,
// cluster-embeddings, train-lm, predict.
//
// Exit codes: 0 success, 1 usage error, 2 data error.
// Settings can come from a flat `section.key = value` file passed with
// --config; command-line flags take precedence over the file.

#include "reckon/config_file.hpp"
#include "reckon/corpus.hpp"
#include "reckon/embeddings.hpp"
#include "reckon/error.hpp"
#include "reckon/ipca.hpp"
#include "reckon/kmedoids.hpp"
#include "reckon/lm/artifact.hpp"
#include "reckon/lm/train.hpp"
#include "reckon/rules.hpp"
#include "reckon/rules_io.hpp"
#include "reckon/vectors.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace reckon::cli {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CorpusArgs {
    std::string corpus;
    std::string format = "auto";
    std::string stopwords;
    std::string ontology;
    bool use_tags            = true;
    std::size_t min_token_len = 2;
};

struct Settings {
    std::uint64_t seed = 0;
    std::string output_dir = "reckon-out";
    std::string config;

    CorpusArgs corpus;

    // preprocess
    std::size_t top_k        = 100;
    double train_fraction    = 1.0;

    // mine-rules
    MiningConfig mining;

    // cluster-tfidf / cluster-embeddings
    std::optional<std::size_t> tfidf_k = 30;
    std::string tfidf_k_range;
    std::string tfidf_metric = "cosine";
    std::string embeddings;
    std::string ids;
    std::string embeddings_format = "auto";
    std::optional<std::size_t> emb_k;
    std::string emb_k_range = "2:100";
    std::string emb_metric  = "euclidean";
    double variance         = 0.85;
    std::size_t ipca_batch  = 256;
    std::optional<std::size_t> max_components;
    std::size_t max_iter = 100;

    // train-lm / predict
    lm::LmConfig lm;
    std::string model;
    std::vector<std::string> texts;
    std::size_t predict_top_k = 10;
};

namespace detail {

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw Error("cannot write '" + path.string() + "'");
}

inline PreprocessConfig preprocess_config(const CorpusArgs& a) {
    PreprocessConfig c;
    c.min_token_len = a.min_token_len;
    if (!a.stopwords.empty()) {
        if (!fs::exists(a.stopwords)) throw Error("stopword file not found: '" + a.stopwords + "'");
        c.stopwords = load_stopwords(a.stopwords);
    }
    return c;
}

inline std::optional<TagOntology> ontology(const CorpusArgs& a) {
    if (a.ontology.empty() || !a.use_tags) return std::nullopt;
    if (!fs::exists(a.ontology)) throw Error("ontology file not found: '" + a.ontology + "'");
    return load_ontology(a.ontology);
}

inline Corpus corpus(const CorpusArgs& a, const PreprocessConfig& pre) {
    if (a.corpus.empty()) throw UsageError("--corpus is required");
    CorpusFormat fmt_ = CorpusFormat::csv;
    if (a.format == "auto") fmt_ = corpus_format_from_path(a.corpus);
    else if (a.format == "jsonl") fmt_ = CorpusFormat::jsonl;
    else if (a.format != "csv") throw UsageError("--format must be csv, jsonl or auto");
    return load_corpus(a.corpus, fmt_, pre.placeholders);
}

inline std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument(s);
        return {std::stoul(s.substr(0, colon)), std::stoul(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("k range must look like LO:HI, got '" + s + "'");
    }
}

inline Metric metric(const std::string& s) {
    try {
        return parse_metric(s);
    } catch (const PreconditionError& e) {
        throw UsageError(e.what());
    }
}

/// Fits either a fixed k or a silhouette sweep and writes the cluster report.
inline std::string cluster_and_report(const DistanceMatrix& d, const std::vector<std::string>& ids,
                                      std::optional<std::size_t> k, const std::string& k_range, Metric m,
                                      std::size_t max_iter, std::uint64_t seed, const fs::path& out_dir,
                                      nlohmann::json summary) {
    ClusterAssignment best;
    nlohmann::json table = nlohmann::json::array();
    bool truncated       = false;
    if (k) {
        if (*k < 2) throw UsageError("--k must be >= 2");
        best = kmedoids_fit(d, *k, max_iter, seed);
        table.push_back({{"k", *k}, {"cost", best.cost}, {"silhouette", best.silhouette}});
    } else {
        const auto [lo, hi] = parse_range(k_range);
        if (lo < 2 || lo > hi) throw UsageError("k range must satisfy 2 <= LO <= HI");
        auto sweep = sweep_k(d, lo, hi, max_iter, seed);
        best       = std::move(sweep.best);
        truncated  = sweep.truncated;
        for (const auto& row : sweep.table) {
            table.push_back({{"k", row.k}, {"cost", row.cost}, {"silhouette", row.silhouette}});
        }
    }

    std::ostringstream csv;
    csv << "id,cluster\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        csv << reckon::detail::csv_field(ids[i]) << ',' << best.labels[i] << '\n';
    }
    write_file(out_dir / "clusters.csv", csv.str());

    std::vector<std::string> medoid_ids;
    for (auto m_ : best.medoids) medoid_ids.push_back(ids[m_]);
    summary["k"]            = best.k();
    summary["cost"]         = best.cost;
    summary["silhouette"]   = best.silhouette;
    summary["medoid_ids"]   = medoid_ids;
    summary["per_k_table"]  = table;
    summary["metric"]       = to_string(m);
    summary["seed"]         = seed;
    summary["truncated"]    = truncated;
    summary["swap_passes"]  = best.pass_costs.size();
    write_file(out_dir / "clusters.json", summary.dump(2) + "\n");
    return fmt::format("k={} cost={:.6f} silhouette={:.6f}", best.k(), best.cost, best.silhouette);
}

inline std::string run_preprocess(const Settings& s, const fs::path& out) {
    const auto pre   = preprocess_config(s.corpus);
    const auto corp  = corpus(s.corpus, pre);
    const auto onto  = ontology(s.corpus);
    if (!(s.train_fraction > 0.0 && s.train_fraction <= 1.0)) throw UsageError("--train-fraction must be in (0,1]");
    if (s.top_k < 1) throw UsageError("--top-k must be >= 1");

    const auto raw_tokens = tokenize_dynamics(corp, pre);
    const auto n_train    = static_cast<std::size_t>(std::ceil(s.train_fraction * static_cast<double>(corp.size())));
    const std::vector<std::vector<std::string>> train_tokens(raw_tokens.begin(),
                                                             raw_tokens.begin() + static_cast<std::ptrdiff_t>(n_train));
    const auto top = top_frequent_words(train_tokens, s.top_k);

    std::ostringstream top_csv;
    top_csv << "rank,word,count,tag\n";
    std::size_t mapped = 0;
    for (std::size_t i = 0; i < top.size(); ++i) {
        const std::string* tag = onto ? onto->find(top[i].first) : nullptr;
        mapped += tag != nullptr;
        top_csv << i + 1 << ',' << reckon::detail::csv_field(top[i].first) << ',' << top[i].second << ','
                << (tag ? reckon::detail::csv_field(*tag) : std::string{}) << '\n';
    }
    write_file(out / "top_words.csv", top_csv.str());

    const auto ts = to_transactions(corp, pre, onto ? &*onto : nullptr);
    std::ostringstream tsv;
    std::set<std::string> items;
    for (const auto& t : ts.transactions) {
        tsv << t.id << '\t';
        for (std::size_t i = 0; i < t.items.size(); ++i) tsv << (i ? " " : "") << t.items[i];
        tsv << '\n';
        items.insert(t.items.begin(), t.items.end());
    }
    write_file(out / "transactions.tsv", tsv.str());

    nlohmann::json report{{"records", corp.size()},
                          {"rows_read", corp.report.rows_read},
                          {"dropped_placeholders", corp.report.dropped},
                          {"transactions", ts.transactions.size()},
                          {"flagged_empty", ts.flagged},
                          {"distinct_items", items.size()},
                          {"top_k", s.top_k},
                          {"train_records", n_train},
                          {"top_words_tagged", mapped},
                          {"tags_applied", onto.has_value()}};
    write_file(out / "preprocess.json", report.dump(2) + "\n");
    return fmt::format("preprocess: {} records ({} dropped), {} transactions ({} flagged), {} distinct items",
                       corp.size(), corp.report.dropped, ts.transactions.size(), ts.flagged.size(), items.size());
}

inline std::string run_mine_rules(const Settings& s, const fs::path& out) {
    const auto pre  = preprocess_config(s.corpus);
    const auto corp = corpus(s.corpus, pre);
    const auto onto = ontology(s.corpus);
    const auto ts   = to_transactions(corp, pre, onto ? &*onto : nullptr);
    try {
        s.mining.validate(ts.transactions.size());
    } catch (const PreconditionError& e) {
        throw UsageError(e.what());
    }
    const auto report = fisinfis_mine_report(ts.transactions, s.mining);

    std::ostringstream csv;
    write_rules_csv(csv, report.rules);
    write_file(out / "rules.csv", csv.str());
    write_file(out / "rules.dot", export_rule_graph(report.rules));

    std::size_t positive = 0;
    for (const auto& r : report.rules) positive += r.positive();
    nlohmann::json summary{{"transactions", ts.transactions.size()},
                           {"flagged_empty", ts.flagged},
                           {"excluded_items", report.excluded_items},
                           {"frequent_itemsets", report.n_frequent},
                           {"infrequent_itemsets", report.n_infrequent},
                           {"rules", report.rules.size()},
                           {"positive_rules", positive},
                           {"negative_rules", report.rules.size() - positive},
                           {"minsupp", s.mining.minsupp},
                           {"mincnf", s.mining.mincnf},
                           {"idf_min", report.idf_min},
                           {"idf_max", report.idf_max},
                           {"max_itemset_size", s.mining.max_itemset_size},
                           {"require_lift_gt1", s.mining.require_lift_gt1},
                           {"tags_applied", onto.has_value()}};
    write_file(out / "rules.json", summary.dump(2) + "\n");
    return fmt::format("mine-rules: {} transactions, {} rules ({} positive, {} negative)", ts.transactions.size(),
                       report.rules.size(), positive, report.rules.size() - positive);
}

inline std::string run_cluster_tfidf(const Settings& s, const fs::path& out) {
    const auto pre    = preprocess_config(s.corpus);
    const auto corp   = corpus(s.corpus, pre);
    const auto onto   = ontology(s.corpus);
    const auto tokens = tokenize_dynamics(corp, pre, onto ? &*onto : nullptr);

    std::vector<Document> docs;
    std::vector<std::string> ids, flagged;
    for (std::size_t i = 0; i < corp.size(); ++i) {
        if (tokens[i].empty()) {
            flagged.push_back(corp.records[i].id);
            continue;
        }
        docs.push_back(make_document(corp.records[i].id, tokens[i]));
        ids.push_back(corp.records[i].id);
    }
    if (docs.size() < 2) throw EmptyInputError("need at least two non-empty descriptions to cluster");
    const auto index  = build_term_index(docs);
    const auto matrix = tfidf_matrix(docs, index);

    std::ostringstream coo;
    write_coo(coo, matrix);
    write_file(out / "tfidf.coo", coo.str());
    std::ostringstream terms;
    for (const auto& t : index.terms()) terms << t << '\n';
    write_file(out / "terms.txt", terms.str());

    const auto m = metric(s.tfidf_metric);
    const auto d = distance_matrix(matrix, m);
    nlohmann::json summary{{"documents", docs.size()},
                           {"features", index.size()},
                           {"nonzeros", matrix.entries.size()},
                           {"flagged_empty", flagged},
                           {"tags_applied", onto.has_value()}};
    const auto k = s.tfidf_k_range.empty() ? s.tfidf_k : std::nullopt;
    return "cluster-tfidf: " + fmt::format("{} documents, {} features, ", docs.size(), index.size()) +
           cluster_and_report(d, ids, k, s.tfidf_k_range, m, s.max_iter, s.seed, out, summary);
}

inline std::string run_cluster_embeddings(const Settings& s, const fs::path& out) {
    if (s.embeddings.empty()) throw UsageError("--embeddings is required");
    EmbeddingFormat f = EmbeddingFormat::automatic;
    if (s.embeddings_format == "text") f = EmbeddingFormat::text;
    else if (s.embeddings_format == "binary") f = EmbeddingFormat::binary;
    else if (s.embeddings_format != "auto") throw UsageError("--embeddings-format must be auto, text or binary");
    if (!(s.variance >= 0.0 && s.variance <= 1.0)) throw UsageError("--variance must be in [0,1]");
    if (s.ipca_batch < 1) throw UsageError("--batch-size must be >= 1");

    const auto points = load_embeddings(s.embeddings, f);
    if (points.rows() < 2) throw EmptyInputError("need at least two embedding rows");
    std::vector<std::string> ids;
    if (!s.ids.empty()) {
        if (!fs::exists(s.ids)) throw Error("id file not found: '" + s.ids + "'");
        ids = load_embedding_ids(s.ids, static_cast<std::size_t>(points.rows()));
    } else {
        for (Eigen::Index i = 0; i < points.rows(); ++i) ids.push_back(std::to_string(i));
    }

    const auto model     = ipca_fit(points, s.ipca_batch, s.max_components);
    const auto reduction = reduce_to_variance(model, points, s.variance);
    const auto m         = metric(s.emb_metric);
    const auto d         = distance_matrix(reduction.reduced, m);

    std::vector<double> ratios(model.explained_variance_ratio.data(),
                               model.explained_variance_ratio.data() + model.explained_variance_ratio.size());
    nlohmann::json summary{{"rows", points.rows()},
                           {"features", points.cols()},
                           {"components", reduction.m},
                           {"explained_variance", reduction.cumulative_ratio},
                           {"variance_threshold", s.variance},
                           {"explained_variance_ratio", ratios}};
    return "cluster-embeddings: " +
           fmt::format("{}x{} -> {} components ({:.4f} variance), ", points.rows(), points.cols(), reduction.m,
                       reduction.cumulative_ratio) +
           cluster_and_report(d, ids, s.emb_k, s.emb_k_range, m, s.max_iter, s.seed, out, summary);
}

inline std::string run_train_lm(const Settings& s, const fs::path& out) {
    auto config = s.lm;
    config.seed = s.seed;
    try {
        config.validate();
    } catch (const PreconditionError& e) {
        throw UsageError(e.what());
    }
    const auto pre  = preprocess_config(s.corpus);
    const auto corp = corpus(s.corpus, pre);

    std::vector<std::vector<std::string>> dyn, cons, all;
    std::size_t skipped = 0;
    for (const auto& rec : corp.records) {
        auto d = preprocess(rec.dynamics, pre);
        auto c = preprocess(rec.consequence, pre);
        if (d.empty() || c.empty()) {
            ++skipped;
            continue;
        }
        all.push_back(d);
        all.push_back(c);
        dyn.push_back(std::move(d));
        cons.push_back(std::move(c));
    }
    if (dyn.empty()) throw EmptyInputError("no record has both dynamics and consequence tokens");
    const auto vocab = lm::fit_vocab(all, config.vocab_size);
    std::vector<lm::TrainPair> pairs;
    for (std::size_t i = 0; i < dyn.size(); ++i) {
        pairs.push_back(lm::make_train_pair(dyn[i], cons[i], vocab, config.seq_len));
    }
    auto result = lm::train<float>(pairs, config, vocab, pre);
    lm::save_model(result.model, out / "model");

    std::ostringstream hist;
    hist << "epoch,loss\n";
    for (std::size_t e = 0; e < result.history.size(); ++e) hist << e + 1 << ',' << fmt::format("{:.9g}", result.history[e]) << '\n';
    write_file(out / "train_history.csv", hist.str());

    nlohmann::json summary{{"pairs", pairs.size()},
                           {"skipped_records", skipped},
                           {"vocab_size", vocab.size()},
                           {"parameters", result.model.params.parameter_count()},
                           {"config", lm::config_to_json(config)},
                           {"loss_history", result.history}};
    write_file(out / "train.json", summary.dump(2) + "\n");
    return fmt::format("train-lm: {} pairs, vocab {}, {} epochs, final loss {:.6f}", pairs.size(), vocab.size(),
                       result.history.size(), result.history.empty() ? 0.0 : result.history.back());
}

inline std::string run_predict(const Settings& s, const fs::path& out) {
    if (s.model.empty()) throw UsageError("--model is required");
    if (s.predict_top_k < 1) throw UsageError("--top-k must be >= 1");
    if (!fs::exists(fs::path(s.model) / "manifest.json")) throw Error("model not found: '" + s.model + "'");
    const auto model = lm::load_model<float>(s.model);

    std::vector<std::pair<std::string, std::string>> queries;
    for (std::size_t i = 0; i < s.texts.size(); ++i) queries.emplace_back("text" + std::to_string(i + 1), s.texts[i]);
    if (!s.corpus.corpus.empty()) {
        const auto corp = corpus(s.corpus, model.preprocess);
        for (const auto& rec : corp.records) queries.emplace_back(rec.id, rec.dynamics);
    }
    if (queries.empty()) throw UsageError("give --text or --corpus");

    nlohmann::json results = nlohmann::json::array();
    for (const auto& [id, text] : queries) {
        nlohmann::json preds = nlohmann::json::array();
        for (const auto& p : lm::predict_consequence(model, text, s.predict_top_k)) {
            preds.push_back({{"token", p.token}, {"probability", p.probability}});
        }
        results.push_back({{"id", id}, {"text", text}, {"predictions", preds}});
    }
    write_file(out / "predictions.json", results.dump(2) + "\n");
    return fmt::format("predict: {} inputs, top-{} tokens", queries.size(), s.predict_top_k);
}

/// Value of --config if present on the command line.
inline std::string find_config_arg(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Settings s;
    CLI::App app{"reckon: association rules, clustering and consequence prediction for incident descriptions",
                 "reckon"};
    app.failure_message(CLI::FailureMessage::help);
    app.require_subcommand(1);
    app.fallthrough();

    std::vector<std::pair<CLI::Option*, std::string>> keyed;
    auto key = [&](CLI::Option* o, const std::string& k) {
        keyed.emplace_back(o, k);
        return o;
    };

    key(app.add_option("--seed", s.seed, "Random seed")->capture_default_str(), "global.seed");
    key(app.add_option("--output-dir", s.output_dir, "Directory for output files")->capture_default_str(),
        "global.output_dir");
    app.add_option("--config", s.config, "Flat key=value settings file (flags override it)");

    auto corpus_opts = [&](CLI::App* sub, bool tags) {
        key(sub->add_option("--corpus", s.corpus.corpus, "Incident corpus (CSV or JSONL)"), "paths.corpus");
        key(sub->add_option("--format", s.corpus.format, "csv, jsonl or auto")->capture_default_str(), "paths.format");
        key(sub->add_option("--stopwords", s.corpus.stopwords, "Stopword list, one word per line"), "paths.stopwords");
        key(sub->add_option("--min-token-len", s.corpus.min_token_len, "Minimum token length")->capture_default_str(),
            "corpus.min_token_len");
        if (tags) {
            key(sub->add_option("--ontology", s.corpus.ontology, "word<TAB>TAG ontology"), "paths.ontology");
            key(sub->add_option("--use-tags", s.corpus.use_tags, "Apply ontology tags when an ontology is given")
                    ->capture_default_str(),
                "corpus.use_tags");
        }
    };

    auto* pre = app.add_subcommand("preprocess", "Tokenize, tag and list the most frequent words");
    corpus_opts(pre, true);
    key(pre->add_option("--top-k", s.top_k, "Number of frequent words to list")->capture_default_str(), "corpus.top_k");
    key(pre->add_option("--train-fraction", s.train_fraction, "Leading fraction of records used for the word ranking")
            ->capture_default_str(),
        "corpus.train_fraction");

    auto* mine = app.add_subcommand("mine-rules", "Mine positive and negative association rules");
    corpus_opts(mine, true);
    key(mine->add_option("--minsupp", s.mining.minsupp, "Minimum support")->capture_default_str(), "rules.minsupp");
    key(mine->add_option("--mincnf", s.mining.mincnf, "Minimum confidence")->capture_default_str(), "rules.mincnf");
    key(mine->add_option("--idf-min", s.mining.idf_min, "Lower IDF bound")->capture_default_str(), "rules.idf_min");
    key(mine->add_option("--idf-max", s.mining.idf_max, "Upper IDF bound (default ln|T| - 0.1)"), "rules.idf_max");
    key(mine->add_option("--max-itemset-size", s.mining.max_itemset_size, "Largest |A|+|B|")->capture_default_str(),
        "rules.max_itemset_size");
    key(mine->add_option("--require-lift-gt1", s.mining.require_lift_gt1, "Only keep rules with lift > 1")
            ->capture_default_str(),
        "rules.require_lift_gt1");

    auto* ctf = app.add_subcommand("cluster-tfidf", "K-Medoids over TF-IDF rows of the descriptions");
    corpus_opts(ctf, true);
    key(ctf->add_option("--k", s.tfidf_k, "Number of clusters")->capture_default_str(), "clustering.k");
    key(ctf->add_option("--k-range", s.tfidf_k_range, "Sweep LO:HI by silhouette instead of a fixed k"),
        "clustering.k_range");
    key(ctf->add_option("--metric", s.tfidf_metric, "cosine or euclidean")->capture_default_str(), "clustering.metric");
    key(ctf->add_option("--max-iter", s.max_iter, "Maximum SWAP passes")->capture_default_str(), "clustering.max_iter");

    auto* cem = app.add_subcommand("cluster-embeddings", "IPCA reduction then K-Medoids over sentence embeddings");
    key(cem->add_option("--embeddings", s.embeddings, "Embedding matrix (text or .bin)"), "paths.embeddings");
    key(cem->add_option("--ids", s.ids, "Sentence ids, one per row"), "paths.ids");
    key(cem->add_option("--embeddings-format", s.embeddings_format, "auto, text or binary")->capture_default_str(),
        "clustering.embeddings_format");
    key(cem->add_option("--variance", s.variance, "Explained-variance threshold")->capture_default_str(),
        "clustering.variance");
    key(cem->add_option("--batch-size", s.ipca_batch, "IPCA batch size")->capture_default_str(), "clustering.batch_size");
    key(cem->add_option("--max-components", s.max_components, "Cap on retained IPCA components"),
        "clustering.max_components");
    key(cem->add_option("--k", s.emb_k, "Fixed number of clusters (overrides --k-range)"), "clustering.k");
    key(cem->add_option("--k-range", s.emb_k_range, "Silhouette sweep LO:HI")->capture_default_str(),
        "clustering.k_range");
    key(cem->add_option("--metric", s.emb_metric, "cosine or euclidean")->capture_default_str(), "clustering.metric");
    key(cem->add_option("--max-iter", s.max_iter, "Maximum SWAP passes")->capture_default_str(), "clustering.max_iter");

    auto* trn = app.add_subcommand("train-lm", "Train the consequence predictor");
    corpus_opts(trn, false);
    auto& c = s.lm;
    key(trn->add_option("--vocab-size", c.vocab_size, "Vocabulary cap incl. PAD/UNK")->capture_default_str(), "lm.vocab_size");
    key(trn->add_option("--embed-dim", c.embed_dim, "Embedding size")->capture_default_str(), "lm.embed_dim");
    key(trn->add_option("--units", c.recurrent_units, "LSTM units per direction")->capture_default_str(), "lm.recurrent_units");
    key(trn->add_option("--dense-units", c.dense_units, "Dense layer width")->capture_default_str(), "lm.dense_units");
    key(trn->add_option("--dropout", c.dropout_rate, "Dropout rate")->capture_default_str(), "lm.dropout_rate");
    key(trn->add_option("--seq-len", c.seq_len, "Input length in tokens")->capture_default_str(), "lm.seq_len");
    key(trn->add_option("--lr", c.learning_rate, "ADAM learning rate")->capture_default_str(), "lm.learning_rate");
    key(trn->add_option("--beta1", c.beta1, "ADAM beta1")->capture_default_str(), "lm.beta1");
    key(trn->add_option("--beta2", c.beta2, "ADAM beta2")->capture_default_str(), "lm.beta2");
    key(trn->add_option("--epsilon", c.epsilon, "ADAM epsilon")->capture_default_str(), "lm.epsilon");
    key(trn->add_option("--clip-norm", c.clip_norm, "Gradient norm clip")->capture_default_str(), "lm.clip_norm");
    key(trn->add_option("--batch-size", c.batch_size, "Mini-batch size")->capture_default_str(), "lm.batch_size");
    key(trn->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str(), "lm.epochs");

    auto* prd = app.add_subcommand("predict", "Rank consequence tokens for new descriptions");
    key(prd->add_option("--model", s.model, "Model directory written by train-lm"), "paths.model");
    prd->add_option("--text", s.texts, "Description to score (repeatable)");
    key(prd->add_option("--corpus", s.corpus.corpus, "Score every record of a corpus"), "paths.corpus");
    key(prd->add_option("--format", s.corpus.format, "csv, jsonl or auto")->capture_default_str(), "paths.format");
    key(prd->add_option("--top-k", s.predict_top_k, "Tokens per prediction")->capture_default_str(), "lm.top_k");

    try {
        const auto config_path = detail::find_config_arg(argc, argv);
        if (!config_path.empty()) {
            std::map<std::string, std::string> cfg;
            try {
                cfg = load_flat_config(config_path);
            } catch (const Error& e) {
                err << "error: " << e.what() << '\n';
                return 2;
            }
            std::set<std::string> known;
            for (const auto& [opt, k] : keyed) known.insert(k);
            for (const auto& [k, v] : cfg) {
                if (known.count(k) == 0) throw UsageError("unknown config key '" + k + "'");
            }
            for (const auto& [opt, k] : keyed) {
                auto it = cfg.find(k);
                if (it != cfg.end()) opt->default_val(it->second);
            }
        }
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        const fs::path out_dir = s.output_dir;
        fs::create_directories(out_dir);
        std::string summary;
        if (*pre) summary = detail::run_preprocess(s, out_dir);
        else if (*mine) summary = detail::run_mine_rules(s, out_dir);
        else if (*ctf) summary = detail::run_cluster_tfidf(s, out_dir);
        else if (*cem) summary = detail::run_cluster_embeddings(s, out_dir);
        else if (*trn) summary = detail::run_train_lm(s, out_dir);
        else if (*prd) summary = detail::run_predict(s, out_dir);
        out << summary << '\n';
        return 0;
    } catch (const UsageError& e) {
        auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << "usage error: " << e.what() << "\n\n" << sub->help();
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<const char*> argv{"reckon"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace reckon::cli
