#pragma once

// Incident corpus ingestion, text normalization, ontology tag substitution and
// the transaction database consumed by the mining, vectorization and language
// model stages.

#include "reckon/error.hpp"

#include <nlohmann/json.hpp>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace reckon {

struct RawRecord {
    std::string id;
    std::string dynamics;
    std::string consequence;
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t dropped   = 0;  // placeholder dynamics
};

struct Corpus {
    std::vector<RawRecord> records;
    std::filesystem::path source;
    std::chrono::system_clock::time_point loaded_at{};
    LoadReport report;

    std::size_t size() const noexcept { return records.size(); }
};

enum class CorpusFormat { csv, jsonl };

inline std::set<std::string> default_placeholders() { return {"", "ND", "N.D.", "-"}; }

struct PreprocessConfig {
    std::set<std::string> stopwords;
    std::size_t min_token_len = 2;
    std::set<std::string> placeholders = default_placeholders();

    void validate() const;
};

/// word -> TAG mapping. Words are stored normalized (NFC, lowercase), tags
/// uppercase. Construct through `TagOntology::from_pairs` or `load_ontology`
/// so the invariants are checked.
class TagOntology {
public:
    TagOntology() = default;

    static TagOntology from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs);

    const std::string* find(const std::string& word) const {
        auto it = pairs_.find(word);
        return it == pairs_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, std::string>& pairs() const noexcept { return pairs_; }
    bool empty() const noexcept { return pairs_.empty(); }
    std::size_t size() const noexcept { return pairs_.size(); }

private:
    std::map<std::string, std::string> pairs_;
};

struct Transaction {
    std::string id;
    std::vector<std::string> items;  // sorted, unique
};

struct TransactionSet {
    std::vector<Transaction> transactions;  // non-empty item sets only
    std::vector<std::string> flagged;       // ids whose item set came out empty
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw Error("ICU NFC normalizer unavailable");
    }
    return *n;
}

inline icu::UnicodeString normalize_lower(std::string_view text) {
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString s = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    s = nfc().normalize(s, status);
    s.toLower(icu::Locale::getRoot());
    s = nfc().normalize(s, status);
    if (U_FAILURE(status)) {
        throw Error("unicode normalization failed");
    }
    return s;
}

inline std::string to_utf8(const icu::UnicodeString& s) {
    std::string out;
    s.toUTF8String(out);
    return out;
}

inline std::string to_upper_utf8(std::string_view text) {
    icu::UnicodeString s = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    s.toUpper(icu::Locale::getRoot());
    return to_utf8(s);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void strip_bom(std::string& s) {
    if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF && static_cast<unsigned char>(s[1]) == 0xBB &&
        static_cast<unsigned char>(s[2]) == 0xBF) {
        s.erase(0, 3);
    }
}

struct CsvRow {
    std::vector<std::string> fields;
    std::size_t line = 0;  // line the record starts on
};

/// RFC-4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
inline std::vector<CsvRow> parse_csv(const std::string& text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes    = false;
    bool field_quoted = false;
    bool row_started  = false;
    std::size_t line  = 1;
    row.line          = 1;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.fields.size() == 1 && row.fields[0].empty();
        if (!blank) {
            rows.push_back(std::move(row));
        }
        row        = CsvRow{};
        row_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (!row_started) {
            row.line    = line;
            row_started = true;
        }
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_quoted) {
                    throw ParseError("unexpected quote inside unquoted field", line);
                }
                in_quotes    = true;
                field_quoted = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') {
                    break;
                }
                end_row();
                ++line;
                break;
            case '\n':
                end_row();
                ++line;
                break;
            default:
                if (field_quoted) {
                    throw ParseError("characters after closing quote", line);
                }
                field.push_back(c);
        }
    }
    if (in_quotes) {
        throw ParseError("unterminated quoted field", row.line);
    }
    if (row_started) {
        end_row();
    }
    return rows;
}

class RecordCollector {
public:
    RecordCollector(Corpus& corpus, const std::set<std::string>& placeholders)
        : corpus_(corpus), placeholders_(placeholders) {}

    void add(RawRecord rec, std::size_t line) {
        ++corpus_.report.rows_read;
        rec.id = trim(rec.id);
        if (rec.id.empty()) {
            throw ParseError("empty id", line);
        }
        if (!seen_.insert(rec.id).second) {
            throw DuplicateIdError(rec.id);
        }
        if (placeholders_.count(trim(rec.dynamics)) > 0) {
            ++corpus_.report.dropped;
            return;
        }
        corpus_.records.push_back(std::move(rec));
    }

private:
    Corpus& corpus_;
    const std::set<std::string>& placeholders_;
    std::unordered_set<std::string> seen_;
};

}  // namespace detail

inline void PreprocessConfig::validate() const {
    if (min_token_len < 1) {
        throw PreconditionError("min_token_len must be >= 1");
    }
    for (const auto& w : stopwords) {
        if (detail::to_utf8(detail::normalize_lower(w)) != w) {
            throw PreconditionError("stopword '" + w + "' is not normalized lowercase");
        }
    }
}

inline CorpusFormat corpus_format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".jsonl" || ext == ".ndjson") ? CorpusFormat::jsonl : CorpusFormat::csv;
}

/// Loads `id,dynamics,consequence` records. Rows whose dynamics is a
/// placeholder are dropped and counted in `Corpus::report`.
inline Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                          const std::set<std::string>& placeholders = default_placeholders()) {
    if (!std::filesystem::exists(path)) {
        throw Error("corpus file not found: '" + path.string() + "'");
    }
    std::string text = detail::read_file(path);
    detail::strip_bom(text);

    Corpus corpus;
    corpus.source    = path;
    corpus.loaded_at = std::chrono::system_clock::now();
    detail::RecordCollector collect(corpus, placeholders);

    if (format == CorpusFormat::csv) {
        auto rows = detail::parse_csv(text);
        if (rows.empty()) {
            throw EmptyInputError("corpus '" + path.string() + "' has no header");
        }
        std::optional<std::size_t> id_col, dyn_col, cons_col;
        const auto& header = rows.front().fields;
        for (std::size_t c = 0; c < header.size(); ++c) {
            const auto name = detail::trim(header[c]);
            if (name == "id") id_col = c;
            else if (name == "dynamics") dyn_col = c;
            else if (name == "consequence") cons_col = c;
        }
        if (!id_col || !dyn_col) {
            throw ParseError("header must contain 'id' and 'dynamics' columns", rows.front().line);
        }
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.fields.size() != header.size()) {
                throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                     std::to_string(row.fields.size()),
                                 row.line);
            }
            RawRecord rec{row.fields[*id_col], row.fields[*dyn_col], cons_col ? row.fields[*cons_col] : std::string{}};
            collect.add(std::move(rec), row.line);
        }
    } else {
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::trim(line).empty()) {
                continue;
            }
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
            }
            if (!obj.is_object() || !obj.contains("id") || !obj.contains("dynamics")) {
                throw ParseError("object must have 'id' and 'dynamics'", line_no);
            }
            auto as_text = [&](const char* key) -> std::string {
                if (!obj.contains(key) || obj[key].is_null()) return {};
                const auto& v = obj[key];
                if (v.is_string()) return v.get<std::string>();
                if (v.is_number()) return v.dump();
                throw ParseError(std::string("field '") + key + "' must be a string", line_no);
            };
            collect.add(RawRecord{as_text("id"), as_text("dynamics"), as_text("consequence")}, line_no);
        }
    }

    if (corpus.records.empty()) {
        throw EmptyInputError("corpus '" + path.string() + "' has no usable rows");
    }
    return corpus;
}

/// NFC + lowercase form of a single word, as used for stopword and ontology keys.
inline std::string normalize_word(std::string_view word) {
    return detail::to_utf8(detail::normalize_lower(detail::trim(word)));
}

/// Lowercased, NFC-normalized maximal alphabetic runs of at least
/// `min_token_len` code points, with stopwords removed. Digits and
/// punctuation act as separators.
inline std::vector<std::string> preprocess(std::string_view text, const PreprocessConfig& config) {
    const icu::UnicodeString s = detail::normalize_lower(text);
    std::vector<std::string> tokens;
    icu::UnicodeString current;
    std::size_t current_len = 0;

    auto flush = [&] {
        if (current_len >= config.min_token_len) {
            auto tok = detail::to_utf8(current);
            if (config.stopwords.count(tok) == 0) {
                tokens.push_back(std::move(tok));
            }
        }
        current.remove();
        current_len = 0;
    };

    for (int32_t i = 0; i < s.length();) {
        const UChar32 c = s.char32At(i);
        i += U16_LENGTH(c);
        const bool mark = current_len > 0 && u_charType(c) == U_NON_SPACING_MARK;
        if (u_isalpha(c)) {
            current.append(c);
            ++current_len;
        } else if (mark) {
            current.append(c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

inline std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::istringstream in(detail::read_file(path));
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto w = detail::trim(line);
        if (w.empty() || w.front() == '#') {
            continue;
        }
        words.insert(normalize_word(w));
    }
    return words;
}

inline TagOntology TagOntology::from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
    TagOntology onto;
    for (const auto& [raw_word, raw_tag] : pairs) {
        const auto word = normalize_word(raw_word);
        const auto tag  = detail::to_upper_utf8(detail::trim(raw_tag));
        if (word.empty() || tag.empty()) {
            throw PreconditionError("ontology entries need a word and a tag");
        }
        auto [it, inserted] = onto.pairs_.emplace(word, tag);
        if (!inserted && it->second != tag) {
            throw PreconditionError("word '" + word + "' mapped to both " + it->second + " and " + tag);
        }
    }
    for (const auto& [word, tag] : onto.pairs_) {
        if (onto.pairs_.count(normalize_word(tag)) > 0) {
            throw PreconditionError("tag '" + tag + "' is also a mapped word");
        }
    }
    return onto;
}

/// Reads `word<TAB>TAG` lines; blank lines and `#` comments are skipped.
inline TagOntology load_ontology(const std::filesystem::path& path) {
    std::string text = detail::read_file(path);
    detail::strip_bom(text);
    std::istringstream in(text);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("expected word<TAB>TAG", line_no);
        }
        pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    try {
        return TagOntology::from_pairs(pairs);
    } catch (const PreconditionError& e) {
        throw ParseError(e.what(), 0);
    }
}

inline std::vector<std::string> apply_tags(const std::vector<std::string>& tokens, const TagOntology& ontology) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        const auto* tag = ontology.find(tok);
        out.push_back(tag ? *tag : tok);
    }
    return out;
}

/// Descending count, ties lexicographically ascending; at most k entries.
inline std::vector<std::pair<std::string, std::size_t>>
top_frequent_words(const std::vector<std::vector<std::string>>& token_lists, std::size_t k) {
    if (k < 1) {
        throw PreconditionError("k must be >= 1");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& toks : token_lists) {
        for (const auto& t : toks) {
            ++counts[t];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > k) {
        ranked.resize(k);
    }
    return ranked;
}

/// Token lists of every record's dynamics field, in corpus order.
inline std::vector<std::vector<std::string>> tokenize_dynamics(const Corpus& corpus, const PreprocessConfig& config,
                                                               const TagOntology* ontology = nullptr) {
    std::vector<std::vector<std::string>> out;
    out.reserve(corpus.size());
    for (const auto& rec : corpus.records) {
        auto toks = preprocess(rec.dynamics, config);
        out.push_back(ontology ? apply_tags(toks, *ontology) : std::move(toks));
    }
    return out;
}

inline std::vector<std::pair<std::string, std::size_t>>
top_frequent_words(const Corpus& corpus, const PreprocessConfig& config, std::size_t k) {
    return top_frequent_words(tokenize_dynamics(corpus, config), k);
}

inline TransactionSet to_transactions(const Corpus& corpus, const PreprocessConfig& config,
                                      const TagOntology* ontology = nullptr) {
    TransactionSet out;
    const auto token_lists = tokenize_dynamics(corpus, config, ontology);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        std::vector<std::string> items = token_lists[i];
        std::sort(items.begin(), items.end());
        items.erase(std::unique(items.begin(), items.end()), items.end());
        if (items.empty()) {
            out.flagged.push_back(corpus.records[i].id);
        } else {
            out.transactions.push_back(Transaction{corpus.records[i].id, std::move(items)});
        }
    }
    if (out.transactions.empty()) {
        throw EmptyInputError("every transaction is empty after preprocessing");
    }
    return out;
}

}  // namespace reckon
