#pragma once

#include "reckon/error.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace reckon::lm {

using TokenId = std::int32_t;

inline constexpr TokenId pad_id = 0;
inline constexpr TokenId unk_id = 1;
inline const std::string pad_token = "<PAD>";
inline const std::string unk_token = "<UNK>";

/// Frequency-ranked word vocabulary; index 0 is PAD and index 1 is UNK.
class LmVocabulary {
public:
    LmVocabulary() : LmVocabulary(std::vector<std::string>{}) {}

    /// `tokens` excludes the reserved entries.
    explicit LmVocabulary(const std::vector<std::string>& tokens) {
        tokens_ = {pad_token, unk_token};
        for (const auto& t : tokens) {
            if (t == pad_token || t == unk_token || !index_.emplace(t, static_cast<TokenId>(tokens_.size())).second) {
                throw PreconditionError("vocabulary token '" + t + "' is reserved or duplicated");
            }
            tokens_.push_back(t);
        }
    }

    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

    TokenId id(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? unk_id : it->second;
    }

    bool contains(const std::string& token) const { return index_.count(token) > 0; }

    bool operator==(const LmVocabulary& o) const { return tokens_ == o.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

/// Keeps the `cap - 2` most frequent tokens (ties lexicographic) after PAD and UNK.
inline LmVocabulary fit_vocab(const std::vector<std::vector<std::string>>& texts, std::size_t cap) {
    if (cap < 3) {
        throw PreconditionError("vocabulary cap must be >= 3");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& toks : texts) {
        for (const auto& t : toks) ++counts[t];
    }
    if (counts.empty()) {
        throw EmptyInputError("no tokens to build a vocabulary from");
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < ranked.size() && kept.size() < cap - 2; ++i) {
        kept.push_back(ranked[i].first);
    }
    return LmVocabulary(kept);
}

/// Token ids right-padded with PAD (or truncated) to `seq_len`; unknown tokens map to UNK.
inline std::vector<TokenId> encode(const std::vector<std::string>& tokens, const LmVocabulary& vocab,
                                   std::size_t seq_len) {
    std::vector<TokenId> ids(seq_len, pad_id);
    for (std::size_t i = 0; i < std::min(seq_len, tokens.size()); ++i) {
        ids[i] = vocab.id(tokens[i]);
    }
    return ids;
}

}  // namespace reckon::lm
