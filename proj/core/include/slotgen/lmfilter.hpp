#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slotgen/common.hpp"

namespace slotgen::lmfilter {

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::size_t kDefaultOrder = 3;
inline constexpr std::size_t kDefaultMinLength = 5;
inline constexpr std::size_t kDefaultTopK = 500000;

struct LmConfig {
    std::size_t order = kDefaultOrder;
    /// Highest order first; must sum to 1. Weights of orders whose context is
    /// unseen are redistributed over the available orders, so every
    /// conditional distribution sums to 1 and stays strictly positive.
    std::vector<double> interpolation_weights = {0.5, 0.3, 0.2};
    /// Add-alpha mass on the unigram level; gives <unk> nonzero probability.
    double add_alpha = 0.1;
};

/// Interpolated n-gram language model with sentence-boundary padding.
class NGramLM {
public:
    static NGramLM train(const std::vector<std::vector<std::string>>& titles, LmConfig cfg);

    /// P(token | context); context is the up-to-(order-1) preceding tokens,
    /// oldest first. Out-of-vocabulary tokens map to <unk>. Always > 0.
    double probability(const std::string& token, std::vector<std::string> context) const;

    /// exp(-mean log P) over the sentence tokens plus the end marker.
    /// Throws EmptySentence.
    double perplexity(const std::vector<std::string>& sentence) const;

    std::size_t order() const { return cfg_.order; }
    const LmConfig& config() const { return cfg_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    bool in_vocab(const std::string& token) const { return vocab_.count(token) > 0; }
    /// Vocabulary incl. </s>, excl. <s> and <unk>; sorted for determinism.
    std::vector<std::string> vocab_tokens() const;

private:
    NGramLM() = default;

    std::string map_token(const std::string& token) const;
    double order_probability(std::size_t n, const std::string& token,
                             const std::vector<std::string>& context,
                             bool* available) const;

    LmConfig cfg_;
    // per order n (1-based index): joined-context and joined-gram counts
    std::vector<std::unordered_map<std::string, long long>> context_counts_;
    std::vector<std::unordered_map<std::string, long long>> gram_counts_;
    long long total_tokens_ = 0;
    std::unordered_set<std::string> vocab_;
};

struct FilterStats {
    std::size_t total = 0;
    std::size_t removed_short = 0;
    std::size_t scored = 0;
    std::size_t selected = 0;
};

struct ScoredSentence {
    std::size_t index = 0;  // position in the input corpus
    double perplexity = 0.0;
    std::vector<std::string> tokens;
};

/// The out-of-domain cleaning rule: drop sentences shorter than `min_len`
/// tokens, score the rest with the LM, sort by ascending perplexity (ties by
/// corpus position) and keep the best `top_k`.
std::vector<ScoredSentence> filter_corpus(const NGramLM& lm,
                                          const std::vector<std::vector<std::string>>& corpus,
                                          std::size_t min_len = kDefaultMinLength,
                                          std::size_t top_k = kDefaultTopK,
                                          FilterStats* stats = nullptr);

}  // namespace slotgen::lmfilter
