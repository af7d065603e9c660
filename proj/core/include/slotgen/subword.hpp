#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slotgen/common.hpp"

namespace slotgen::subword {

/// Suffix every non-final subword of a split token carries.
inline constexpr std::string_view kContinuation = "@@";
inline constexpr std::size_t kDefaultMerges = 30000;
/// Pairs rarer than this stop training early on small corpora.
inline constexpr std::size_t kMinPairFrequency = 2;

/// Decides which tokens pass through encoding unsplit. Default: slot tags
/// (`_*`), placeholders (`$*`), and language tags (`<2xx>`).
struct ProtectedSet {
    std::vector<std::string> prefixes = {"_", "$"};
    bool language_tags = true;
    std::vector<std::string> literals;

    bool contains(std::string_view token) const;
};

struct BpeModel {
    std::vector<std::pair<std::string, std::string>> merges;  // acquisition order
    ProtectedSet protected_tokens;

    /// merge pair -> position in `merges`; rebuilt after load/train.
    const std::unordered_map<std::string, std::size_t>& ranks() const;

    void save(const std::string& path) const;
    static BpeModel load(const std::string& path);

private:
    mutable std::unordered_map<std::string, std::size_t> rank_cache_;
};

/// Learns up to `num_merges` merge operations by greedy most-frequent-pair
/// selection over the corpus. Protected tokens contribute nothing. Ties
/// break lexicographically ascending on (left, right); training stops when
/// no pair reaches frequency 2. Deterministic for a fixed corpus.
BpeModel bpe_train(const std::vector<std::vector<std::string>>& corpus,
                   std::size_t num_merges,
                   ProtectedSet protected_tokens = ProtectedSet());

/// Splits one token with the model's merges; no continuation markers here.
std::vector<std::string> bpe_split_token(const std::string& token, const BpeModel& model);

/// Encodes a token sequence: protected tokens pass through, everything else
/// is split into subwords with `@@` on all non-final pieces.
std::vector<std::string> bpe_encode(const std::vector<std::string>& tokens,
                                    const BpeModel& model);

/// Joins `@@`-marked subwords back into tokens. Throws DanglingMarker when
/// the final token still carries the marker.
std::vector<std::string> bpe_decode(const std::vector<std::string>& subwords);

}  // namespace slotgen::subword
