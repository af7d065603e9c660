#pragma once

#include <array>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "slotgen/common.hpp"

namespace slotgen::corpusprep {

struct ParallelExample {
    std::vector<std::string> source;
    std::vector<std::string> target;
    std::string language;
};

inline constexpr std::size_t kDefaultVocabCap = 50000;

/// Shared source/target vocabulary. Ids 0..3 are reserved; remaining tokens
/// are frequency-sorted with lexicographic tie-break.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;
    static const std::array<const char*, 4> kReservedTokens;

    Vocabulary();

    static Vocabulary build(const std::vector<ParallelExample>& examples,
                            std::size_t max_size = kDefaultVocabCap);
    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

    int id(const std::string& token) const;  // kUnk when absent
    bool contains(const std::string& token) const;
    const std::string& token(int id) const;
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    static Vocabulary load_tsv(const std::string& path);
    void save_tsv(const std::string& path) const;

private:
    void add(const std::string& token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

/// `<2xx>` token for a language code. Throws UnknownLanguage for malformed
/// codes (expects 2-3 lowercase letters).
std::string language_tag(const std::string& code);
bool is_language_tag(std::string_view token);

/// Balances member corpora by whole-copy duplication to the largest member's
/// size (last copy truncated from the start), then interleaves round-robin
/// over members in input order.
std::vector<ParallelExample> oversample(const std::vector<std::vector<ParallelExample>>& corpora);

/// Monolingual sentences copied to both sides, the verbatim-copy signal for
/// low-resource languages.
std::vector<ParallelExample> copy_augment(const std::vector<std::vector<std::string>>& sentences,
                                          const std::string& language);

/// Prepends the target-language tag to the source. Rejects double tagging.
ParallelExample tag_language(ParallelExample example);

struct MixtureMember {
    std::string language;
    std::vector<ParallelExample> examples;
};

struct MixtureSpec {
    std::vector<MixtureMember> members;
    bool oversample = true;
    bool tag_target_language = true;
    std::size_t vocab_max_size = kDefaultVocabCap;
};

struct Mixture {
    std::vector<ParallelExample> examples;
    Vocabulary vocab;
};

/// Tags (optionally), balances (optionally) and interleaves the members,
/// then builds the shared vocabulary over the result.
Mixture assemble_mixture(const MixtureSpec& spec);

// ---- file formats ----

/// TSV `source<TAB>target<TAB>lang`, tokens space-separated inside a column.
std::vector<ParallelExample> load_parallel_tsv(const std::string& path);
void save_parallel_tsv(const std::string& path, const std::vector<ParallelExample>& examples);

}  // namespace slotgen::corpusprep
