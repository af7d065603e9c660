#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "slotgen/common.hpp"

namespace slotgen::lexicon {

/// Replaces spaces inside placeholder entities so a serialized placeholder is
/// always a single whitespace-delimited token (U+2581).
inline constexpr std::string_view kJoiner = "\xE2\x96\x81";
inline constexpr std::string_view kCategorySlotName = "Category";
inline constexpr std::string_view kCategoryTag = "_cat";
inline constexpr std::size_t kDefaultTopSlotTypes = 30;

struct SlotValuePair {
    std::string name;
    std::string value;
};

/// A browse page: a category plus ordered slot/value pairs. The category is
/// carried in the slot list as a "Category" slot so it keeps its input
/// position; `category` mirrors that slot's value.
struct BrowsePage {
    std::string language;
    std::string category;
    std::vector<SlotValuePair> slots;
};

/// Validates invariants (non-empty category, unique slot names, well-formed
/// names and values) and inserts the category as a leading "Category" slot
/// if the slot list does not carry one. Throws EmptyPage / DuplicateSlot.
void canonicalize_page(BrowsePage& page);

enum class TokenKind { slot_tag, placeholder, word };

struct PseudoToken {
    TokenKind kind = TokenKind::word;
    std::string text;       // serialized form, e.g. "_brand", "$brand|ACME", "white"
    std::string slot_type;  // placeholders only: "brand" for "$brand"
    std::string entity;     // placeholders only; empty when stripped

    static PseudoToken tag(std::string text);
    static PseudoToken word(std::string text);
    static PseudoToken placeholder(std::string slot_type, std::string entity);
};

struct PseudoSequence {
    std::string language;
    std::vector<PseudoToken> tokens;

    std::string str() const;
    std::vector<std::string> token_strings() const;
};

/// Checks the tag/value structure invariant: every slot tag is followed by at
/// least one word or exactly one placeholder before the next tag.
void validate_sequence(const PseudoSequence& seq);

/// Parses a serialized pseudo-language line back into tokens.
PseudoSequence parse_pseudo(std::string_view line, std::string language);

/// Maps slot names to slot tags. Unmapped names fall back to the derived
/// form; "Category" is always `_cat` unless overridden.
class TagMap {
public:
    TagMap();

    void set(const std::string& slot_name, const std::string& tag);
    std::string tag_for(const std::string& slot_name) const;

    static TagMap load_tsv(const std::string& path);
    void save_tsv(const std::string& path) const;

private:
    std::map<std::string, std::string> overrides_;
};

/// Default tag derivation: `_` + lowercase first word of the slot name.
std::string derive_tag(const std::string& slot_name);

/// Linearizes a page into the pseudo language: for each slot in input order,
/// its tag followed by the whitespace-tokenized value.
PseudoSequence lexicalize(const BrowsePage& page, const TagMap& tag_map = TagMap());

enum class PlaceholderMode { train_stripped, inference_retained };

struct PlaceholderPolicy {
    std::string language;
    std::set<std::string> normalized_slot_types;  // slot tags, e.g. "_brand"
    PlaceholderMode mode = PlaceholderMode::inference_retained;

    static PlaceholderPolicy load_json(const std::string& path);
    void save_json(const std::string& path) const;
};

/// True for Yes/No/True/False (case-insensitive) after trimming.
bool is_boolean_value(std::string_view value);

/// The k most frequent slot tags by page-occurrence count, excluding slot
/// types whose observed values are all boolean. Ties break lexicographically
/// ascending. Empty corpus yields an empty set.
std::set<std::string> compute_top_slot_types(const std::vector<BrowsePage>& corpus,
                                             std::size_t k,
                                             const TagMap& tag_map = TagMap());

/// Replaces value words of normalized slot types with one placeholder token.
/// train_stripped drops the entity ($brand); inference_retained keeps it
/// ($brand|ACME, entity spaces joined with U+2581).
PseudoSequence normalize(const PseudoSequence& seq, const PlaceholderPolicy& policy);

/// Entity of a placeholder token with joiners restored to spaces.
/// Throws MissingEntity when the token carries none.
std::string denormalize_entity(const PseudoToken& placeholder);

/// Target-side counterpart of `normalize`: replaces, in a tokenized title,
/// the first occurrence of each normalized slot's value with the stripped
/// placeholder token. Longer values are matched first. Values the title does
/// not contain verbatim are left alone.
std::vector<std::string> normalize_title(const std::vector<std::string>& title_tokens,
                                         const BrowsePage& page,
                                         const PlaceholderPolicy& policy,
                                         const TagMap& tag_map = TagMap());

// ---- file formats ----

/// JSON Lines, one page per line:
/// {"language": "...", "category": "...", "slots": [{"name": "...", "value": "..."}]}
std::vector<BrowsePage> load_pages_jsonl(const std::string& path);
void save_pages_jsonl(const std::string& path, const std::vector<BrowsePage>& pages);

}  // namespace slotgen::lexicon
