#pragma once

#include <map>
#include <string>
#include <vector>

#include "slotgen/lexicon.hpp"

namespace slotgen::synth {

struct SplitSizes {
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
    std::size_t monolingual = 0;
};

struct LanguageSpec {
    std::string code;
    SplitSizes sizes;
};

/// One category archetype: a per-language surface name, the slots a page of
/// this category carries, and per-language title templates. Template syntax:
/// whitespace-separated elements, `{Slot}` inserts the page value,
/// `{Slot?A=x|B=y}` realizes boolean-ish values as words ('+' for spaces
/// inside a replacement), anything else is a literal word.
struct Archetype {
    std::map<std::string, std::string> names;      // language -> category name
    std::vector<std::string> slots;                // slot names besides Category
    std::map<std::string, std::string> templates;  // language -> template string
};

struct SynthSpec {
    std::uint64_t seed = 1234;
    std::vector<LanguageSpec> languages;
    /// 0 keeps every built-in archetype; otherwise the first n are used.
    std::size_t num_categories = 0;
    /// Empty means the built-in grammar.
    std::vector<Archetype> archetypes;
    /// Slot name -> (language -> value pool); "*" holds language-independent
    /// pools.
    std::map<std::string, std::map<std::string, std::vector<std::string>>> values;

    static SynthSpec load_json(const std::string& path);
};

struct SynthCorpus {
    std::vector<lexicon::BrowsePage> train_pages, dev_pages, test_pages;
    std::vector<std::string> train_titles, dev_titles, test_titles;
    std::vector<std::string> monolingual;
};

/// The built-in bilingual grammar (en/fr surface forms) used when a spec
/// carries no custom archetypes.
std::vector<Archetype> builtin_archetypes();
std::map<std::string, std::map<std::string, std::vector<std::string>>> builtin_values();

/// Deterministically generates browse pages plus gold titles per language.
/// Gold titles realize every slot; slot order within a page is shuffled so
/// input order and title order differ. Throws InvalidTemplate for malformed
/// or incomplete templates.
std::map<std::string, SynthCorpus> make_synthetic_corpus(const SynthSpec& spec);

}  // namespace slotgen::synth
