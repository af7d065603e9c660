#include "slotgen/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace slotgen::lexicon {

namespace {

bool valid_slot_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                  c == ' ' || c == '_' || c == '&' || c == '-';
        if (!ok) return false;
    }
    return true;
}

bool is_category_name(const std::string& name) {
    return lowercase_ascii(name) == "category";
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

}  // namespace

void canonicalize_page(BrowsePage& page) {
    for (auto& slot : page.slots) {
        slot.name = trim(slot.name);
        slot.value = trim(slot.value);
    }
    page.category = trim(page.category);

    const SlotValuePair* category_slot = nullptr;
    for (const auto& slot : page.slots) {
        if (is_category_name(slot.name)) {
            category_slot = &slot;
            break;
        }
    }
    if (category_slot != nullptr) {
        if (page.category.empty()) page.category = category_slot->value;
    } else if (!page.category.empty()) {
        page.slots.insert(page.slots.begin(),
                          {std::string(kCategorySlotName), page.category});
    }

    if (page.slots.empty()) raise(Errc::empty_page, "page has no slots and no category");

    std::set<std::string> seen;
    for (const auto& slot : page.slots) {
        if (!valid_slot_name(slot.name))
            raise(Errc::config_error, "bad slot name '" + slot.name + "'");
        if (slot.value.empty())
            raise(Errc::config_error, "empty value for slot '" + slot.name + "'");
        if (!seen.insert(lowercase_ascii(slot.name)).second)
            raise(Errc::duplicate_slot, "slot '" + slot.name + "' appears twice");
    }
}

PseudoToken PseudoToken::tag(std::string text) {
    PseudoToken t;
    t.kind = TokenKind::slot_tag;
    t.text = std::move(text);
    return t;
}

PseudoToken PseudoToken::word(std::string text) {
    PseudoToken t;
    t.kind = TokenKind::word;
    t.text = std::move(text);
    return t;
}

PseudoToken PseudoToken::placeholder(std::string slot_type, std::string entity) {
    PseudoToken t;
    t.kind = TokenKind::placeholder;
    t.slot_type = std::move(slot_type);
    t.entity = std::move(entity);
    t.text = "$" + t.slot_type;
    if (!t.entity.empty()) t.text += "|" + replace_all(t.entity, " ", kJoiner);
    return t;
}

std::string PseudoSequence::str() const { return join(token_strings(), " "); }

std::vector<std::string> PseudoSequence::token_strings() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.text);
    return out;
}

void validate_sequence(const PseudoSequence& seq) {
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        if (seq.tokens[i].kind != TokenKind::slot_tag) continue;
        std::size_t words = 0;
        std::size_t placeholders = 0;
        for (std::size_t j = i + 1; j < seq.tokens.size(); ++j) {
            if (seq.tokens[j].kind == TokenKind::slot_tag) break;
            if (seq.tokens[j].kind == TokenKind::word) ++words;
            else ++placeholders;
        }
        bool ok = (placeholders == 0 && words >= 1) || (placeholders == 1 && words == 0);
        if (!ok)
            raise(Errc::config_error,
                  "slot tag '" + seq.tokens[i].text + "' is not followed by a value");
    }
}

PseudoSequence parse_pseudo(std::string_view line, std::string language) {
    PseudoSequence seq;
    seq.language = std::move(language);
    for (auto& word : split_whitespace(line)) {
        if (word.size() > 1 && word[0] == '_') {
            seq.tokens.push_back(PseudoToken::tag(word));
        } else if (word.size() > 1 && word[0] == '$') {
            std::size_t bar = word.find('|');
            std::string type = word.substr(1, bar == std::string::npos ? bar : bar - 1);
            std::string entity;
            if (bar != std::string::npos)
                entity = replace_all(word.substr(bar + 1), kJoiner, " ");
            seq.tokens.push_back(PseudoToken::placeholder(type, entity));
        } else {
            seq.tokens.push_back(PseudoToken::word(word));
        }
    }
    return seq;
}

TagMap::TagMap() = default;

void TagMap::set(const std::string& slot_name, const std::string& tag) {
    overrides_[lowercase_ascii(slot_name)] = tag;
}

std::string TagMap::tag_for(const std::string& slot_name) const {
    auto it = overrides_.find(lowercase_ascii(slot_name));
    if (it != overrides_.end()) return it->second;
    if (is_category_name(slot_name)) return std::string(kCategoryTag);
    return derive_tag(slot_name);
}

TagMap TagMap::load_tsv(const std::string& path) {
    TagMap map;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (trim(line).empty() || line[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2)
            raise(Errc::io_error,
                  path + ":" + std::to_string(line_no) + ": expected slot_name<TAB>tag");
        map.set(trim(cols[0]), trim(cols[1]));
    }
    return map;
}

void TagMap::save_tsv(const std::string& path) const {
    std::vector<std::string> lines;
    for (const auto& [name, tag] : overrides_) lines.push_back(name + "\t" + tag);
    write_lines(path, lines);
}

std::string derive_tag(const std::string& slot_name) {
    std::string lower = lowercase_ascii(trim(slot_name));
    std::string first_word = lower.substr(0, lower.find(' '));
    return "_" + replace_all(first_word, " ", "_");
}

PseudoSequence lexicalize(const BrowsePage& page, const TagMap& tag_map) {
    BrowsePage canonical = page;
    canonicalize_page(canonical);

    PseudoSequence seq;
    seq.language = canonical.language;
    std::set<std::string> used_tags;
    for (const auto& slot : canonical.slots) {
        std::string tag = tag_map.tag_for(slot.name);
        if (!used_tags.insert(tag).second)
            raise(Errc::duplicate_slot,
                  "slot tags collide on '" + tag + "' after derivation");
        seq.tokens.push_back(PseudoToken::tag(tag));
        for (auto& word : split_whitespace(slot.value))
            seq.tokens.push_back(PseudoToken::word(std::move(word)));
    }
    return seq;
}

bool is_boolean_value(std::string_view value) {
    std::string v = lowercase_ascii(trim(value));
    return v == "yes" || v == "no" || v == "true" || v == "false";
}

std::set<std::string> compute_top_slot_types(const std::vector<BrowsePage>& corpus,
                                             std::size_t k,
                                             const TagMap& tag_map) {
    if (corpus.empty() || k == 0) return {};

    // page-occurrence counts; a type is boolean-valued when every observed
    // value is boolean
    std::map<std::string, std::size_t> counts;
    std::map<std::string, bool> all_boolean;
    for (const auto& page : corpus) {
        BrowsePage canonical = page;
        canonicalize_page(canonical);
        std::set<std::string> page_tags;
        for (const auto& slot : canonical.slots) {
            std::string tag = tag_map.tag_for(slot.name);
            if (page_tags.insert(tag).second) ++counts[tag];
            auto [it, inserted] = all_boolean.try_emplace(tag, true);
            it->second = it->second && is_boolean_value(slot.value);
        }
    }

    std::vector<std::pair<std::string, std::size_t>> eligible;
    for (const auto& [tag, count] : counts)
        if (!all_boolean[tag]) eligible.emplace_back(tag, count);

    std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::set<std::string> top;
    for (std::size_t i = 0; i < eligible.size() && i < k; ++i) top.insert(eligible[i].first);
    return top;
}

PseudoSequence normalize(const PseudoSequence& seq, const PlaceholderPolicy& policy) {
    validate_sequence(seq);
    PseudoSequence out;
    out.language = seq.language;

    std::size_t i = 0;
    while (i < seq.tokens.size()) {
        const PseudoToken& tok = seq.tokens[i];
        out.tokens.push_back(tok);
        ++i;
        if (tok.kind != TokenKind::slot_tag ||
            policy.normalized_slot_types.count(tok.text) == 0) {
            continue;
        }
        // gather the value words belonging to this tag
        std::vector<std::string> words;
        std::size_t j = i;
        while (j < seq.tokens.size() && seq.tokens[j].kind == TokenKind::word) {
            words.push_back(seq.tokens[j].text);
            ++j;
        }
        if (words.empty()) continue;  // already a placeholder, or next tag follows
        std::string slot_type = tok.text.substr(1);
        std::string entity = join(words, " ");
        PseudoToken ph = PseudoToken::placeholder(slot_type, entity);
        if (policy.mode == PlaceholderMode::train_stripped) {
            ph.entity.clear();
            ph.text = "$" + slot_type;
        }
        out.tokens.push_back(std::move(ph));
        i = j;
    }
    return out;
}

std::string denormalize_entity(const PseudoToken& placeholder) {
    if (placeholder.kind != TokenKind::placeholder)
        raise(Errc::missing_entity, "token '" + placeholder.text + "' is not a placeholder");
    if (placeholder.entity.empty())
        raise(Errc::missing_entity, "placeholder '" + placeholder.text + "' carries no entity");
    return replace_all(placeholder.entity, kJoiner, " ");
}

std::vector<std::string> normalize_title(const std::vector<std::string>& title_tokens,
                                         const BrowsePage& page,
                                         const PlaceholderPolicy& policy,
                                         const TagMap& tag_map) {
    BrowsePage canonical = page;
    canonicalize_page(canonical);

    struct Candidate {
        std::string slot_type;
        std::vector<std::string> value_tokens;
    };
    std::vector<Candidate> candidates;
    for (const auto& slot : canonical.slots) {
        std::string tag = tag_map.tag_for(slot.name);
        if (policy.normalized_slot_types.count(tag) == 0) continue;
        candidates.push_back({tag.substr(1), split_whitespace(slot.value)});
    }
    // longest value first so multi-word values are not eaten by submatches
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return a.value_tokens.size() > b.value_tokens.size();
    });

    std::vector<std::string> out = title_tokens;
    std::vector<bool> replaced(out.size(), false);
    for (const auto& cand : candidates) {
        const std::size_t n = cand.value_tokens.size();
        if (n == 0 || n > out.size()) continue;
        for (std::size_t start = 0; start + n <= out.size(); ++start) {
            bool match = true;
            for (std::size_t t = 0; t < n; ++t) {
                if (replaced[start + t] || out[start + t] != cand.value_tokens[t]) {
                    match = false;
                    break;
                }
            }
            if (!match) continue;
            out[start] = "$" + cand.slot_type;
            replaced[start] = true;
            out.erase(out.begin() + static_cast<std::ptrdiff_t>(start) + 1,
                      out.begin() + static_cast<std::ptrdiff_t>(start + n));
            replaced.erase(replaced.begin() + static_cast<std::ptrdiff_t>(start) + 1,
                           replaced.begin() + static_cast<std::ptrdiff_t>(start + n));
            break;
        }
    }
    return out;
}

PlaceholderPolicy PlaceholderPolicy::load_json(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::io_error, path + ": " + e.what());
    }
    PlaceholderPolicy policy;
    policy.language = j.value("language", "");
    for (const auto& t : j.value("normalized_slot_types", nlohmann::json::array()))
        policy.normalized_slot_types.insert(t.get<std::string>());
    std::string mode = j.value("mode", "infer");
    policy.mode = (mode == "train") ? PlaceholderMode::train_stripped
                                    : PlaceholderMode::inference_retained;
    return policy;
}

void PlaceholderPolicy::save_json(const std::string& path) const {
    nlohmann::ordered_json j;
    j["language"] = language;
    j["normalized_slot_types"] = normalized_slot_types;
    j["mode"] = mode == PlaceholderMode::train_stripped ? "train" : "infer";
    write_file(path, j.dump(2) + "\n");
}

std::vector<BrowsePage> load_pages_jsonl(const std::string& path) {
    std::vector<BrowsePage> pages;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::io_error, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        BrowsePage page;
        page.language = j.value("language", "");
        page.category = j.value("category", "");
        for (const auto& s : j.value("slots", nlohmann::json::array()))
            page.slots.push_back({s.at("name").get<std::string>(),
                                  s.at("value").get<std::string>()});
        try {
            canonicalize_page(page);
        } catch (const Error& e) {
            raise(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        pages.push_back(std::move(page));
    }
    return pages;
}

void save_pages_jsonl(const std::string& path, const std::vector<BrowsePage>& pages) {
    std::vector<std::string> lines;
    lines.reserve(pages.size());
    for (const auto& page : pages) {
        nlohmann::ordered_json j;
        j["language"] = page.language;
        j["category"] = page.category;
        auto slots = nlohmann::ordered_json::array();
        // the Category slot stays in the list so its position survives a round trip
        for (const auto& s : page.slots)
            slots.push_back({{"name", s.name}, {"value", s.value}});
        j["slots"] = slots;
        lines.push_back(j.dump());
    }
    write_lines(path, lines);
}

}  // namespace slotgen::lexicon
