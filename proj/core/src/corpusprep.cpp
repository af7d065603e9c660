#include "slotgen/corpusprep.hpp"

#include <algorithm>

namespace slotgen::corpusprep {

const std::array<const char*, 4> Vocabulary::kReservedTokens = {"<pad>", "<unk>", "<bos>",
                                                                "<eos>"};

Vocabulary::Vocabulary() {
    for (const char* t : kReservedTokens) add(t);
}

void Vocabulary::add(const std::string& token) {
    if (ids_.count(token)) return;
    ids_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<ParallelExample>& examples,
                             std::size_t max_size) {
    if (examples.empty()) raise(Errc::config_error, "cannot build a vocabulary from nothing");

    std::map<std::string, long long> counts;
    for (const auto& ex : examples) {
        for (const auto& t : ex.source) ++counts[t];
        for (const auto& t : ex.target) ++counts[t];
    }
    for (const char* r : kReservedTokens) counts.erase(r);

    std::vector<std::pair<std::string, long long>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    for (const auto& [token, count] : sorted) {
        if (vocab.size() >= max_size) break;  // overflow tokens map to <unk>
        vocab.add(token);
    }
    return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary vocab;
    for (const auto& t : tokens) vocab.add(t);
    return vocab;
}

int Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return ids_.count(token) > 0; }

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= static_cast<int>(tokens_.size()))
        raise(Errc::index_out_of_range, "vocabulary id " + std::to_string(id));
    return tokens_[static_cast<std::size_t>(id)];
}

Vocabulary Vocabulary::load_tsv(const std::string& path) {
    Vocabulary vocab;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2)
            raise(Errc::io_error, path + ":" + std::to_string(line_no) + ": expected token<TAB>id");
        int id = std::stoi(cols[1]);
        if (id != static_cast<int>(vocab.size()) && id >= 4)
            raise(Errc::io_error, path + ":" + std::to_string(line_no) + ": ids out of order");
        if (id >= 4) vocab.add(cols[0]);
    }
    return vocab;
}

void Vocabulary::save_tsv(const std::string& path) const {
    std::vector<std::string> lines;
    lines.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        lines.push_back(tokens_[i] + "\t" + std::to_string(i));
    write_lines(path, lines);
}

std::string language_tag(const std::string& code) {
    bool ok = code.size() >= 2 && code.size() <= 3;
    for (char c : code)
        if (c < 'a' || c > 'z') ok = false;
    if (!ok) raise(Errc::unknown_language, "bad language code '" + code + "'");
    return "<2" + code + ">";
}

bool is_language_tag(std::string_view token) {
    if (token.size() < 5 || token.size() > 6) return false;
    if (token.substr(0, 2) != "<2" || token.back() != '>') return false;
    for (std::size_t i = 2; i + 1 < token.size(); ++i)
        if (token[i] < 'a' || token[i] > 'z') return false;
    return true;
}

std::vector<ParallelExample> oversample(
    const std::vector<std::vector<ParallelExample>>& corpora) {
    if (corpora.size() < 2) raise(Errc::config_error, "oversample needs at least two corpora");
    std::size_t target = 0;
    for (const auto& c : corpora) {
        if (c.empty()) raise(Errc::config_error, "oversample got an empty member corpus");
        target = std::max(target, c.size());
    }

    std::vector<std::vector<const ParallelExample*>> balanced(corpora.size());
    for (std::size_t m = 0; m < corpora.size(); ++m) {
        balanced[m].reserve(target);
        for (std::size_t i = 0; i < target; ++i)
            balanced[m].push_back(&corpora[m][i % corpora[m].size()]);
    }

    std::vector<ParallelExample> out;
    out.reserve(target * corpora.size());
    for (std::size_t i = 0; i < target; ++i)
        for (std::size_t m = 0; m < corpora.size(); ++m) out.push_back(*balanced[m][i]);
    return out;
}

std::vector<ParallelExample> copy_augment(const std::vector<std::vector<std::string>>& sentences,
                                          const std::string& language) {
    if (sentences.empty()) raise(Errc::config_error, "copy_augment got no sentences");
    std::vector<ParallelExample> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back({s, s, language});
    return out;
}

ParallelExample tag_language(ParallelExample example) {
    std::string tag = language_tag(example.language);
    if (!example.source.empty() && is_language_tag(example.source.front()))
        raise(Errc::config_error, "source already carries a language tag");
    example.source.insert(example.source.begin(), tag);
    return example;
}

Mixture assemble_mixture(const MixtureSpec& spec) {
    if (spec.members.empty()) raise(Errc::config_error, "mixture needs at least one member");

    std::vector<std::vector<ParallelExample>> prepared;
    prepared.reserve(spec.members.size());
    for (const auto& member : spec.members) {
        std::vector<ParallelExample> examples = member.examples;
        for (auto& ex : examples) {
            if (ex.language.empty()) ex.language = member.language;
            if (spec.tag_target_language) ex = tag_language(std::move(ex));
        }
        prepared.push_back(std::move(examples));
    }

    Mixture mix;
    if (spec.oversample && prepared.size() >= 2) {
        mix.examples = oversample(prepared);
    } else {
        for (std::size_t i = 0; i < prepared.size(); ++i) {
            // still interleave so multilingual batches stay mixed
            for (auto& ex : prepared[i]) mix.examples.push_back(std::move(ex));
        }
    }
    mix.vocab = Vocabulary::build(mix.examples, spec.vocab_max_size);
    return mix;
}

std::vector<ParallelExample> load_parallel_tsv(const std::string& path) {
    std::vector<ParallelExample> out;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 3)
            raise(Errc::io_error,
                  path + ":" + std::to_string(line_no) + ": expected source<TAB>target<TAB>lang");
        out.push_back({split_whitespace(cols[0]), split_whitespace(cols[1]), cols[2]});
    }
    return out;
}

void save_parallel_tsv(const std::string& path, const std::vector<ParallelExample>& examples) {
    std::vector<std::string> lines;
    lines.reserve(examples.size());
    for (const auto& ex : examples)
        lines.push_back(join(ex.source, " ") + "\t" + join(ex.target, " ") + "\t" + ex.language);
    write_lines(path, lines);
}

}  // namespace slotgen::corpusprep
