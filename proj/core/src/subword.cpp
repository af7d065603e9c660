#include "slotgen/subword.hpp"

#include <algorithm>
#include <map>
#include <queue>

namespace slotgen::subword {

namespace {

constexpr char kPairSep = '\x1f';  // never occurs in whitespace-split tokens

std::string pair_key(const std::string& left, const std::string& right) {
    return left + kPairSep + right;
}

std::pair<std::string, std::string> split_pair_key(const std::string& key) {
    std::size_t sep = key.find(kPairSep);
    return {key.substr(0, sep), key.substr(sep + 1)};
}

bool looks_like_language_tag(std::string_view token) {
    // <2xx> / <2xxx> with lowercase letters
    if (token.size() < 5 || token.size() > 6) return false;
    if (token[0] != '<' || token[1] != '2' || token.back() != '>') return false;
    for (std::size_t i = 2; i + 1 < token.size(); ++i)
        if (token[i] < 'a' || token[i] > 'z') return false;
    return true;
}

}  // namespace

bool ProtectedSet::contains(std::string_view token) const {
    for (const auto& p : prefixes)
        if (token.size() > p.size() && token.substr(0, p.size()) == p) return true;
    if (language_tags && looks_like_language_tag(token)) return true;
    for (const auto& lit : literals)
        if (token == lit) return true;
    return false;
}

const std::unordered_map<std::string, std::size_t>& BpeModel::ranks() const {
    if (rank_cache_.size() != merges.size()) {
        rank_cache_.clear();
        rank_cache_.reserve(merges.size());
        for (std::size_t i = 0; i < merges.size(); ++i) {
            // keep the earliest rank if a pair somehow repeats
            rank_cache_.try_emplace(pair_key(merges[i].first, merges[i].second), i);
        }
    }
    return rank_cache_;
}

void BpeModel::save(const std::string& path) const {
    std::vector<std::string> lines;
    lines.reserve(merges.size() + 1);
    lines.push_back("#version: slotgen-bpe 1");
    for (const auto& [left, right] : merges) lines.push_back(left + " " + right);
    write_lines(path, lines);
}

BpeModel BpeModel::load(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "#version: slotgen-bpe 1")
        raise(Errc::io_error, path + ": missing '#version: slotgen-bpe 1' header");
    BpeModel model;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        std::size_t sp = lines[i].find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 >= lines[i].size())
            raise(Errc::io_error, path + ":" + std::to_string(i + 1) + ": expected 'left right'");
        model.merges.emplace_back(lines[i].substr(0, sp), lines[i].substr(sp + 1));
    }
    return model;
}

// ---- training ----

namespace {

struct Word {
    std::vector<std::string> symbols;
    long long count = 0;
};

struct TrainerState {
    std::vector<Word> words;
    std::unordered_map<std::string, long long> pair_counts;
    std::unordered_map<std::string, std::vector<std::size_t>> pair_words;  // may hold stale ids

    void count_word_pairs(std::size_t w, long long sign) {
        const auto& syms = words[w].symbols;
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            std::string key = pair_key(syms[i], syms[i + 1]);
            pair_counts[key] += sign * words[w].count;
            if (sign > 0) {
                auto& lst = pair_words[key];
                if (lst.empty() || lst.back() != w) lst.push_back(w);
            }
        }
    }
};

struct QueueEntry {
    long long count;
    std::string key;
};

struct QueueCmp {
    // max-heap on count, ties lexicographically ascending on the pair
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
        if (a.count != b.count) return a.count < b.count;
        return a.key > b.key;
    }
};

bool pair_eligible(const std::string& left, const std::string& right,
                   const ProtectedSet& protected_tokens) {
    if (protected_tokens.contains(left) || protected_tokens.contains(right)) return false;
    return !protected_tokens.contains(left + right);
}

}  // namespace

BpeModel bpe_train(const std::vector<std::vector<std::string>>& corpus,
                   std::size_t num_merges,
                   ProtectedSet protected_tokens) {
    BpeModel model;
    model.protected_tokens = protected_tokens;
    if (num_merges == 0) return model;

    // collapse the corpus into unique unprotected tokens with counts;
    // std::map keeps the word order (and with it all tie handling) deterministic
    std::map<std::string, long long> token_counts;
    for (const auto& sentence : corpus)
        for (const auto& token : sentence) {
            if (token.empty() || protected_tokens.contains(token)) continue;
            ++token_counts[token];
        }

    TrainerState st;
    st.words.reserve(token_counts.size());
    for (const auto& [token, count] : token_counts) {
        Word w;
        w.symbols = utf8_chars(token);
        w.count = count;
        st.words.push_back(std::move(w));
    }
    for (std::size_t w = 0; w < st.words.size(); ++w) st.count_word_pairs(w, +1);

    std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueCmp> queue;
    for (const auto& [key, count] : st.pair_counts)
        if (count >= static_cast<long long>(kMinPairFrequency)) queue.push({count, key});

    while (model.merges.size() < num_merges && !queue.empty()) {
        QueueEntry top = queue.top();
        queue.pop();
        auto it = st.pair_counts.find(top.key);
        long long current = (it == st.pair_counts.end()) ? 0 : it->second;
        if (current != top.count) {
            if (current >= static_cast<long long>(kMinPairFrequency))
                queue.push({current, top.key});  // reinsert with the fresh count
            continue;
        }
        if (current < static_cast<long long>(kMinPairFrequency)) continue;

        auto [left, right] = split_pair_key(top.key);
        if (!pair_eligible(left, right, model.protected_tokens)) continue;
        model.merges.emplace_back(left, right);
        std::string merged = left + right;

        std::vector<std::size_t> affected = std::move(st.pair_words[top.key]);
        st.pair_words.erase(top.key);
        std::sort(affected.begin(), affected.end());
        affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

        std::vector<std::string> touched_keys;
        for (std::size_t w : affected) {
            auto& syms = st.words[w].symbols;
            bool has_pair = false;
            for (std::size_t i = 0; i + 1 < syms.size(); ++i)
                if (syms[i] == left && syms[i + 1] == right) { has_pair = true; break; }
            if (!has_pair) continue;  // stale index entry

            st.count_word_pairs(w, -1);
            std::vector<std::string> next;
            next.reserve(syms.size());
            std::size_t i = 0;
            while (i < syms.size()) {
                if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
                    next.push_back(merged);
                    i += 2;
                } else {
                    next.push_back(syms[i]);
                    ++i;
                }
            }
            syms = std::move(next);
            st.count_word_pairs(w, +1);
            for (std::size_t i2 = 0; i2 + 1 < syms.size(); ++i2)
                if (syms[i2] == merged || syms[i2 + 1] == merged)
                    touched_keys.push_back(pair_key(syms[i2], syms[i2 + 1]));
        }
        st.pair_counts.erase(top.key);

        std::sort(touched_keys.begin(), touched_keys.end());
        touched_keys.erase(std::unique(touched_keys.begin(), touched_keys.end()),
                           touched_keys.end());
        for (const auto& key : touched_keys) {
            auto cit = st.pair_counts.find(key);
            if (cit != st.pair_counts.end() &&
                cit->second >= static_cast<long long>(kMinPairFrequency))
                queue.push({cit->second, key});
        }
    }
    return model;
}

// ---- encode / decode ----

std::vector<std::string> bpe_split_token(const std::string& token, const BpeModel& model) {
    std::vector<std::string> symbols = utf8_chars(token);
    if (symbols.size() < 2 || model.merges.empty()) return symbols;
    const auto& ranks = model.ranks();

    while (symbols.size() >= 2) {
        std::size_t best_rank = ranks.size();
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            auto it = ranks.find(pair_key(symbols[i], symbols[i + 1]));
            if (it != ranks.end() && it->second < best_rank) best_rank = it->second;
        }
        if (best_rank == ranks.size()) break;
        const auto& [left, right] = model.merges[best_rank];
        std::vector<std::string> next;
        next.reserve(symbols.size());
        std::size_t i = 0;
        while (i < symbols.size()) {
            if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
                next.push_back(left + right);
                i += 2;
            } else {
                next.push_back(symbols[i]);
                ++i;
            }
        }
        symbols = std::move(next);
    }
    return symbols;
}

std::vector<std::string> bpe_encode(const std::vector<std::string>& tokens,
                                    const BpeModel& model) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& token : tokens) {
        if (token.empty()) continue;
        if (model.protected_tokens.contains(token)) {
            out.push_back(token);
            continue;
        }
        auto pieces = bpe_split_token(token, model);
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (i + 1 < pieces.size())
                out.push_back(pieces[i] + std::string(kContinuation));
            else
                out.push_back(pieces[i]);
        }
    }
    return out;
}

std::vector<std::string> bpe_decode(const std::vector<std::string>& subwords) {
    std::vector<std::string> out;
    std::string pending;
    for (const auto& piece : subwords) {
        if (piece.size() >= kContinuation.size() &&
            piece.compare(piece.size() - kContinuation.size(), kContinuation.size(),
                          kContinuation) == 0) {
            pending += piece.substr(0, piece.size() - kContinuation.size());
        } else {
            out.push_back(pending + piece);
            pending.clear();
        }
    }
    if (!pending.empty())
        raise(Errc::dangling_marker, "final subword still carries the continuation marker");
    return out;
}

}  // namespace slotgen::subword
