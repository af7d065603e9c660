#include "slotgen/lmfilter.hpp"

#include <algorithm>
#include <cmath>

namespace slotgen::lmfilter {

namespace {

constexpr char kSep = '\x1f';

std::string joined(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
    std::string key;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) key += kSep;
        key += tokens[i];
    }
    return key;
}

}  // namespace

NGramLM NGramLM::train(const std::vector<std::vector<std::string>>& titles, LmConfig cfg) {
    if (titles.empty()) raise(Errc::config_error, "training corpus is empty");
    if (cfg.order < 1) raise(Errc::config_error, "LM order must be >= 1");
    if (cfg.interpolation_weights.size() != cfg.order)
        raise(Errc::config_error, "need one interpolation weight per order");
    double sum = 0.0;
    for (double w : cfg.interpolation_weights) {
        if (w <= 0.0) raise(Errc::config_error, "interpolation weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        raise(Errc::config_error, "interpolation weights must sum to 1");

    NGramLM lm;
    lm.cfg_ = cfg;
    lm.context_counts_.assign(cfg.order + 1, {});
    lm.gram_counts_.assign(cfg.order + 1, {});

    for (const auto& title : titles) {
        // pad with order-1 start markers, close with the end marker
        std::vector<std::string> padded(cfg.order - 1, std::string(kBos));
        padded.insert(padded.end(), title.begin(), title.end());
        padded.push_back(std::string(kEos));

        for (std::size_t pos = cfg.order - 1; pos < padded.size(); ++pos) {
            lm.vocab_.insert(padded[pos]);
            ++lm.total_tokens_;
            for (std::size_t n = 1; n <= cfg.order; ++n) {
                std::size_t begin = pos + 1 - n;
                ++lm.gram_counts_[n][joined(padded, begin, pos + 1)];
                if (n >= 2) ++lm.context_counts_[n][joined(padded, begin, pos)];
            }
        }
    }
    return lm;
}

std::string NGramLM::map_token(const std::string& token) const {
    if (token == kBos) return token;
    return vocab_.count(token) ? token : std::string(kUnk);
}

double NGramLM::order_probability(std::size_t n, const std::string& token,
                                  const std::vector<std::string>& context,
                                  bool* available) const {
    if (n == 1) {
        *available = true;
        auto it = gram_counts_[1].find(token);
        long long c = (it == gram_counts_[1].end()) ? 0 : it->second;
        double denom = static_cast<double>(total_tokens_) +
                       cfg_.add_alpha * static_cast<double>(vocab_.size() + 1);
        return (static_cast<double>(c) + cfg_.add_alpha) / denom;
    }
    std::string ctx = joined(context, context.size() - (n - 1), context.size());
    auto cit = context_counts_[n].find(ctx);
    if (cit == context_counts_[n].end() || cit->second == 0) {
        *available = false;
        return 0.0;
    }
    *available = true;
    auto git = gram_counts_[n].find(ctx + kSep + token);
    long long c = (git == gram_counts_[n].end()) ? 0 : git->second;
    return static_cast<double>(c) / static_cast<double>(cit->second);
}

double NGramLM::probability(const std::string& token, std::vector<std::string> context) const {
    std::string mapped = map_token(token);
    // truncate/pad the context to exactly order-1 entries, <s> on the left
    std::vector<std::string> ctx(cfg_.order - 1, std::string(kBos));
    std::size_t take = std::min(context.size(), cfg_.order - 1);
    for (std::size_t i = 0; i < take; ++i) {
        const std::string& c = context[context.size() - take + i];
        ctx[cfg_.order - 1 - take + i] = map_token(c);
    }

    double prob = 0.0;
    double used_weight = 0.0;
    std::vector<double> terms(cfg_.order + 1, 0.0);
    std::vector<bool> avail(cfg_.order + 1, false);
    for (std::size_t n = 1; n <= cfg_.order; ++n) {
        bool ok = false;
        terms[n] = order_probability(n, mapped, ctx, &ok);
        avail[n] = ok;
        if (ok) used_weight += cfg_.interpolation_weights[cfg_.order - n];
    }
    for (std::size_t n = 1; n <= cfg_.order; ++n) {
        if (!avail[n]) continue;
        prob += cfg_.interpolation_weights[cfg_.order - n] / used_weight * terms[n];
    }
    return prob;
}

double NGramLM::perplexity(const std::vector<std::string>& sentence) const {
    if (sentence.empty()) raise(Errc::empty_sentence, "cannot score an empty sentence");

    std::vector<std::string> padded(cfg_.order - 1, std::string(kBos));
    for (const auto& t : sentence) padded.push_back(map_token(t));
    padded.push_back(std::string(kEos));

    double log_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t pos = cfg_.order - 1; pos < padded.size(); ++pos) {
        std::vector<std::string> ctx(padded.begin() + static_cast<std::ptrdiff_t>(pos + 1 - cfg_.order),
                                     padded.begin() + static_cast<std::ptrdiff_t>(pos));
        log_sum += std::log(probability(padded[pos], ctx));
        ++count;
    }
    return std::exp(-log_sum / static_cast<double>(count));
}

std::vector<std::string> NGramLM::vocab_tokens() const {
    std::vector<std::string> out(vocab_.begin(), vocab_.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ScoredSentence> filter_corpus(const NGramLM& lm,
                                          const std::vector<std::vector<std::string>>& corpus,
                                          std::size_t min_len,
                                          std::size_t top_k,
                                          FilterStats* stats) {
    if (top_k < 1) raise(Errc::config_error, "top_k must be >= 1");
    FilterStats local;
    local.total = corpus.size();

    std::vector<ScoredSentence> scored;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].size() < min_len) {
            ++local.removed_short;
            continue;
        }
        scored.push_back({i, lm.perplexity(corpus[i]), corpus[i]});
    }
    local.scored = scored.size();

    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.perplexity != b.perplexity) return a.perplexity < b.perplexity;
        return a.index < b.index;
    });
    if (scored.size() > top_k) scored.resize(top_k);
    local.selected = scored.size();

    if (stats != nullptr) *stats = local;
    return scored;
}

}  // namespace slotgen::lmfilter
