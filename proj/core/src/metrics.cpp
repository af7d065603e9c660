#include "slotgen/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace slotgen::metrics {

namespace {

bool is_separable_punct(char c) {
    switch (c) {
        case '{': case '}': case '~': case '[': case ']': case '`': case '!': case '"':
        case '#': case '$': case '%': case '&': case '(': case ')': case '*': case '+':
        case ':': case ';': case '<': case '=': case '>': case '?': case '@': case '/':
        case '\\': case '^': case '_': case '|':
            return true;
        default:
            return false;
    }
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

using Counts = std::map<std::string, long long>;

void count_ngrams(const std::vector<std::string>& tokens, int n, Counts& out) {
    if (static_cast<int>(tokens.size()) < n) return;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        std::string key;
        for (int k = 0; k < n; ++k) {
            if (k > 0) key += '\x1f';
            key += tokens[i + static_cast<std::size_t>(k)];
        }
        ++out[key];
    }
}

long long clipped_matches(const Counts& hyp, const Counts& ref) {
    long long matches = 0;
    for (const auto& [gram, count] : hyp) {
        auto it = ref.find(gram);
        if (it != ref.end()) matches += std::min(count, it->second);
    }
    return matches;
}

void check_aligned(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    if (hyp.size() != ref.size() || hyp.empty())
        raise(Errc::length_mismatch,
              "need equally many hypotheses and references (got " +
                  std::to_string(hyp.size()) + " vs " + std::to_string(ref.size()) + ")");
}

}  // namespace

std::vector<std::string> mteval_tokenize(const std::string& text) {
    std::string spaced;
    spaced.reserve(text.size() * 2);
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        char c = text[i];
        if (is_separable_punct(c)) {
            spaced += ' ';
            spaced += c;
            spaced += ' ';
        } else if (c == '.' || c == ',') {
            // keep 3.5 or 1,000 together
            bool digit_before = i > 0 && is_digit(text[i - 1]);
            bool digit_after = i + 1 < n && is_digit(text[i + 1]);
            if (digit_before && digit_after) {
                spaced += c;
            } else {
                spaced += ' ';
                spaced += c;
                spaced += ' ';
            }
        } else if (c == '-') {
            if (i > 0 && is_digit(text[i - 1])) {
                spaced += " - ";
            } else {
                spaced += c;
            }
        } else {
            spaced += c;
        }
    }
    return split_whitespace(spaced);
}

double bleu(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references) {
    check_aligned(hypotheses, references);
    constexpr int kMaxOrder = 4;

    long long hyp_len = 0;
    long long ref_len = 0;
    std::array<long long, kMaxOrder> matches{};
    std::array<long long, kMaxOrder> totals{};

    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        auto hyp = mteval_tokenize(hypotheses[s]);
        auto ref = mteval_tokenize(references[s]);
        hyp_len += static_cast<long long>(hyp.size());
        ref_len += static_cast<long long>(ref.size());
        for (int n = 1; n <= kMaxOrder; ++n) {
            Counts hc, rc;
            count_ngrams(hyp, n, hc);
            count_ngrams(ref, n, rc);
            matches[static_cast<std::size_t>(n - 1)] += clipped_matches(hc, rc);
            long long total = static_cast<long long>(hyp.size()) - n + 1;
            totals[static_cast<std::size_t>(n - 1)] += std::max<long long>(total, 0);
        }
    }

    if (hyp_len == 0) return 0.0;
    double log_precision = 0.0;
    for (int n = 0; n < kMaxOrder; ++n) {
        if (matches[static_cast<std::size_t>(n)] == 0 ||
            totals[static_cast<std::size_t>(n)] == 0)
            return 0.0;
        log_precision += std::log(static_cast<double>(matches[static_cast<std::size_t>(n)]) /
                                  static_cast<double>(totals[static_cast<std::size_t>(n)]));
    }
    double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) /
                                            static_cast<double>(hyp_len)));
    return 100.0 * bp * std::exp(log_precision / kMaxOrder);
}

double chrf(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references,
            double beta,
            int max_n) {
    check_aligned(hypotheses, references);

    std::vector<long long> matches(static_cast<std::size_t>(max_n), 0);
    std::vector<long long> hyp_totals(static_cast<std::size_t>(max_n), 0);
    std::vector<long long> ref_totals(static_cast<std::size_t>(max_n), 0);

    auto char_ngrams = [max_n](const std::string& text, std::vector<Counts>& grams) {
        for (const auto& word : split_whitespace(text)) {
            auto chars = utf8_chars(word);
            for (int n = 1; n <= max_n; ++n) {
                if (static_cast<int>(chars.size()) < n) break;
                for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= chars.size(); ++i) {
                    std::string key;
                    for (int k = 0; k < n; ++k) key += chars[i + static_cast<std::size_t>(k)];
                    ++grams[static_cast<std::size_t>(n - 1)][key];
                }
            }
        }
    };

    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        std::vector<Counts> hyp_grams(static_cast<std::size_t>(max_n));
        std::vector<Counts> ref_grams(static_cast<std::size_t>(max_n));
        char_ngrams(hypotheses[s], hyp_grams);
        char_ngrams(references[s], ref_grams);
        for (int n = 0; n < max_n; ++n) {
            std::size_t ni = static_cast<std::size_t>(n);
            matches[ni] += clipped_matches(hyp_grams[ni], ref_grams[ni]);
            for (const auto& [g, c] : hyp_grams[ni]) hyp_totals[ni] += c;
            for (const auto& [g, c] : ref_grams[ni]) ref_totals[ni] += c;
        }
    }

    double precision_sum = 0.0;
    double recall_sum = 0.0;
    int effective_orders = 0;
    for (int n = 0; n < max_n; ++n) {
        std::size_t ni = static_cast<std::size_t>(n);
        if (hyp_totals[ni] == 0 && ref_totals[ni] == 0) continue;
        ++effective_orders;
        if (hyp_totals[ni] > 0)
            precision_sum += static_cast<double>(matches[ni]) /
                             static_cast<double>(hyp_totals[ni]);
        if (ref_totals[ni] > 0)
            recall_sum += static_cast<double>(matches[ni]) /
                          static_cast<double>(ref_totals[ni]);
    }
    if (effective_orders == 0) return 0.0;
    double precision = precision_sum / effective_orders;
    double recall = recall_sum / effective_orders;
    if (precision + recall == 0.0) return 0.0;
    double b2 = beta * beta;
    return 100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

namespace {

std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    std::vector<std::size_t> prev(n + 1);
    std::vector<std::size_t> cur(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

std::vector<std::string> apply_shift(const std::vector<std::string>& tokens,
                                     std::size_t start, std::size_t len, std::size_t dest) {
    std::vector<std::string> span(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                  tokens.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::vector<std::string> rest;
    rest.reserve(tokens.size() - len);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (i < start || i >= start + len) rest.push_back(tokens[i]);
    rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(dest), span.begin(), span.end());
    return rest;
}

constexpr std::size_t kMaxShiftSpan = 10;
constexpr std::size_t kMaxShiftCandidates = 1000;

}  // namespace

std::size_t ter_edits(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    if (ref.empty()) raise(Errc::empty_reference, "TER needs a non-empty reference");

    std::vector<std::string> current = hyp;
    std::size_t shifts = 0;
    std::size_t best = edit_distance(current, ref);
    std::size_t budget = kMaxShiftCandidates;

    while (best > 0 && budget > 0) {
        std::size_t best_gain = 0;
        std::size_t best_start = 0, best_len = 0, best_dest = 0;
        const std::size_t m = current.size();
        for (std::size_t start = 0; start < m && budget > 0; ++start) {
            for (std::size_t len = 1; len <= std::min(kMaxShiftSpan, m - start) && budget > 0;
                 ++len) {
                for (std::size_t dest = 0; dest + len <= m && budget > 0; ++dest) {
                    if (dest == start) continue;
                    --budget;
                    auto candidate = apply_shift(current, start, len, dest);
                    std::size_t e = edit_distance(candidate, ref);
                    if (best - std::min(e, best) > best_gain) {
                        best_gain = best - e;
                        best_start = start;
                        best_len = len;
                        best_dest = dest;
                    }
                }
            }
        }
        if (best_gain == 0) break;
        current = apply_shift(current, best_start, best_len, best_dest);
        best -= best_gain;
        ++shifts;
    }
    return best + shifts;
}

double ter(const std::string& hypothesis, const std::string& reference) {
    auto ref = mteval_tokenize(reference);
    if (ref.empty()) raise(Errc::empty_reference, "TER needs a non-empty reference");
    auto hyp = mteval_tokenize(hypothesis);
    return static_cast<double>(ter_edits(hyp, ref)) / static_cast<double>(ref.size());
}

EvalReport evaluate(const std::vector<std::string>& hypotheses,
                    const std::vector<std::string>& references) {
    check_aligned(hypotheses, references);
    EvalReport report;
    report.bleu = bleu(hypotheses, references);
    report.chrf1 = chrf(hypotheses, references);

    long long total_edits = 0;
    long long total_ref = 0;
    report.sentences.reserve(hypotheses.size());
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        auto hyp = mteval_tokenize(hypotheses[i]);
        auto ref = mteval_tokenize(references[i]);
        if (ref.empty())
            raise(Errc::empty_reference, "line " + std::to_string(i + 1) + ": empty reference");
        std::size_t edits = ter_edits(hyp, ref);
        total_edits += static_cast<long long>(edits);
        total_ref += static_cast<long long>(ref.size());

        SentenceScores s;
        s.bleu = bleu({hypotheses[i]}, {references[i]});
        s.chrf1 = chrf({hypotheses[i]}, {references[i]});
        s.ter = 100.0 * static_cast<double>(edits) / static_cast<double>(ref.size());
        report.sentences.push_back(s);
    }
    report.ter = 100.0 * static_cast<double>(total_edits) / static_cast<double>(total_ref);
    return report;
}

}  // namespace slotgen::metrics
