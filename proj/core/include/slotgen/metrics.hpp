#pragma once

#include <string>
#include <vector>

#include "slotgen/common.hpp"

namespace slotgen::metrics {

struct SentenceScores {
    double bleu = 0.0;   // percentage
    double chrf1 = 0.0;  // percentage
    double ter = 0.0;    // percentage
};

struct EvalReport {
    double bleu = 0.0;
    double chrf1 = 0.0;
    double ter = 0.0;  // percentage; corpus value = total edits / total ref tokens
    std::vector<SentenceScores> sentences;
};

/// mteval-style tokenization applied to cased, detokenized strings before
/// word-level scoring: most ASCII punctuation is separated, periods and
/// commas stay attached between digits.
std::vector<std::string> mteval_tokenize(const std::string& text);

/// Corpus-level BLEU-4 in percent. Geometric mean of modified n-gram
/// precisions times the brevity penalty; 0 when any corpus-level n-gram
/// count is zero. No sentence-level smoothing.
double bleu(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references);

/// Character F-score in percent; n-grams of order 1..max_n inside words
/// (spaces excluded), corpus-aggregated, F-beta over averaged precision and
/// recall.
double chrf(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references,
            double beta = 1.0,
            int max_n = 6);

/// Translation edit rate for one sentence pair (a rate, not a percentage):
/// (insertions + deletions + substitutions + shifts) / |reference|. Shifts
/// move a contiguous hypothesis span and are accepted greedily while they
/// reduce the edit distance.
double ter(const std::string& hypothesis, const std::string& reference);

/// Word edits + shifts for one pair; building block for corpus TER.
std::size_t ter_edits(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);

EvalReport evaluate(const std::vector<std::string>& hypotheses,
                    const std::vector<std::string>& references);

}  // namespace slotgen::metrics
