#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fabula {

/// Evaluation tokenization: whitespace separates tokens and every ASCII
/// punctuation character is a token of its own. Case is preserved.
std::vector<std::string> metric_tokens(std::string_view text);

/// Precision floor used when a non-empty hypothesis has no matching n-gram.
inline constexpr double bleu_epsilon = 1e-9;

/// Sentence BLEU for a single n in [1, 4]: clipped n-gram precision times the
/// brevity penalty. An empty hypothesis scores 0.
double bleu_n(std::string_view reference, std::string_view hypothesis, int n);

/// Mean of bleu_n over n = 1..4.
double bleu_avg(std::string_view reference, std::string_view hypothesis);

/// Corpus BLEU over pooled counts, unsmoothed. Throws InvalidArgument on an
/// empty list.
double corpus_bleu(const std::vector<std::pair<std::string, std::string>>& pairs);

/// Exact-or-stem unigram alignment, lowercased.
struct MeteorAlignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    std::size_t hypothesis_length = 0;
    std::size_t reference_length = 0;
};

MeteorAlignment meteor_align(std::string_view reference, std::string_view hypothesis);

/// Fmean * (1 - 0.5 * (chunks / m)^3), 0 when nothing matches.
double meteor(std::string_view reference, std::string_view hypothesis);

using Embedding = std::vector<double>;

/// Greedy cosine matching F1 over token embeddings. Throws InvalidArgument on
/// empty lists, dimension mismatch or zero-norm vectors.
double embed_greedy_f1(const std::vector<Embedding>& reference,
                       const std::vector<Embedding>& hypothesis);

struct LabeledScore {
    bool truth = false;
    double score = 0.0;
};

/// Rank-based AUC of one class; ties count one half. Throws InvalidArgument
/// when the class lacks a positive or a negative.
double roc_auc(const std::vector<LabeledScore>& items);

/// Unweighted mean of per-class AUC. Classes without both a positive and a
/// negative are skipped with a warning; throws an undefined_result Error when
/// none remains.
double roc_auc_macro(const std::vector<std::vector<LabeledScore>>& classes);

struct MetricDistribution {
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t zero_count = 0;
    std::size_t n = 0;

    friend bool operator==(const MetricDistribution&, const MetricDistribution&) = default;
};

/// Inclusive linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Throws InvalidArgument on an empty list.
MetricDistribution describe(const std::vector<double>& scores);

using DistributionReport = std::map<std::string, MetricDistribution>;

}  // namespace fabula
