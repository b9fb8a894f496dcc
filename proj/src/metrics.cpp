#include "fabula/metrics.hpp"

#include "fabula/error.hpp"
#include "fabula/stemmer.hpp"
#include "fabula/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace fabula {
namespace {

bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
    NgramCounts counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::vector<std::string_view> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                           tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
        ++counts[std::move(gram)];
    }
    return counts;
}

struct Clipped {
    double matches = 0;
    double total = 0;
};

Clipped clip(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
             std::size_t n) {
    const auto ref_counts = count_ngrams(ref, n);
    Clipped out;
    for (const auto& [gram, count] : count_ngrams(hyp, n)) {
        out.total += static_cast<double>(count);
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) out.matches += static_cast<double>(std::min(count, it->second));
    }
    return out;
}

double brevity_penalty(double ref_len, double hyp_len) {
    return hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
}

void check_order(int n) {
    if (n < 1 || n > 4) {
        throw InvalidArgument("BLEU order must lie in [1, 4], got " + std::to_string(n));
    }
}

double bleu_tokens(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
                   int n) {
    if (hyp.empty()) return 0.0;
    const auto c = clip(ref, hyp, static_cast<std::size_t>(n));
    const double precision = c.matches > 0 ? c.matches / c.total : bleu_epsilon;
    return precision *
           brevity_penalty(static_cast<double>(ref.size()), static_cast<double>(hyp.size()));
}

constexpr std::size_t meteor_node_budget = 200000;

class ChunkSearch {
public:
    ChunkSearch(std::vector<int> hyp_class, std::vector<int> ref_class, std::size_t classes)
        : hyp_(std::move(hyp_class)), ref_(std::move(ref_class)),
          remaining_hyp_(classes, 0), needed_(classes, 0), used_(ref_.size(), false) {
        std::vector<std::size_t> ref_count(classes, 0);
        for (int c : hyp_) ++remaining_hyp_[static_cast<std::size_t>(c)];
        for (int c : ref_) ++ref_count[static_cast<std::size_t>(c)];
        for (std::size_t c = 0; c < classes; ++c) {
            needed_[c] = std::min(remaining_hyp_[c], ref_count[c]);
            matches_ += needed_[c];
        }
    }

    MeteorAlignment run() {
        if (matches_ > 0) search(0, 0, -2, -2);
        return {matches_, matches_ > 0 ? best_ : 0, hyp_.size(), ref_.size()};
    }

private:
    void search(std::size_t i, std::size_t chunks, int prev_h, int prev_r) {
        if (chunks >= best_) return;
        if (i == hyp_.size()) {
            best_ = chunks;
            return;
        }
        // Past the budget only the first (greedy) descent is completed.
        if (++nodes_ > meteor_node_budget && best_ != unset) return;

        const auto c = static_cast<std::size_t>(hyp_[i]);
        --remaining_hyp_[c];
        if (needed_[c] > 0) {
            // The continuation of the current chunk is the most promising branch.
            const int preferred = prev_h == static_cast<int>(i) - 1 ? prev_r + 1 : -1;
            if (preferred >= 0 && preferred < static_cast<int>(ref_.size()) &&
                !used_[static_cast<std::size_t>(preferred)] &&
                ref_[static_cast<std::size_t>(preferred)] == hyp_[i]) {
                take(i, static_cast<std::size_t>(preferred), chunks, prev_h, prev_r);
            }
            for (std::size_t j = 0; j < ref_.size(); ++j) {
                if (static_cast<int>(j) == preferred || used_[j] || ref_[j] != hyp_[i]) continue;
                take(i, j, chunks, prev_h, prev_r);
            }
        }
        if (remaining_hyp_[c] >= needed_[c]) {
            search(i + 1, chunks, prev_h, prev_r);
        }
        ++remaining_hyp_[c];
    }

    void take(std::size_t i, std::size_t j, std::size_t chunks, int prev_h, int prev_r) {
        const bool continues = static_cast<int>(i) == prev_h + 1 && static_cast<int>(j) == prev_r + 1;
        const auto c = static_cast<std::size_t>(hyp_[i]);
        used_[j] = true;
        --needed_[c];
        search(i + 1, continues ? chunks : chunks + 1, static_cast<int>(i), static_cast<int>(j));
        ++needed_[c];
        used_[j] = false;
    }

    static constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();

    std::vector<int> hyp_;
    std::vector<int> ref_;
    std::vector<std::size_t> remaining_hyp_;
    std::vector<std::size_t> needed_;
    std::vector<bool> used_;
    std::size_t matches_ = 0;
    std::size_t best_ = unset;
    std::size_t nodes_ = 0;
};

double norm(const Embedding& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

std::vector<std::string> metric_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char c : text) {
        if (is_space(c) || is_ascii_punct(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
            if (!is_space(c)) tokens.emplace_back(1, c);
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double bleu_n(std::string_view reference, std::string_view hypothesis, int n) {
    check_order(n);
    return bleu_tokens(metric_tokens(reference), metric_tokens(hypothesis), n);
}

double bleu_avg(std::string_view reference, std::string_view hypothesis) {
    const auto ref = metric_tokens(reference);
    const auto hyp = metric_tokens(hypothesis);
    double sum = 0.0;
    for (int n = 1; n <= 4; ++n) sum += bleu_tokens(ref, hyp, n);
    return sum / 4.0;
}

double corpus_bleu(const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty()) {
        throw InvalidArgument("corpus_bleu needs at least one pair");
    }
    std::array<Clipped, 4> pooled{};
    double ref_len = 0;
    double hyp_len = 0;
    for (const auto& [reference, hypothesis] : pairs) {
        const auto ref = metric_tokens(reference);
        const auto hyp = metric_tokens(hypothesis);
        ref_len += static_cast<double>(ref.size());
        hyp_len += static_cast<double>(hyp.size());
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto c = clip(ref, hyp, n);
            pooled[n - 1].matches += c.matches;
            pooled[n - 1].total += c.total;
        }
    }
    double log_precision = 0.0;
    for (const auto& c : pooled) {
        if (c.matches == 0) return 0.0;
        log_precision += std::log(c.matches / c.total);
    }
    return brevity_penalty(ref_len, hyp_len) * std::exp(log_precision / 4.0);
}

MeteorAlignment meteor_align(std::string_view reference, std::string_view hypothesis) {
    // Stems induce equivalence classes; exact matches always share a stem.
    std::unordered_map<std::string, int> class_ids;
    auto classify = [&](std::string_view text) {
        std::vector<int> ids;
        for (const auto& token : metric_tokens(text)) {
            const auto stem = porter_stem(to_lower(token));
            const auto [it, inserted] =
                class_ids.try_emplace(stem, static_cast<int>(class_ids.size()));
            ids.push_back(it->second);
        }
        return ids;
    };
    auto ref = classify(reference);
    auto hyp = classify(hypothesis);
    return ChunkSearch(std::move(hyp), std::move(ref), class_ids.size()).run();
}

double meteor(std::string_view reference, std::string_view hypothesis) {
    const auto a = meteor_align(reference, hypothesis);
    if (a.matches == 0) return 0.0;
    const double m = static_cast<double>(a.matches);
    const double precision = m / static_cast<double>(a.hypothesis_length);
    const double recall = m / static_cast<double>(a.reference_length);
    const double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    const double fragmentation = static_cast<double>(a.chunks) / m;
    const double penalty = 0.5 * fragmentation * fragmentation * fragmentation;
    return fmean * (1.0 - penalty);
}

double embed_greedy_f1(const std::vector<Embedding>& reference,
                       const std::vector<Embedding>& hypothesis) {
    if (reference.empty() || hypothesis.empty()) {
        throw InvalidArgument("embed_greedy_f1 needs non-empty embedding lists");
    }
    const auto dim = reference.front().size();
    std::vector<double> ref_norms;
    std::vector<double> hyp_norms;
    auto check = [dim](const std::vector<Embedding>& list, std::vector<double>& norms) {
        for (const auto& v : list) {
            if (v.size() != dim) {
                throw InvalidArgument("embedding dimension mismatch: " + std::to_string(v.size()) +
                                      " vs " + std::to_string(dim));
            }
            const double n = norm(v);
            if (!(n > 0.0) || !std::isfinite(n)) {
                throw InvalidArgument("embedding with zero or non-finite norm");
            }
            norms.push_back(n);
        }
    };
    check(reference, ref_norms);
    check(hypothesis, hyp_norms);

    std::vector<double> best_for_hyp(hypothesis.size(), -std::numeric_limits<double>::infinity());
    std::vector<double> best_for_ref(reference.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < hypothesis.size(); ++i) {
        for (std::size_t j = 0; j < reference.size(); ++j) {
            const double cos = std::inner_product(hypothesis[i].begin(), hypothesis[i].end(),
                                                  reference[j].begin(), 0.0) /
                               (hyp_norms[i] * ref_norms[j]);
            best_for_hyp[i] = std::max(best_for_hyp[i], cos);
            best_for_ref[j] = std::max(best_for_ref[j], cos);
        }
    }
    const double precision = std::accumulate(best_for_hyp.begin(), best_for_hyp.end(), 0.0) /
                             static_cast<double>(hypothesis.size());
    const double recall = std::accumulate(best_for_ref.begin(), best_for_ref.end(), 0.0) /
                          static_cast<double>(reference.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double roc_auc(const std::vector<LabeledScore>& items) {
    std::vector<LabeledScore> sorted = items;
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });
    double positive_rank_sum = 0.0;
    double positives = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) ++j;
        // Tied scores share the mean of ranks i+1 .. j.
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (sorted[k].truth) {
                positive_rank_sum += rank;
                positives += 1.0;
            }
        }
        i = j;
    }
    const double negatives = static_cast<double>(sorted.size()) - positives;
    if (positives == 0.0 || negatives == 0.0) {
        throw InvalidArgument("AUC needs at least one positive and one negative");
    }
    return (positive_rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double roc_auc_macro(const std::vector<std::vector<LabeledScore>>& classes) {
    double sum = 0.0;
    std::size_t included = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& items = classes[c];
        const bool has_pos = std::any_of(items.begin(), items.end(),
                                         [](const LabeledScore& s) { return s.truth; });
        const bool has_neg = std::any_of(items.begin(), items.end(),
                                         [](const LabeledScore& s) { return !s.truth; });
        if (!has_pos || !has_neg) {
            spdlog::warn("roc_auc_macro: class {} lacks a positive or a negative; skipped", c);
            continue;
        }
        sum += roc_auc(items);
        ++included;
    }
    if (included == 0) {
        throw Error(ErrorCode::undefined_result, "roc_auc_macro: no class has both labels");
    }
    return sum / static_cast<double>(included);
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw InvalidArgument("quantile of an empty list");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw InvalidArgument("quantile q must lie in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return values[lo];
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

MetricDistribution describe(const std::vector<double>& scores) {
    if (scores.empty()) {
        throw InvalidArgument("cannot describe an empty score list");
    }
    MetricDistribution d;
    d.n = scores.size();
    d.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(d.n);
    d.median = quantile(scores, 0.5);
    d.q1 = quantile(scores, 0.25);
    d.q3 = quantile(scores, 0.75);
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    d.min = *lo;
    d.max = *hi;
    d.zero_count = static_cast<std::size_t>(std::count(scores.begin(), scores.end(), 0.0));
    return d;
}

}  // namespace fabula
