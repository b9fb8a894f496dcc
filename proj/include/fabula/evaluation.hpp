#pragma once

#include "fabula/backends.hpp"
#include "fabula/metrics.hpp"
#include "fabula/prompt.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fabula {

/// One evaluation item: up to four context sentences and the true next one.
struct CorpusItem {
    std::vector<std::string> context;
    std::string reference;

    friend bool operator==(const CorpusItem&, const CorpusItem&) = default;
};

/// JSONL, one {"context": [...], "reference": "..."} per line. Blank lines are
/// skipped; errors carry the 1-based line number.
std::vector<CorpusItem> parse_corpus(std::string_view jsonl);
std::vector<CorpusItem> load_corpus(const std::filesystem::path& path);

/// Deterministic bag-of-character-trigram token embeddings (hashed into
/// `dim` buckets). Stands in for a contextual embedding model.
class HashingEmbedder {
public:
    explicit HashingEmbedder(std::size_t dim = 256);

    [[nodiscard]] std::vector<Embedding> embed(std::string_view sentence) const;

private:
    std::size_t dim_;
};

/// A text backend plus the prompt style it expects. Prompted systems get the
/// keywords and emotions of the reference; baseline systems get empty ones.
struct ComparisonSystem {
    std::string name;
    std::shared_ptr<TextBackend> backend;
    bool prompted = true;
};

/// "mock:prompted", "mock:baseline", "http://..." (prompted) or
/// "baseline:http://...".
ComparisonSystem make_system(const std::string& spec, std::uint64_t seed = 42);

/// Builds the prompt a system sees for an item.
std::string comparison_prompt(const CorpusItem& item, bool prompted);

using Scores = std::map<std::string, double>;
using Scorer = std::function<Scores(const std::string& reference, const std::string& hypothesis)>;

/// bleu_avg, meteor and embed_f1 (over HashingEmbedder vectors).
Scorer default_scorer();

struct ItemResult {
    std::size_t index = 0;
    std::string reference;
    std::string hypothesis_a;
    std::string hypothesis_b;
    Scores scores_a;
    Scores scores_b;
};

struct ComparisonReport {
    std::string system_a;
    std::string system_b;
    DistributionReport report_a;
    DistributionReport report_b;
    /// (mean_a - mean_b) / mean_b; absent when mean_b is 0.
    std::map<std::string, std::optional<double>> improvement;
    std::optional<double> corpus_bleu_a;
    std::optional<double> corpus_bleu_b;
    std::size_t items = 0;
    std::size_t skipped = 0;
    std::vector<ItemResult> results;  ///< ordered by item index
};

/// Distribution reports and improvements from per-metric score lists.
ComparisonReport summarize_comparison(const std::map<std::string, std::vector<double>>& scores_a,
                                      const std::map<std::string, std::vector<double>>& scores_b);

struct ComparisonOptions {
    Scorer scorer;  ///< default_scorer() when empty
    GenerationConfig generation;
    std::size_t workers = 4;
};

/// Generates with both systems for every item and scores against the
/// reference. An item whose generation fails in either system is skipped;
/// more than half skipped raises an aborted_run Error.
ComparisonReport run_comparison(const std::vector<CorpusItem>& corpus, const ComparisonSystem& a,
                                const ComparisonSystem& b, const ComparisonOptions& options = {});

nlohmann::json report_to_json(const ComparisonReport& report);

/// One row per item: index, reference, both hypotheses and every score.
void write_scores_csv(const ComparisonReport& report, std::ostream& out);

}  // namespace fabula
