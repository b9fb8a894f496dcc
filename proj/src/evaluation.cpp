#include "fabula/evaluation.hpp"

#include "fabula/emotion.hpp"
#include "fabula/error.hpp"
#include "fabula/http_backends.hpp"
#include "fabula/keywords.hpp"
#include "fabula/mock_backends.hpp"
#include "fabula/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace fabula {
namespace {

using nlohmann::json;

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (const char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

json distribution_to_json(const MetricDistribution& d) {
    return json{{"mean", d.mean},       {"median", d.median}, {"q1", d.q1},
                {"q3", d.q3},           {"min", d.min},       {"max", d.max},
                {"zero_count", d.zero_count}, {"n", d.n}};
}

json optional_number(const std::optional<double>& value) {
    return value ? json(*value) : json(nullptr);
}

}  // namespace

std::vector<CorpusItem> parse_corpus(std::string_view jsonl) {
    std::vector<CorpusItem> corpus;
    std::size_t line_number = 0;
    for (const auto& line : split(jsonl, '\n')) {
        ++line_number;
        if (trim(line).empty()) continue;
        CorpusItem item;
        try {
            const auto j = json::parse(line);
            item.context = j.at("context").get<std::vector<std::string>>();
            item.reference = j.at("reference").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError("corpus line " + std::to_string(line_number) + ": " + e.what(),
                             line_number);
        }
        if (item.context.empty() || item.context.size() > PromptSpec::max_context) {
            throw ParseError("corpus line " + std::to_string(line_number) +
                                 ": context must hold 1 to 4 sentences",
                             line_number);
        }
        if (trim(item.reference).empty()) {
            throw ParseError("corpus line " + std::to_string(line_number) + ": empty reference",
                             line_number);
        }
        corpus.push_back(std::move(item));
    }
    return corpus;
}

std::vector<CorpusItem> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw NotFound("cannot open corpus " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_corpus(buffer.str());
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) {
        throw InvalidArgument("embedding dimension must be positive");
    }
}

std::vector<Embedding> HashingEmbedder::embed(std::string_view sentence) const {
    std::vector<Embedding> out;
    for (const auto& token : metric_tokens(sentence)) {
        const auto padded = "#" + to_lower(token) + "#";
        Embedding v(dim_, 0.0);
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            v[mix64(fnv1a(std::string_view(padded).substr(i, 3))) % dim_] += 1.0;
        }
        out.push_back(std::move(v));
    }
    return out;
}

ComparisonSystem make_system(const std::string& spec, std::uint64_t seed) {
    if (spec == "mock:prompted") {
        return {spec, std::make_shared<MockTextBackend>(seed, MockTextStyle::prompted), true};
    }
    if (spec == "mock:baseline") {
        return {spec, std::make_shared<MockTextBackend>(seed, MockTextStyle::baseline), false};
    }
    bool prompted = true;
    std::string url = spec;
    if (url.rfind("baseline:", 0) == 0) {
        prompted = false;
        url = url.substr(9);
    }
    if (url.rfind("http://", 0) != 0) {
        throw InvalidArgument("unknown system '" + spec +
                              "'; expected mock:prompted, mock:baseline or an http:// URL");
    }
    BackendEndpoint endpoint;
    endpoint.base_url = url;
    return {spec, std::make_shared<HttpTextBackend>(endpoint), prompted};
}

std::string comparison_prompt(const CorpusItem& item, bool prompted) {
    PromptSpec spec;
    spec.context = item.context;
    if (prompted) {
        spec.keywords = extract_keywords(item.reference);
        spec.emotions = threshold_labels(lexicon_score(item.reference, EmotionLexicon::bundled()),
                                         default_emotion_threshold);
    }
    return build_prompt(spec);
}

Scorer default_scorer() {
    return [embedder = HashingEmbedder()](const std::string& reference,
                                          const std::string& hypothesis) {
        Scores scores;
        scores["bleu_avg"] = bleu_avg(reference, hypothesis);
        scores["meteor"] = meteor(reference, hypothesis);
        const auto ref = embedder.embed(reference);
        const auto hyp = embedder.embed(hypothesis);
        scores["embed_f1"] = ref.empty() || hyp.empty() ? 0.0 : embed_greedy_f1(ref, hyp);
        return scores;
    };
}

ComparisonReport summarize_comparison(const std::map<std::string, std::vector<double>>& scores_a,
                                      const std::map<std::string, std::vector<double>>& scores_b) {
    ComparisonReport report;
    for (const auto& [metric, values] : scores_a) {
        const auto it = scores_b.find(metric);
        if (it == scores_b.end()) {
            throw InvalidArgument("metric '" + metric + "' missing from the second system");
        }
        report.report_a[metric] = describe(values);
        report.report_b[metric] = describe(it->second);
        const double mean_a = report.report_a[metric].mean;
        const double mean_b = report.report_b[metric].mean;
        report.improvement[metric] =
            mean_b == 0.0 ? std::nullopt : std::optional<double>((mean_a - mean_b) / mean_b);
    }
    if (scores_b.size() != scores_a.size()) {
        throw InvalidArgument("both systems must report the same metrics");
    }
    return report;
}

ComparisonReport run_comparison(const std::vector<CorpusItem>& corpus, const ComparisonSystem& a,
                                const ComparisonSystem& b, const ComparisonOptions& options) {
    if (corpus.empty()) {
        throw InvalidArgument("evaluation corpus is empty");
    }
    if (!a.backend || !b.backend) {
        throw InvalidArgument("both systems need a text backend");
    }
    options.generation.validate();
    const Scorer scorer = options.scorer ? options.scorer : default_scorer();

    std::vector<std::optional<ItemResult>> slots(corpus.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < corpus.size(); i = next++) {
            const auto& item = corpus[i];
            try {
                ItemResult result;
                result.index = i;
                result.reference = item.reference;
                result.hypothesis_a =
                    a.backend->generate_text(comparison_prompt(item, a.prompted), options.generation);
                result.hypothesis_b =
                    b.backend->generate_text(comparison_prompt(item, b.prompted), options.generation);
                result.scores_a = scorer(item.reference, result.hypothesis_a);
                result.scores_b = scorer(item.reference, result.hypothesis_b);
                slots[i] = std::move(result);
            } catch (const Error& e) {
                spdlog::warn("evaluation item {} skipped: {}", i, e.what());
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, corpus.size());
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    std::vector<ItemResult> results;
    for (auto& slot : slots) {
        if (slot) results.push_back(std::move(*slot));
    }
    const std::size_t skipped = corpus.size() - results.size();
    if (skipped * 2 > corpus.size()) {
        throw Error(ErrorCode::aborted_run, "evaluation aborted: " + std::to_string(skipped) +
                                                " of " + std::to_string(corpus.size()) +
                                                " items failed");
    }

    std::map<std::string, std::vector<double>> scores_a;
    std::map<std::string, std::vector<double>> scores_b;
    std::vector<std::pair<std::string, std::string>> pairs_a;
    std::vector<std::pair<std::string, std::string>> pairs_b;
    for (const auto& r : results) {
        for (const auto& [metric, value] : r.scores_a) scores_a[metric].push_back(value);
        for (const auto& [metric, value] : r.scores_b) scores_b[metric].push_back(value);
        pairs_a.emplace_back(r.reference, r.hypothesis_a);
        pairs_b.emplace_back(r.reference, r.hypothesis_b);
    }
    auto report = summarize_comparison(scores_a, scores_b);
    report.system_a = a.name;
    report.system_b = b.name;
    report.corpus_bleu_a = corpus_bleu(pairs_a);
    report.corpus_bleu_b = corpus_bleu(pairs_b);
    report.items = corpus.size();
    report.skipped = skipped;
    report.results = std::move(results);
    return report;
}

json report_to_json(const ComparisonReport& report) {
    json a = json::object();
    json b = json::object();
    json improvement = json::object();
    for (const auto& [metric, d] : report.report_a) a[metric] = distribution_to_json(d);
    for (const auto& [metric, d] : report.report_b) b[metric] = distribution_to_json(d);
    for (const auto& [metric, value] : report.improvement) improvement[metric] = optional_number(value);
    return json{{"system_a", report.system_a},
                {"system_b", report.system_b},
                {"items", report.items},
                {"skipped", report.skipped},
                {"report_a", a},
                {"report_b", b},
                {"improvement", improvement},
                {"corpus_bleu", {{"a", optional_number(report.corpus_bleu_a)},
                                 {"b", optional_number(report.corpus_bleu_b)}}}};
}

void write_scores_csv(const ComparisonReport& report, std::ostream& out) {
    std::vector<std::string> metrics;
    for (const auto& [metric, d] : report.report_a) metrics.push_back(metric);
    out << "index,reference,hypothesis_a,hypothesis_b";
    for (const auto& m : metrics) out << ',' << m << "_a," << m << "_b";
    out << '\n';
    for (const auto& r : report.results) {
        out << r.index << ',' << csv_field(r.reference) << ',' << csv_field(r.hypothesis_a) << ','
            << csv_field(r.hypothesis_b);
        for (const auto& m : metrics) {
            out << ',' << fmt::format("{:.6f}", r.scores_a.at(m)) << ','
                << fmt::format("{:.6f}", r.scores_b.at(m));
        }
        out << '\n';
    }
}

}  // namespace fabula
