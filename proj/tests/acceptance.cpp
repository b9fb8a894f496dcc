// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "fabula/evaluation.hpp"
#include "fabula/image_flow.hpp"
#include "fabula/json.hpp"
#include "fabula/keywords.hpp"
#include "fabula/metrics.hpp"
#include "fabula/mock_backends.hpp"
#include "fabula/prompt.hpp"
#include "fabula/service.hpp"
#include "fabula/session.hpp"
#include "fabula/text.hpp"
#include "http_server.hpp"
#include "oracles.hpp"
#include "session_fixtures.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fabula {
namespace {

using nlohmann::json;

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

void require_near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
        std::ostringstream s;
        s.precision(17);
        s << what << ": got " << got << ", want " << want << " (tol " << tol << ")";
        throw Failure(s.str());
    }
}

// Prompt fidelity ---------------------------------------------------------

PromptSpec random_spec(std::mt19937& rng) {
    static const std::vector<std::string> phrases = {
        "Mary", "a psychiatrist", "the movie", "the whole thing", "I", "her dog",
        "a red bike", "Saturday", "the old man", "coffee", "New York", "the coaster",
    };
    static const std::vector<std::string> sentences = {
        "Mary had been feeling depressed lately.", "She decided to go see a psychiatrist.",
        "Was it raining?", "What a day it was!", "He went home.", "The dog barked at 3 a.m.",
        "They laughed, cried, and left.",
    };
    PromptSpec spec;
    for (std::size_t i = 0, k = rng() % 5; i < k; ++i) {
        spec.keywords.insert(phrases[rng() % phrases.size()]);
    }
    for (std::size_t i = 0, n = rng() % 5; i < n; ++i) {
        spec.context.push_back(sentences[rng() % sentences.size()]);
    }
    for (const auto label : all_emotions) {
        if (rng() % 3 == 0) spec.emotions.insert(label);
    }
    return spec;
}

void prompt_fidelity() {
    PromptSpec movie;
    movie.keywords = {"I", "the movie", "the whole thing"};
    movie.context = {"I brought the movie home and watched the whole thing."};
    movie.emotions = {EmotionLabel::anticipation, EmotionLabel::joy};
    PromptSpec mary;
    mary.keywords = {"She", "a psychiatrist"};
    mary.context = {"Mary had been feeling depressed lately.",
                    "She decided to go see a psychiatrist."};
    mary.emotions = {EmotionLabel::sadness, EmotionLabel::trust};
    PromptSpec empty;
    empty.context = {"He was hoping this year to be tall enough for the coaster."};
    const std::vector<std::pair<std::string, PromptSpec>> golden = {
        {"prompts/movie.txt", movie}, {"prompts/mary.txt", mary}, {"prompts/empty_sections.txt", empty}};
    for (const auto& [file, spec] : golden) {
        require(build_prompt(spec) == testing::read_fixture(file), file + " differs");
    }
    std::mt19937 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const auto spec = random_spec(rng);
        require(parse_prompt(build_prompt(spec)) == spec, "round trip failed:\n" + build_prompt(spec));
    }
}

// Keyword extraction -------------------------------------------------------

void keyword_extraction() {
    const auto golden = keywords_to_prompt_fragment(
        extract_keywords("I brought the movie home and watched the whole thing."));
    require(golden == "I, the movie, the whole thing", "golden example gave '" + golden + "'");

    std::size_t expected = 0;
    std::size_t recalled = 0;
    std::size_t sentences = 0;
    for (const auto& line : split(testing::read_fixture("keywords.tsv"), '\n')) {
        if (trim(line).empty() || line.front() == '#') continue;
        ++sentences;
        const auto fields = split(line, '\t');
        const auto k = extract_keywords(fields.at(0));
        for (const auto& phrase : k.phrases()) {
            require(fields.at(0).find(phrase) != std::string::npos, "not verbatim: " + phrase);
        }
        for (const auto& e : split(fields.at(1), '|')) {
            ++expected;
            if (k.contains(trim(e))) ++recalled;
        }
    }
    require(sentences == 20, "fixture must hold 20 sentences");
    const double recall = static_cast<double>(recalled) / static_cast<double>(expected);
    require(recall >= 0.9, "entity recall " + std::to_string(recall));
}

// Metric oracles -----------------------------------------------------------

std::string random_sentence(std::mt19937& rng, std::size_t min_len, std::size_t max_len) {
    static const std::vector<std::string> vocabulary = {
        "the", "a", "cat", "cats", "sat", "sits", "on", "mat", "run", "runs", "running",
        "dog", "Dog", "happy", "happily", ".", ",", "she", "went", "home",
    };
    const auto len = min_len + rng() % (max_len - min_len + 1);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        if (i > 0) out += ' ';
        out += vocabulary[rng() % vocabulary.size()];
    }
    return out;
}

void metric_oracles() {
    std::mt19937 rng(20240101);
    for (int trial = 0; trial < 50; ++trial) {
        const auto ref = random_sentence(rng, 1, 9);
        const auto hyp = random_sentence(rng, 1, 9);
        for (int n = 1; n <= 4; ++n) {
            require_near(bleu_n(ref, hyp, n), oracle::bleu_n(ref, hyp, static_cast<std::size_t>(n)),
                         1e-9, "bleu_" + std::to_string(n) + " '" + ref + "' / '" + hyp + "'");
        }
        require_near(bleu_avg(ref, hyp), oracle::bleu_avg(ref, hyp), 1e-9, "bleu_avg");
        require_near(meteor(ref, hyp), oracle::meteor(ref, hyp), 1e-9,
                     "meteor '" + ref + "' / '" + hyp + "'");
    }
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<std::string, std::string>> pairs;
        for (std::size_t i = 0, n = 1 + rng() % 5; i < n; ++i) {
            const auto ref = random_sentence(rng, 4, 10);
            pairs.emplace_back(ref, ref.substr(0, ref.size() / 2 + 1) + " " + random_sentence(rng, 1, 4));
        }
        require_near(corpus_bleu(pairs), oracle::corpus_bleu(pairs), 1e-9, "corpus_bleu");
    }
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Embedding> ref(1 + rng() % 5, Embedding(4));
        std::vector<Embedding> hyp(1 + rng() % 5, Embedding(4));
        for (auto& v : ref) for (auto& x : v) x = u(rng);
        for (auto& v : hyp) for (auto& x : v) x = u(rng);
        require_near(embed_greedy_f1(ref, hyp), oracle::embed_f1(ref, hyp), 1e-9, "embed_greedy_f1");
    }
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<LabeledScore>> classes(8);
        double oracle_sum = 0.0;
        for (auto& items : classes) {
            std::vector<std::pair<bool, double>> plain;
            for (int i = 0; i < 40; ++i) {
                const LabeledScore s{rng() % 3 == 0, static_cast<double>(rng() % 10) / 10.0};
                items.push_back(s);
                plain.emplace_back(s.truth, s.score);
            }
            items.push_back({true, 0.55});
            items.push_back({false, 0.45});
            plain.emplace_back(true, 0.55);
            plain.emplace_back(false, 0.45);
            oracle_sum += oracle::auc(plain);
        }
        require_near(roc_auc_macro(classes), oracle_sum / 8.0, 1e-12, "roc_auc_macro");
    }

    const std::string x = "the cat sat on the mat .";
    for (int n = 1; n <= 4; ++n) require(bleu_n(x, x, n) == 1.0, "bleu_n identity");
    require(bleu_avg(x, x) == 1.0, "bleu_avg identity");
    require(corpus_bleu({{x, x}, {"a dog ran home .", "a dog ran home ."}}) == 1.0,
            "corpus_bleu identity");
    require_near(embed_greedy_f1({{1.0, 2.0}, {0.5, -1.0}}, {{1.0, 2.0}, {0.5, -1.0}}), 1.0, 1e-12,
                 "embed identity");
    require(meteor("the cat sat", "dogs ran home") == 0.0, "meteor disjoint");
    require(roc_auc_macro({{{true, 0.3}, {false, 0.3}, {true, 0.3}}, {{false, 0.7}, {true, 0.7}}}) ==
                0.5,
            "all-ties AUC");
}

// Detection aggregation ----------------------------------------------------

void detection_aggregation() {
    const auto batches = json::parse(testing::read_fixture("detections.json"))
                             .at("batches")
                             .get<std::vector<std::vector<Detection>>>();
    const auto summary = summarize_detections(batches);
    const std::vector<DetectionRow> expected = {
        {"horse", 5, 0.729}, {"bird", 2, 0.719}, {"person", 42, 0.694}, {"handbag", 2, 0.656}};
    require(summary.rows == expected, "rows differ from the table");
    std::vector<Detection> flat;
    for (const auto& b : batches) flat.insert(flat.end(), b.begin(), b.end());
    std::mt19937 rng(99);
    for (int i = 0; i < 100; ++i) {
        std::shuffle(flat.begin(), flat.end(), rng);
        std::vector<std::vector<Detection>> regrouped(1 + rng() % 4);
        for (const auto& d : flat) regrouped[rng() % regrouped.size()].push_back(d);
        require(summarize_detections(regrouped) == summary, "shuffle " + std::to_string(i));
    }
}

// Session determinism ------------------------------------------------------

json without_timestamps(json j) {
    j.erase("created_at");
    j.erase("updated_at");
    return j;
}

void session_determinism() {
    const SessionEngine engine(mock_backend_factory(), {}, std::chrono::system_clock::now);
    const auto session = replay(engine, testing::mary_actions());
    require(session.story.size() == 5, "story has " + std::to_string(session.story.size()) + " sentences");
    require(session.story == testing::mary_prompted_sentences(), "story differs from prompted column");
    const auto golden = json::parse(testing::read_fixture("mary_session.json"));
    require(without_timestamps(session_to_json(session)).dump(2) == without_timestamps(golden).dump(2),
            "session differs from the golden file");

    // Under a fixed clock the saved file matches the golden byte for byte.
    const SessionEngine fixed(mock_backend_factory(), {}, testing::stepping_clock());
    testing::TempDir dir;
    save_session(replay(fixed, testing::mary_actions()), dir.path() / "session.json");
    std::ifstream in(dir.path() / "session.json");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(bytes == testing::read_fixture("mary_session.json"), "saved file is not byte-identical");

    std::mt19937 rng(12345);
    const SessionEngine illustrated(mock_backend_factory());
    SessionOptions plain_options;
    plain_options.illustrate = false;
    const SessionEngine plain(mock_backend_factory(), plain_options);
    const std::vector<std::string> openers = {
        "Mary had been feeling depressed lately.", "A little boy was picking up shells on a beach.",
        "Tom bought a new red bike for his son.", "The storm knocked down the power lines.",
    };
    for (int sequence = 0; sequence < 10000; ++sequence) {
        const bool illustrate = sequence % 5 != 0;
        const auto& e = illustrate ? illustrated : plain;
        auto s = e.start_session(openers[rng() % openers.size()], rng() % 4);
        require(is_legal_transition(Phase::awaiting_first_sentence, s.phase, illustrate), "start");
        for (int step = 0; step < 24 && s.phase != Phase::completed; ++step) {
            SessionAction action;
            action.kind = static_cast<SessionAction::Kind>(1 + rng() % 4);
            action.index = rng() % 4;
            if (rng() % 3 == 0) action.emotions = EmotionLabelSet{EmotionLabel::fear};
            if (rng() % 3 == 0) action.keywords = KeywordSet{"a lantern"};
            try {
                auto next = apply_action(e, s, action);
                const bool legal = action.kind == SessionAction::Kind::override_suggestions
                                       ? next.phase == s.phase
                                       : is_legal_transition(s.phase, next.phase, illustrate);
                require(legal, std::string("illegal transition ") + std::string(to_string(s.phase)) +
                                   " -> " + std::string(to_string(next.phase)));
                s = std::move(next);
            } catch (const InvalidState&) {
            } catch (const InvalidArgument&) {
                require(action.kind == SessionAction::Kind::select, "unexpected InvalidArgument");
            }
        }
    }
}

// Default parameter audit --------------------------------------------------

void default_parameters() {
    const GenerationConfig g;
    const SessionOptions o;
    const ImageRequest r;
    require(g.top_k == 3, "top_k");
    require(g.repetition_penalty == 2.6, "repetition_penalty");
    require(g.length_penalty == 1.0, "length_penalty");
    require(g.max_source_length == 512 && g.max_output_length == 50, "source/output caps");
    require(o.generation == g, "session generation config");
    require(o.clip_guidance_scale == 5000.0 && r.clip_guidance_scale == 5000.0, "clip_guidance_scale");
    require(o.steps == 250 && r.steps == 250, "steps");
    require(o.n_batches == 3 && r.n_batches == 3, "n_batches");
    require(o.detection_threshold == 0.4, "detection threshold");
}

// Improvement arithmetic ---------------------------------------------------

class PrefixBackend final : public TextBackend {
public:
    explicit PrefixBackend(std::string prefix) : prefix_(std::move(prefix)) {}
    std::string generate_text(const std::string& prompt, const GenerationConfig&) override {
        return prefix_ + parse_prompt(prompt).context.front();
    }

private:
    std::string prefix_;
};

void improvement_arithmetic() {
    // Means 0.162 and 0.100; two and four zeros.
    const std::vector<double> a = {0.0, 0.0, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.22};
    const std::vector<double> b = {0.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.2, 0.2, 0.2, 0.2};
    std::vector<CorpusItem> corpus;
    std::map<std::string, double> lookup;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto sentence = "item " + std::to_string(i) + ".";
        corpus.push_back({{sentence}, "reference"});
        lookup["a:" + sentence] = a[i];
        lookup["b:" + sentence] = b[i];
    }
    ComparisonOptions options;
    options.scorer = [&](const std::string&, const std::string& hyp) {
        return Scores{{"bleu_avg", lookup.at(hyp)}};
    };
    const auto report = run_comparison(corpus, {"a", std::make_shared<PrefixBackend>("a:"), true},
                                       {"b", std::make_shared<PrefixBackend>("b:"), false}, options);
    const auto& improvement = report.improvement.at("bleu_avg");
    require(improvement.has_value(), "improvement undefined");
    require_near(*improvement, 0.62, 1e-9, "improvement");
    require(report.report_a.at("bleu_avg").zero_count == 2, "zero count a");
    require(report.report_b.at("bleu_avg").zero_count == 4, "zero count b");
}

// API equivalence ----------------------------------------------------------

json strip_view(json view) {
    view.erase("status");
    for (auto& turn : view["turns"]) {
        for (auto& image : turn["image_batch"]) image.erase("url");
    }
    return view;
}

void api_equivalence() {
    const SessionEngine engine(mock_backend_factory(), {}, testing::stepping_clock());
    const auto expected = session_to_json(replay(engine, testing::mary_actions()));

    ServiceConfig config;
    config.mock = true;
    Service service(config, mock_backend_factory(), testing::stepping_clock());
    testing::ServerThread server([&](httplib::Server& s) { service.mount(s); });
    httplib::Client client("127.0.0.1", server.port());

    std::string id;
    json view;
    for (const auto& action : testing::mary_actions()) {
        auto body = action_to_json(action);
        const auto op = body["op"].get<std::string>();
        body.erase("op");
        const auto path = op == "start" ? std::string("/sessions") : "/sessions/" + id + "/" + op;
        const auto res = client.Post(path, body.dump(), "application/json");
        require(res && res->status / 100 == 2, "POST " + path + " failed");
        view = json::parse(res->body);
        if (op == "start") id = view["id"].get<std::string>();
    }
    require(strip_view(view) == expected, "final HTTP session differs from library session");
    const auto res = client.Get("/sessions/" + id);
    require(res && strip_view(json::parse(res->body)) == expected, "GET session differs");
}

struct Criterion {
    std::string name;
    double budget_seconds;
    std::function<void()> check;
};

}  // namespace
}  // namespace fabula

int main() {
    using namespace fabula;
    spdlog::set_level(spdlog::level::err);
    const std::vector<Criterion> criteria = {
        {"prompt fidelity", 1.0, prompt_fidelity},
        {"keyword extraction", 1.0, keyword_extraction},
        {"metric oracles", 10.0, metric_oracles},
        {"detection aggregation", 1.0, detection_aggregation},
        {"session determinism", 30.0, session_determinism},
        {"default parameter audit", 1.0, default_parameters},
        {"improvement arithmetic", 10.0, improvement_arithmetic},
        {"API equivalence", 10.0, api_equivalence},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        try {
            c.check();
        } catch (const std::exception& e) {
            detail = e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (detail.empty() && seconds >= c.budget_seconds) {
            detail = "over budget";
        }
        const bool pass = detail.empty();
        if (!pass) ++failures;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << c.name << "  (" << std::fixed
                  << std::setprecision(3) << seconds << "s, budget " << std::setprecision(0)
                  << c.budget_seconds << "s)" << (pass ? "" : ": " + detail) << '\n';
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << '\n';
    return failures == 0 ? 0 : 1;
}
