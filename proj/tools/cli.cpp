#include "cli.hpp"

#include "fabula/evaluation.hpp"
#include "fabula/keywords.hpp"
#include "fabula/service.hpp"
#include "fabula/session_store.hpp"
#include "fabula/text.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace fabula {
namespace {

using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_user = 1;
constexpr int exit_backend = 2;

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::backend_unavailable:
    case ErrorCode::backend_error:
    case ErrorCode::empty_generation:
    case ErrorCode::partial_result:
    case ErrorCode::aborted_run:
        return exit_backend;
    default:
        return exit_user;
    }
}

struct ConfigFlags {
    std::string config_file;
    std::string sessions_dir;
    bool mock = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> port;
    std::string host;
};

void add_config_flags(CLI::App* app, ConfigFlags& flags, bool server) {
    app->add_option("--config", flags.config_file, "key = value configuration file");
    app->add_option("--sessions-dir", flags.sessions_dir, "Directory holding session files");
    app->add_flag("--mock", flags.mock, "Use deterministic mock backends");
    app->add_option("--seed", flags.seed, "Default seed for new sessions");
    if (server) {
        app->add_option("--port", flags.port, "Port to listen on");
        app->add_option("--host", flags.host, "Address to bind");
    }
}

ServiceConfig resolve_config(const ConfigFlags& flags) {
    ServiceConfig config;
    config.sessions_dir = "sessions";
    if (!flags.config_file.empty()) apply_config_file(config, flags.config_file);
    apply_environment(config);
    if (!flags.sessions_dir.empty()) config.sessions_dir = flags.sessions_dir;
    if (flags.mock) config.mock = true;
    if (flags.seed) config.seed = *flags.seed;
    if (flags.port) config.port = *flags.port;
    if (!flags.host.empty()) config.host = flags.host;
    config.validate();
    return config;
}

std::unique_ptr<SessionStore> open_store(const ServiceConfig& config) {
    auto engine = std::make_shared<const SessionEngine>(backend_factory(config));
    return std::make_unique<SessionStore>(std::move(engine), config.sessions_dir);
}

void print_turn(const StorySession& session, std::ostream& out) {
    out << "phase: " << to_string(session.phase) << '\n';
    if (session.phase != Phase::suggestions_ready) return;
    const auto& turn = session.current_turn();
    out << "emotions: " << join(turn.user_emotions.names(), ", ") << '\n';
    out << "keywords: " << keywords_to_prompt_fragment(turn.user_keywords) << '\n';
}

void print_session(const StorySession& session, std::ostream& out) {
    out << "id: " << session.id << '\n';
    for (std::size_t i = 0; i < session.story.size(); ++i) {
        out << i + 1 << ". " << session.story[i] << '\n';
    }
    if (session.phase == Phase::images_ready) {
        const auto& batch = session.current_turn().image_batch;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            out << "image " << i << ": " << batch[i].id << '\n';
        }
    }
    for (const auto& turn : session.turns) {
        if (turn.detection_summary.rows.empty()) continue;
        out << "detected after sentence " << turn.index + 1 << ":\n";
        for (const auto& row : turn.detection_summary.rows) {
            out << fmt::format("  {:<12} {:>3} {:.3f}\n", row.item, row.count, row.confidence);
        }
    }
    print_turn(session, out);
}

void print_report(const json& report, std::ostream& out) {
    out << fmt::format("{} vs {} ({} items, {} skipped)\n", report.at("system_a").get<std::string>(),
                       report.at("system_b").get<std::string>(), report.at("items").get<std::size_t>(),
                       report.at("skipped").get<std::size_t>());
    out << fmt::format("{:<10} {:>9} {:>9} {:>7} {:>7} {:>12}\n", "metric", "mean_a", "mean_b",
                       "zero_a", "zero_b", "improvement");
    for (const auto& [metric, a] : report.at("report_a").items()) {
        const auto& b = report.at("report_b").at(metric);
        const auto& imp = report.at("improvement").at(metric);
        out << fmt::format("{:<10} {:>9.4f} {:>9.4f} {:>7} {:>7} {:>12}\n", metric,
                           a.at("mean").get<double>(), b.at("mean").get<double>(),
                           a.at("zero_count").get<std::size_t>(),
                           b.at("zero_count").get<std::size_t>(),
                           imp.is_null() ? std::string("n/a")
                                         : fmt::format("{:+.1f}%", imp.get<double>() * 100.0));
    }
    const auto& cb = report.at("corpus_bleu");
    if (!cb.at("a").is_null() && !cb.at("b").is_null()) {
        out << fmt::format("corpus_bleu {:.4f} vs {:.4f}\n", cb.at("a").get<double>(),
                           cb.at("b").get<double>());
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Visual story co-creation engine", "fabula"};
    app.require_subcommand(1);

    ConfigFlags serve_flags;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    add_config_flags(serve, serve_flags, true);

    ConfigFlags story_flags;
    std::string id;
    std::string first;
    std::string artist;
    std::string background;
    std::vector<std::string> emotions;
    std::vector<std::string> keywords;
    bool clear_emotions = false;
    bool clear_keywords = false;
    std::size_t index = 0;
    bool as_json = false;

    auto* story = app.add_subcommand("story", "Scripted co-creation on a sessions directory");
    story->require_subcommand(1);
    auto* story_new = story->add_subcommand("new", "Start a session from a first sentence");
    story_new->add_option("--first", first, "First sentence")->required();
    story_new->add_option("--artist", artist, "Default artist style");
    story_new->add_option("--background", background, "Default background style");
    auto* suggest = story->add_subcommand("suggest", "Show the current suggestions");
    auto* override_cmd = story->add_subcommand("override", "Replace the current suggestions");
    override_cmd->add_option("--emotions", emotions, "Emotion labels")->delimiter(',');
    override_cmd->add_option("--keywords", keywords, "Keyword phrases")->delimiter(',');
    override_cmd->add_flag("--no-emotions", clear_emotions, "Use an empty emotion set");
    override_cmd->add_flag("--no-keywords", clear_keywords, "Use an empty keyword set");
    auto* next = story->add_subcommand("next", "Generate the next sentence");
    auto* images = story->add_subcommand("images", "Generate images for the latest sentence");
    images->add_option("--artist", artist, "Artist style");
    images->add_option("--background", background, "Background style");
    auto* select = story->add_subcommand("select", "Select an image and detect objects");
    select->add_option("--index", index, "Image index")->required();
    auto* show = story->add_subcommand("show", "Print a session");
    show->add_flag("--json", as_json, "Print the session JSON");
    for (auto* sub : {story_new, suggest, override_cmd, next, images, select, show}) {
        add_config_flags(sub, story_flags, false);
        if (sub != story_new) sub->add_option("--id", id, "Session id")->required();
    }

    std::string corpus_path;
    std::string system_a = "mock:prompted";
    std::string system_b = "mock:baseline";
    std::uint64_t eval_seed = 42;
    std::string out_path;
    std::string csv_path;
    std::string report_path;
    auto* eval = app.add_subcommand("eval", "Evaluation metrics");
    eval->require_subcommand(1);
    auto* eval_run = eval->add_subcommand("run", "Compare two text systems on a corpus");
    eval_run->add_option("--corpus", corpus_path, "JSONL corpus")->required();
    eval_run->add_option("--a", system_a, "System A");
    eval_run->add_option("--b", system_b, "System B");
    eval_run->add_option("--seed", eval_seed, "Seed for mock systems");
    eval_run->add_option("--out", out_path, "Write the report JSON here instead of stdout");
    eval_run->add_option("--csv", csv_path, "Write per-item scores as CSV");
    auto* eval_report = eval->add_subcommand("report", "Summarize a report JSON");
    eval_report->add_option("--in", report_path, "Report JSON")->required();

    app.add_subcommand("extract", "Print the keywords of each stdin line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_user;
    }

    try {
        if (app.got_subcommand("extract")) {
            std::string line;
            while (std::getline(in, line)) {
                out << keywords_to_prompt_fragment(extract_keywords(line)) << '\n';
            }
            return exit_ok;
        }

        if (serve->parsed()) {
            Service service(resolve_config(serve_flags));
            service.run();
            return exit_ok;
        }

        if (story->parsed()) {
            const auto config = resolve_config(story_flags);
            auto store = open_store(config);
            const auto& engine = store->engine();
            if (story_new->parsed()) {
                const auto session = store->create(
                    first, config.seed,
                    StylePrefs{artist.empty() ? std::nullopt : std::optional(artist),
                               background.empty() ? std::nullopt : std::optional(background)});
                out << session.id << '\n';
                print_turn(session, out);
            } else if (suggest->parsed()) {
                print_turn(store->get(id), out);
            } else if (override_cmd->parsed()) {
                std::optional<EmotionLabelSet> e;
                std::optional<KeywordSet> k;
                if (clear_emotions) e = EmotionLabelSet{};
                if (!emotions.empty()) e = EmotionLabelSet::from_names(emotions);
                if (clear_keywords) k = KeywordSet{};
                if (!keywords.empty()) {
                    k = KeywordSet{};
                    for (const auto& phrase : keywords) k->insert(phrase);
                }
                print_turn(store->mutate(id, [&](const StorySession& s) {
                    return engine.override_suggestions(s, e, k);
                }),
                           out);
            } else if (next->parsed()) {
                const auto session = store->mutate(
                    id, [&](const StorySession& s) { return engine.generate_next_sentence(s); });
                out << session.story.back() << '\n';
                print_turn(session, out);
            } else if (images->parsed()) {
                std::optional<StylePrefs> prefs;
                if (!artist.empty() || !background.empty()) {
                    prefs = StylePrefs{artist.empty() ? std::nullopt : std::optional(artist),
                                       background.empty() ? std::nullopt : std::optional(background)};
                }
                const auto session = store->mutate(
                    id, [&](const StorySession& s) { return engine.generate_turn_images(s, prefs); });
                print_session(session, out);
            } else if (select->parsed()) {
                print_session(store->mutate(id, [&](const StorySession& s) {
                    return engine.select_image(s, index);
                }),
                              out);
            } else if (show->parsed()) {
                const auto session = store->get(id);
                if (as_json) {
                    out << session_to_json(session).dump(2) << '\n';
                } else {
                    print_session(session, out);
                }
            }
            return exit_ok;
        }

        if (eval_run->parsed()) {
            const auto corpus = load_corpus(corpus_path);
            const auto report = run_comparison(corpus, make_system(system_a, eval_seed),
                                               make_system(system_b, eval_seed));
            const auto text = report_to_json(report).dump(2) + "\n";
            if (out_path.empty()) {
                out << text;
            } else {
                std::ofstream file(out_path);
                if (!file) throw InvalidArgument("cannot write " + out_path);
                file << text;
            }
            if (!csv_path.empty()) {
                std::ofstream file(csv_path);
                if (!file) throw InvalidArgument("cannot write " + csv_path);
                write_scores_csv(report, file);
            }
            return exit_ok;
        }

        if (eval_report->parsed()) {
            std::ifstream file(report_path);
            if (!file) throw NotFound("cannot open " + report_path);
            json report;
            try {
                report = json::parse(file);
                print_report(report, out);
            } catch (const json::exception& e) {
                throw ParseError(std::string("malformed report: ") + e.what(), 0);
            }
            return exit_ok;
        }
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_user;
    }
    return exit_user;
}

}  // namespace fabula
