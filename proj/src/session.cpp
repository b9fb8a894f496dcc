#include "fabula/session.hpp"

#include "fabula/error.hpp"
#include "fabula/json.hpp"
#include "fabula/mock_backends.hpp"
#include "fabula/text.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <array>
#include <ctime>
#include <fstream>
#include <future>
#include <sstream>

namespace fabula {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 5> phase_names = {
    "AwaitingFirstSentence", "SuggestionsReady", "SentenceGenerated", "ImagesReady", "Completed",
};

void require_phase(const StorySession& session, Phase expected, std::string_view operation) {
    if (session.phase != expected) {
        throw InvalidState(std::string(operation) + " requires phase " +
                           std::string(to_string(expected)) + ", session is in " +
                           std::string(to_string(session.phase)));
    }
}

Turn& mutable_current_turn(StorySession& session) {
    if (session.turns.empty()) {
        throw InvalidState("session has no active turn");
    }
    return session.turns.back();
}

json optional_string(const std::optional<std::string>& value) {
    return value ? json(*value) : json(nullptr);
}

std::optional<std::string> read_optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

json style_to_json(const StylePrefs& style) {
    return json{{"artist", optional_string(style.artist)},
                {"background", optional_string(style.background)}};
}

StylePrefs style_from_json(const json& j) {
    return StylePrefs{read_optional_string(j, "artist"), read_optional_string(j, "background")}
        .normalized();
}

json summary_to_json(const DetectionSummary& summary) {
    json rows = json::array();
    for (const auto& row : summary.rows) {
        rows.push_back({{"item", row.item}, {"count", row.count}, {"confidence", row.confidence}});
    }
    return rows;
}

DetectionSummary summary_from_json(const json& j) {
    DetectionSummary summary;
    for (const auto& row : j) {
        summary.rows.push_back({row.at("item").get<std::string>(),
                                row.at("count").get<std::size_t>(),
                                row.at("confidence").get<double>()});
    }
    return summary;
}

json options_to_json(const SessionOptions& o) {
    return json{{"max_sentences", o.max_sentences},
                {"illustrate", o.illustrate},
                {"detect_all_images", o.detect_all_images},
                {"emotion_threshold", o.emotion_threshold},
                {"fallback_top_k", o.fallback_top_k},
                {"suggestion_limit", o.suggestion_limit},
                {"detection_threshold", o.detection_threshold},
                {"generation", o.generation},
                {"clip_guidance_scale", o.clip_guidance_scale},
                {"steps", o.steps},
                {"n_batches", o.n_batches}};
}

SessionOptions options_from_json(const json& j) {
    SessionOptions o;
    o.max_sentences = j.value("max_sentences", o.max_sentences);
    o.illustrate = j.value("illustrate", o.illustrate);
    o.detect_all_images = j.value("detect_all_images", o.detect_all_images);
    o.emotion_threshold = j.value("emotion_threshold", o.emotion_threshold);
    o.fallback_top_k = j.value("fallback_top_k", o.fallback_top_k);
    o.suggestion_limit = j.value("suggestion_limit", o.suggestion_limit);
    o.detection_threshold = j.value("detection_threshold", o.detection_threshold);
    if (j.contains("generation")) o.generation = j.at("generation").get<GenerationConfig>();
    o.clip_guidance_scale = j.value("clip_guidance_scale", o.clip_guidance_scale);
    o.steps = j.value("steps", o.steps);
    o.n_batches = j.value("n_batches", o.n_batches);
    o.validate();
    return o;
}

json turn_to_json(const Turn& turn) {
    json images = json::array();
    for (const auto& image : turn.image_batch) {
        images.push_back({{"hash", image.id}, {"prompt", image.prompt}});
    }
    return json{{"index", turn.index},
                {"suggested_emotions", turn.suggested_emotions},
                {"suggested_keywords", turn.suggested_keywords},
                {"user_emotions", turn.user_emotions},
                {"user_keywords", turn.user_keywords},
                {"prompt", turn.prompt},
                {"generated_sentence", turn.generated_sentence},
                {"image_batch", images},
                {"selected_image", turn.selected_image ? json(*turn.selected_image) : json(nullptr)},
                {"detection_summary", summary_to_json(turn.detection_summary)},
                {"style", style_to_json(turn.style)}};
}

Turn turn_from_json(const json& j,
                    const std::function<std::vector<std::uint8_t>(const std::string&)>& loader) {
    Turn turn;
    turn.index = j.at("index").get<int>();
    turn.suggested_emotions = j.at("suggested_emotions").get<EmotionLabelSet>();
    turn.suggested_keywords = j.at("suggested_keywords").get<KeywordSet>();
    turn.user_emotions = j.at("user_emotions").get<EmotionLabelSet>();
    turn.user_keywords = j.at("user_keywords").get<KeywordSet>();
    turn.prompt = j.at("prompt").get<std::string>();
    turn.generated_sentence = j.at("generated_sentence").get<std::string>();
    for (const auto& image : j.at("image_batch")) {
        const auto hash = image.at("hash").get<std::string>();
        auto ref = ImageRef::from_png(loader(hash), image.at("prompt").get<std::string>());
        if (ref.id != hash) {
            throw ParseError("image " + hash + " does not match its content hash", 0);
        }
        turn.image_batch.push_back(std::move(ref));
    }
    if (!j.at("selected_image").is_null()) {
        turn.selected_image = j.at("selected_image").get<std::size_t>();
        if (*turn.selected_image >= turn.image_batch.size()) {
            throw ParseError("selected_image out of range", 0);
        }
    }
    turn.detection_summary = summary_from_json(j.at("detection_summary"));
    turn.style = style_from_json(j.at("style"));
    return turn;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFound("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    // Write then rename, so readers never observe a half-written file.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InvalidArgument("cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw InvalidArgument("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
    return phase_names[static_cast<std::size_t>(phase)];
}

std::optional<Phase> parse_phase(std::string_view name) noexcept {
    for (std::size_t i = 0; i < phase_names.size(); ++i) {
        if (phase_names[i] == name) return static_cast<Phase>(i);
    }
    return std::nullopt;
}

bool is_legal_transition(Phase from, Phase to, bool illustrate) noexcept {
    switch (from) {
    case Phase::awaiting_first_sentence:
        return to == Phase::suggestions_ready || to == Phase::completed;
    case Phase::suggestions_ready:
        if (illustrate) return to == Phase::sentence_generated;
        return to == Phase::suggestions_ready || to == Phase::completed;
    case Phase::sentence_generated:
        return illustrate && to == Phase::images_ready;
    case Phase::images_ready:
        return illustrate && (to == Phase::suggestions_ready || to == Phase::completed);
    case Phase::completed:
        return false;
    }
    return false;
}

void SessionOptions::validate() const {
    if (max_sentences < 1 || max_sentences > PromptSpec::max_context + 1) {
        throw InvalidArgument("max_sentences must be between 1 and 5");
    }
    if (!(emotion_threshold >= 0.0 && emotion_threshold <= 1.0) ||
        !(detection_threshold >= 0.0 && detection_threshold <= 1.0)) {
        throw InvalidArgument("thresholds must lie in [0, 1]");
    }
    if (fallback_top_k > emotion_count) {
        throw InvalidArgument("fallback_top_k must be at most 8");
    }
    generation.validate();
    ImageRequest probe{"probe", clip_guidance_scale, steps, n_batches};
    probe.validate();
}

const Turn& StorySession::current_turn() const {
    if (turns.empty()) {
        throw InvalidState("session has no active turn");
    }
    return turns.back();
}

BackendFactory fixed_backends(Backends backends) {
    return [backends = std::move(backends)](std::uint64_t) { return backends; };
}

BackendFactory mock_backend_factory() {
    return [](std::uint64_t seed) { return make_mock_backends(seed); };
}

std::string format_timestamp(std::chrono::system_clock::time_point time) {
    const auto millis =
        std::chrono::duration_cast<std::chrono::milliseconds>(time.time_since_epoch()).count();
    const std::time_t seconds = static_cast<std::time_t>(millis / 1000);
    std::tm utc{};
    gmtime_r(&seconds, &utc);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", utc.tm_year + 1900,
                       utc.tm_mon + 1, utc.tm_mday, utc.tm_hour, utc.tm_min, utc.tm_sec,
                       millis % 1000);
}

std::string derive_session_id(std::uint64_t seed, std::string_view first_sentence,
                              std::uint64_t salt) {
    const auto hi = mix64(seed ^ fnv1a(first_sentence) ^ mix64(salt));
    const auto lo = mix64(hi ^ 0x5f3759df);
    // Shape it like a version-4 UUID.
    const auto a = static_cast<std::uint32_t>(hi >> 32U);
    const auto b = static_cast<std::uint16_t>(hi >> 16U);
    const auto c = static_cast<std::uint16_t>((hi & 0x0FFFU) | 0x4000U);
    const auto d = static_cast<std::uint16_t>(((lo >> 48U) & 0x3FFFU) | 0x8000U);
    const auto e = lo & 0xFFFFFFFFFFFFULL;
    return fmt::format("{:08x}-{:04x}-{:04x}-{:04x}-{:012x}", a, b, c, d, e);
}

SessionEngine::SessionEngine(BackendFactory backends, SessionOptions options, Clock clock)
    : backends_(std::move(backends)), options_(std::move(options)), clock_(std::move(clock)) {
    options_.validate();
}

std::string SessionEngine::now() const {
    return format_timestamp(clock_());
}

Turn SessionEngine::suggest_turn(const StorySession& session, Backends& backends,
                                 const DetectionSummary* detections) const {
    Turn turn;
    turn.index = static_cast<int>(session.story.size());

    const auto vector = predict_next_emotions(backends.emotion.get(), session.story);
    turn.suggested_emotions = threshold_labels(vector, session.options.emotion_threshold);
    if (turn.suggested_emotions.empty()) {
        turn.suggested_emotions = top_k_labels(vector, session.options.fallback_top_k);
    }

    if (detections != nullptr) {
        turn.suggested_keywords = suggestion_keywords(*detections, session.options.suggestion_limit);
    }
    turn.suggested_keywords.merge(extract_keywords(session.story.back()));

    turn.user_emotions = turn.suggested_emotions;
    turn.user_keywords = turn.suggested_keywords;
    turn.style = session.style;
    return turn;
}

StorySession SessionEngine::start_session(std::string_view first_sentence, std::uint64_t seed,
                                          StylePrefs style, std::optional<std::string> id) const {
    const auto sentence = trim(first_sentence);
    if (sentence.empty()) {
        throw InvalidArgument("first sentence must be non-empty");
    }
    StorySession session;
    session.id = id ? *id : derive_session_id(seed, sentence);
    session.seed = seed;
    session.style = style.normalized();
    session.options = options_;
    session.story.emplace_back(sentence);
    session.created_at = now();
    session.updated_at = session.created_at;

    if (session.story.size() >= session.options.max_sentences) {
        session.phase = Phase::completed;
        return session;
    }
    auto backends = backends_(seed);
    session.turns.push_back(suggest_turn(session, backends, nullptr));
    session.phase = Phase::suggestions_ready;
    return session;
}

StorySession SessionEngine::override_suggestions(const StorySession& session,
                                                 std::optional<EmotionLabelSet> emotions,
                                                 std::optional<KeywordSet> keywords) const {
    require_phase(session, Phase::suggestions_ready, "override_suggestions");
    StorySession next = session;
    auto& turn = mutable_current_turn(next);
    turn.user_emotions = emotions ? *emotions : turn.suggested_emotions;
    turn.user_keywords = keywords ? *keywords : turn.suggested_keywords;
    next.updated_at = now();
    return next;
}

StorySession SessionEngine::generate_next_sentence(const StorySession& session) const {
    require_phase(session, Phase::suggestions_ready, "generate_next_sentence");
    if (session.story.size() >= session.options.max_sentences) {
        throw InvalidState("story already has " + std::to_string(session.story.size()) +
                           " sentences");
    }
    StorySession next = session;
    auto& turn = mutable_current_turn(next);
    const PromptSpec spec{turn.user_keywords, next.story, turn.user_emotions};
    turn.prompt = build_prompt(spec);

    auto backends = backends_(session.seed);
    if (!backends.text) {
        throw BackendUnavailable("no text backend configured");
    }
    auto sentence = std::string(trim(backends.text->generate_text(turn.prompt,
                                                                   session.options.generation)));
    if (sentence.empty()) {
        throw EmptyGeneration("text backend returned an empty sentence");
    }
    turn.generated_sentence = sentence;
    next.story.push_back(std::move(sentence));
    next.updated_at = now();

    if (next.options.illustrate) {
        next.phase = Phase::sentence_generated;
    } else if (next.story.size() >= next.options.max_sentences) {
        next.phase = Phase::completed;
    } else {
        next.turns.push_back(suggest_turn(next, backends, nullptr));
        next.phase = Phase::suggestions_ready;
    }
    return next;
}

StorySession SessionEngine::generate_turn_images(const StorySession& session,
                                                 const std::optional<StylePrefs>& prefs) const {
    require_phase(session, Phase::sentence_generated, "generate_turn_images");
    StorySession next = session;
    auto& turn = mutable_current_turn(next);
    turn.style = (prefs ? *prefs : session.style).normalized();

    ImageRequest request;
    request.prompt = augment_image_prompt(next.story.back(), turn.style);
    request.clip_guidance_scale = next.options.clip_guidance_scale;
    request.steps = next.options.steps;
    request.n_batches = next.options.n_batches;

    auto backends = backends_(session.seed);
    if (!backends.image) {
        throw BackendUnavailable("no image backend configured");
    }
    try {
        turn.image_batch = backends.image->generate_images(request);
    } catch (const PartialResult& partial) {
        if (partial.images().empty()) throw;
        spdlog::warn("session {}: keeping partial image batch ({})", session.id, partial.what());
        turn.image_batch = partial.images();
    }
    next.phase = Phase::images_ready;
    next.updated_at = now();
    return next;
}

StorySession SessionEngine::select_image(const StorySession& session, std::size_t index) const {
    require_phase(session, Phase::images_ready, "select_image");
    const auto& batch = session.current_turn().image_batch;
    if (index >= batch.size()) {
        throw InvalidArgument("image index " + std::to_string(index) + " out of range (batch of " +
                              std::to_string(batch.size()) + ")");
    }
    StorySession next = session;
    auto& turn = mutable_current_turn(next);
    turn.selected_image = index;

    auto backends = backends_(session.seed);
    if (!backends.detection) {
        throw BackendUnavailable("no detection backend configured");
    }
    const double threshold = next.options.detection_threshold;
    std::vector<std::vector<Detection>> detections;
    if (next.options.detect_all_images) {
        std::vector<std::future<std::vector<Detection>>> pending;
        for (const auto& image : turn.image_batch) {
            pending.push_back(std::async(std::launch::async, [&backends, &image, threshold] {
                return backends.detection->detect_objects(image, threshold);
            }));
        }
        for (auto& result : pending) detections.push_back(result.get());
    } else {
        detections.push_back(backends.detection->detect_objects(turn.image_batch[index], threshold));
    }
    turn.detection_summary = summarize_detections(detections);
    next.updated_at = now();

    if (next.story.size() >= next.options.max_sentences) {
        next.phase = Phase::completed;
        return next;
    }
    const auto summary = turn.detection_summary;
    next.turns.push_back(suggest_turn(next, backends, &summary));
    next.phase = Phase::suggestions_ready;
    return next;
}

json session_to_json(const StorySession& session) {
    json turns = json::array();
    for (const auto& turn : session.turns) turns.push_back(turn_to_json(turn));
    return json{{"schema_version", session_schema_version},
                {"id", session.id},
                {"seed", session.seed},
                {"phase", std::string(to_string(session.phase))},
                {"story", session.story},
                {"turns", turns},
                {"style", style_to_json(session.style)},
                {"options", options_to_json(session.options)},
                {"created_at", session.created_at},
                {"updated_at", session.updated_at}};
}

StorySession session_from_json(
    const json& j, const std::function<std::vector<std::uint8_t>(const std::string&)>& loader) {
    if (!j.is_object() || !j.contains("schema_version") ||
        !j.at("schema_version").is_number_integer()) {
        throw ParseError("session file lacks an integer schema_version", 0);
    }
    const int version = j.at("schema_version").get<int>();
    if (version != session_schema_version) {
        throw UnsupportedVersion("unsupported session schema_version " + std::to_string(version),
                                 version);
    }
    try {
        StorySession session;
        session.id = j.at("id").get<std::string>();
        session.seed = j.at("seed").get<std::uint64_t>();
        const auto phase = parse_phase(j.at("phase").get<std::string>());
        if (!phase) {
            throw ParseError("unknown phase " + j.at("phase").dump(), 0);
        }
        session.phase = *phase;
        session.story = j.at("story").get<std::vector<std::string>>();
        for (const auto& turn : j.at("turns")) {
            session.turns.push_back(turn_from_json(turn, loader));
        }
        session.style = style_from_json(j.at("style"));
        session.options = options_from_json(j.at("options"));
        session.created_at = j.at("created_at").get<std::string>();
        session.updated_at = j.at("updated_at").get<std::string>();
        return session;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed session: ") + e.what(), 0);
    }
}

void save_session(const StorySession& session, const std::filesystem::path& path) {
    const auto dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    for (const auto& turn : session.turns) {
        for (const auto& image : turn.image_batch) {
            const auto image_path = dir / (image.id + ".png");
            if (!std::filesystem::exists(image_path)) {
                write_file(image_path, std::string_view(reinterpret_cast<const char*>(image.png.data()),
                                                        image.png.size()));
            }
        }
    }
    write_file(path, session_to_json(session).dump(2) + "\n");
}

StorySession load_session(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError("session file " + path.string() + " is not valid JSON at byte " +
                             std::to_string(e.byte) + ": " + e.what(),
                         0, e.byte);
    }
    const auto dir = path.parent_path();
    return session_from_json(j, [&](const std::string& hash) {
        if (hash.size() != 64 || hash.find_first_not_of("0123456789abcdef") != std::string::npos) {
            throw ParseError("invalid image hash " + hash, 0);
        }
        return read_file(dir / (hash + ".png"));
    });
}

namespace {

constexpr std::array<std::string_view, 5> action_names = {
    "start", "override", "generate", "images", "select",
};

}  // namespace

json action_to_json(const SessionAction& action) {
    json j{{"op", std::string(action_names[static_cast<std::size_t>(action.kind)])}};
    switch (action.kind) {
    case SessionAction::Kind::start:
        j["first_sentence"] = action.first_sentence;
        j["seed"] = action.seed;
        if (action.style) j["style"] = style_to_json(*action.style);
        break;
    case SessionAction::Kind::override_suggestions:
        if (action.emotions) j["emotions"] = *action.emotions;
        if (action.keywords) j["keywords"] = *action.keywords;
        break;
    case SessionAction::Kind::images:
        if (action.style) {
            j["artist"] = optional_string(action.style->artist);
            j["background"] = optional_string(action.style->background);
        }
        break;
    case SessionAction::Kind::select:
        j["index"] = action.index;
        break;
    case SessionAction::Kind::generate:
        break;
    }
    return j;
}

SessionAction action_from_json(const json& j) {
    try {
        SessionAction action;
        const auto op = j.at("op").get<std::string>();
        const auto it = std::find(action_names.begin(), action_names.end(), op);
        if (it == action_names.end()) {
            throw ParseError("unknown action op '" + op + "'", 0);
        }
        action.kind = static_cast<SessionAction::Kind>(it - action_names.begin());
        switch (action.kind) {
        case SessionAction::Kind::start:
            action.first_sentence = j.at("first_sentence").get<std::string>();
            action.seed = j.value("seed", std::uint64_t{0});
            if (j.contains("style")) action.style = style_from_json(j.at("style"));
            break;
        case SessionAction::Kind::override_suggestions:
            if (j.contains("emotions")) action.emotions = j.at("emotions").get<EmotionLabelSet>();
            if (j.contains("keywords")) action.keywords = j.at("keywords").get<KeywordSet>();
            break;
        case SessionAction::Kind::images:
            if (j.contains("artist") || j.contains("background")) {
                action.style = style_from_json(j);
            }
            break;
        case SessionAction::Kind::select:
            action.index = j.at("index").get<std::size_t>();
            break;
        case SessionAction::Kind::generate:
            break;
        }
        return action;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed action: ") + e.what(), 0);
    }
}

StorySession apply_action(const SessionEngine& engine, const std::optional<StorySession>& session,
                          const SessionAction& action) {
    if (action.kind == SessionAction::Kind::start) {
        if (session) {
            throw InvalidState("session already started");
        }
        return engine.start_session(action.first_sentence, action.seed,
                                    action.style.value_or(StylePrefs{}));
    }
    if (!session) {
        throw InvalidState("no session; the first action must be start");
    }
    switch (action.kind) {
    case SessionAction::Kind::override_suggestions:
        return engine.override_suggestions(*session, action.emotions, action.keywords);
    case SessionAction::Kind::generate:
        return engine.generate_next_sentence(*session);
    case SessionAction::Kind::images:
        return engine.generate_turn_images(*session, action.style);
    case SessionAction::Kind::select:
        return engine.select_image(*session, action.index);
    case SessionAction::Kind::start:
        break;
    }
    throw InvalidState("unreachable action kind");
}

StorySession replay(const SessionEngine& engine, const std::vector<SessionAction>& actions) {
    std::optional<StorySession> session;
    for (const auto& action : actions) {
        session = apply_action(engine, session, action);
    }
    if (!session) {
        throw InvalidArgument("empty action log");
    }
    return *session;
}

}  // namespace fabula
