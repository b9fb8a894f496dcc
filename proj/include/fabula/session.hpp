#pragma once

#include "fabula/backends.hpp"
#include "fabula/emotion.hpp"
#include "fabula/image_flow.hpp"
#include "fabula/keywords.hpp"
#include "fabula/prompt.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fabula {

enum class Phase {
    awaiting_first_sentence,
    suggestions_ready,
    sentence_generated,
    images_ready,
    completed,
};

/// "AwaitingFirstSentence", "SuggestionsReady", ...
std::string_view to_string(Phase phase) noexcept;
std::optional<Phase> parse_phase(std::string_view name) noexcept;

/// The co-creation cycle: AwaitingFirstSentence -> SuggestionsReady ->
/// SentenceGenerated -> ImagesReady -> SuggestionsReady | Completed. With
/// illustration switched off, SuggestionsReady also leads straight back to
/// SuggestionsReady or to Completed.
bool is_legal_transition(Phase from, Phase to, bool illustrate = true) noexcept;

/// One loop of the pipeline; turn i produces sentence i + 1.
struct Turn {
    int index = 1;
    EmotionLabelSet suggested_emotions;
    KeywordSet suggested_keywords;
    EmotionLabelSet user_emotions;
    KeywordSet user_keywords;
    std::string prompt;
    std::string generated_sentence;
    std::vector<ImageRef> image_batch;
    std::optional<std::size_t> selected_image;
    DetectionSummary detection_summary;
    StylePrefs style;

    friend bool operator==(const Turn&, const Turn&) = default;
};

struct SessionOptions {
    std::size_t max_sentences = 5;
    /// Generate and select an illustration after every sentence.
    bool illustrate = true;
    /// Detect objects in every image of the batch, not only the selected one.
    bool detect_all_images = true;
    double emotion_threshold = default_emotion_threshold;
    std::size_t fallback_top_k = 3;
    std::size_t suggestion_limit = default_suggestion_limit;
    double detection_threshold = default_detection_threshold;
    GenerationConfig generation;
    double clip_guidance_scale = 5000.0;
    int steps = 250;
    int n_batches = 3;

    void validate() const;

    friend bool operator==(const SessionOptions&, const SessionOptions&) = default;
};

struct StorySession {
    std::string id;
    std::vector<std::string> story;
    std::vector<Turn> turns;
    Phase phase = Phase::awaiting_first_sentence;
    std::uint64_t seed = 0;
    StylePrefs style;  ///< default for image requests that carry no prefs
    SessionOptions options;
    std::string created_at;
    std::string updated_at;

    /// The turn being worked on; throws InvalidState when there is none.
    [[nodiscard]] const Turn& current_turn() const;

    friend bool operator==(const StorySession&, const StorySession&) = default;
};

using Clock = std::function<std::chrono::system_clock::time_point()>;

/// Builds the backends for a session seed. Mock factories seed every role;
/// HTTP factories ignore the seed.
using BackendFactory = std::function<Backends(std::uint64_t seed)>;

BackendFactory fixed_backends(Backends backends);
BackendFactory mock_backend_factory();

/// ISO-8601 UTC with milliseconds, e.g. "2024-01-02T03:04:05.678Z".
std::string format_timestamp(std::chrono::system_clock::time_point time);

/// Drives sessions through the co-creation cycle. Every operation takes a
/// session by const reference and returns the successor state, so a failed
/// operation leaves the caller's session untouched.
class SessionEngine {
public:
    explicit SessionEngine(BackendFactory backends, SessionOptions options = {},
                           Clock clock = std::chrono::system_clock::now);

    StorySession start_session(std::string_view first_sentence, std::uint64_t seed,
                               StylePrefs style = {},
                               std::optional<std::string> id = std::nullopt) const;

    StorySession override_suggestions(const StorySession& session,
                                      std::optional<EmotionLabelSet> emotions,
                                      std::optional<KeywordSet> keywords) const;

    StorySession generate_next_sentence(const StorySession& session) const;

    /// `prefs` falls back to the session's default style when absent.
    StorySession generate_turn_images(const StorySession& session,
                                      const std::optional<StylePrefs>& prefs = std::nullopt) const;

    StorySession select_image(const StorySession& session, std::size_t index) const;

    [[nodiscard]] const SessionOptions& options() const noexcept { return options_; }

private:
    Turn suggest_turn(const StorySession& session, Backends& backends,
                      const DetectionSummary* detections) const;
    std::string now() const;

    BackendFactory backends_;
    SessionOptions options_;
    Clock clock_;
};

/// Deterministic UUID-shaped id for a (seed, first sentence, salt) triple.
std::string derive_session_id(std::uint64_t seed, std::string_view first_sentence,
                              std::uint64_t salt = 0);

// Persistence ---------------------------------------------------------------

inline constexpr int session_schema_version = 1;

/// Session JSON; images appear as {hash, prompt} references.
nlohmann::json session_to_json(const StorySession& session);

/// Inverse of session_to_json. `image_loader(hash)` supplies PNG bytes.
StorySession session_from_json(
    const nlohmann::json& j,
    const std::function<std::vector<std::uint8_t>(const std::string& hash)>& image_loader);

/// Writes the session JSON to `path` and each image next to it as
/// `<sha256>.png`.
void save_session(const StorySession& session, const std::filesystem::path& path);

/// Throws ParseError (with byte offset) on malformed JSON, UnsupportedVersion
/// when schema_version is not 1, NotFound for missing files.
StorySession load_session(const std::filesystem::path& path);

// Action logs -------------------------------------------------------------

/// A user action, as recorded for replay.
struct SessionAction {
    enum class Kind { start, override_suggestions, generate, images, select };

    Kind kind = Kind::start;
    std::string first_sentence;
    std::uint64_t seed = 0;
    std::optional<EmotionLabelSet> emotions;
    std::optional<KeywordSet> keywords;
    std::optional<StylePrefs> style;
    std::size_t index = 0;

    friend bool operator==(const SessionAction&, const SessionAction&) = default;
};

nlohmann::json action_to_json(const SessionAction& action);
SessionAction action_from_json(const nlohmann::json& j);

/// Applies one action; `session` is empty only for the initial `start`.
StorySession apply_action(const SessionEngine& engine, const std::optional<StorySession>& session,
                          const SessionAction& action);

/// Replays a whole log from scratch.
StorySession replay(const SessionEngine& engine, const std::vector<SessionAction>& actions);

}  // namespace fabula
