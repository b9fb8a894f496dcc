#pragma once

#include "fabula/backends.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fabula {

/// Sentences a mock text backend replays when a prompt's context is a prefix
/// of the script.
struct StoryScript {
    std::string name;
    std::vector<std::string> sentences;
};

enum class MockTextStyle {
    prompted,  ///< follows the prompt's keywords and emotions
    baseline,  ///< conditions on context only
};

/// The depression story from the prompted/unprompted comparison, one script
/// per style.
StoryScript mary_script(MockTextStyle style);

/// Deterministic text generation: scripted continuations first, otherwise
/// template filling seeded by (seed, prompt).
class MockTextBackend final : public TextBackend {
public:
    explicit MockTextBackend(std::uint64_t seed, MockTextStyle style = MockTextStyle::prompted);
    MockTextBackend(std::uint64_t seed, MockTextStyle style, std::vector<StoryScript> scripts);

    std::string generate_text(const std::string& prompt, const GenerationConfig& config) override;

private:
    std::uint64_t seed_;
    MockTextStyle style_;
    std::vector<StoryScript> scripts_;
};

/// Fixture vectors keyed by the last context sentence; anything else is
/// scored with the lexicon.
class MockEmotionBackend final : public EmotionBackend {
public:
    MockEmotionBackend();
    explicit MockEmotionBackend(std::map<std::string, EmotionVector> fixtures);

    EmotionVector predict_next_emotions(const std::vector<std::string>& context) override;

private:
    std::map<std::string, EmotionVector> fixtures_;
};

/// Solid-colour placeholder PNGs with a prompt-hash block pattern. The prompt
/// travels in a tEXt chunk so the mock detector can read it back.
class MockImageBackend final : public ImageBackend {
public:
    explicit MockImageBackend(std::uint64_t seed, std::uint32_t size = 32);

    std::vector<ImageRef> generate_images(const ImageRequest& req) override;

private:
    std::uint64_t seed_;
    std::uint32_t size_;
};

/// Detections derived from the image's embedded prompt: words that name
/// COCO classes are "seen", plus a seeded extra object. Named fixtures
/// override this for specific prompts.
class MockDetectionBackend final : public DetectionBackend {
public:
    struct Fixture {
        std::string name;
        std::string prompt_substring;
        std::vector<Detection> detections;
    };

    explicit MockDetectionBackend(std::uint64_t seed);
    MockDetectionBackend(std::uint64_t seed, std::vector<Fixture> fixtures);

    static std::vector<Fixture> default_fixtures();

    std::vector<Detection> detect_objects(const ImageRef& image, double threshold) override;

private:
    std::uint64_t seed_;
    std::vector<Fixture> fixtures_;
};

/// All four roles backed by mocks sharing one seed.
Backends make_mock_backends(std::uint64_t seed, MockTextStyle style = MockTextStyle::prompted);

}  // namespace fabula
