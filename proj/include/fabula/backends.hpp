#pragma once

#include "fabula/emotion.hpp"
#include "fabula/error.hpp"
#include "fabula/prompt.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fabula {

struct BackendEndpoint {
    std::string base_url;
    std::chrono::milliseconds timeout{30000};
    int retries = 1;
    std::optional<std::string> auth_token;

    void validate() const;
};

struct ImageRequest {
    std::string prompt;
    double clip_guidance_scale = 5000.0;
    int steps = 250;
    int n_batches = 3;

    void validate() const;

    friend bool operator==(const ImageRequest&, const ImageRequest&) = default;
};

/// A generated image. `id` is the SHA-256 of `png`, which doubles as the
/// file name when sessions are persisted.
struct ImageRef {
    std::string id;
    std::vector<std::uint8_t> png;
    std::string prompt;

    static ImageRef from_png(std::vector<std::uint8_t> png, std::string prompt);

    friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
    std::string label;
    double confidence = 0.0;
    BoundingBox box;

    /// Throws InvalidArgument unless 0 <= confidence <= 1 and w, h > 0.
    void validate() const;

    friend bool operator==(const Detection&, const Detection&) = default;
};

inline constexpr double default_detection_threshold = 0.4;

/// Raised when only part of an image batch was produced.
class PartialResult : public Error {
public:
    PartialResult(const std::string& message, std::vector<ImageRef> images)
        : Error(ErrorCode::partial_result, message), images_(std::move(images)) {}

    [[nodiscard]] const std::vector<ImageRef>& images() const noexcept { return images_; }

private:
    std::vector<ImageRef> images_;
};

class TextBackend {
public:
    virtual ~TextBackend() = default;
    /// One trimmed, non-empty sentence. Throws EmptyGeneration on blank output.
    virtual std::string generate_text(const std::string& prompt, const GenerationConfig& config) = 0;
};

class EmotionBackend {
public:
    virtual ~EmotionBackend() = default;
    /// Scores for the sentence that follows `context`; always within [0, 1].
    virtual EmotionVector predict_next_emotions(const std::vector<std::string>& context) = 0;
};

class ImageBackend {
public:
    virtual ~ImageBackend() = default;
    /// Exactly `req.n_batches` images, or PartialResult.
    virtual std::vector<ImageRef> generate_images(const ImageRequest& req) = 0;
};

class DetectionBackend {
public:
    virtual ~DetectionBackend() = default;
    /// Detections with confidence >= threshold, most confident first.
    virtual std::vector<Detection> detect_objects(const ImageRef& image, double threshold) = 0;
};

/// Emotion prediction without a model: lexicon scores of the last sentence.
class LexiconEmotionBackend final : public EmotionBackend {
public:
    explicit LexiconEmotionBackend(const EmotionLexicon& lexicon = EmotionLexicon::bundled())
        : lexicon_(&lexicon) {}

    EmotionVector predict_next_emotions(const std::vector<std::string>& context) override;

private:
    const EmotionLexicon* lexicon_;
};

/// The four model roles a session needs. A null emotion backend means the
/// lexicon fallback is used.
struct Backends {
    std::shared_ptr<TextBackend> text;
    std::shared_ptr<EmotionBackend> emotion;
    std::shared_ptr<ImageBackend> image;
    std::shared_ptr<DetectionBackend> detection;
};

/// predict_next_emotions with validation and the lexicon fallback when no
/// backend is configured.
EmotionVector predict_next_emotions(EmotionBackend* backend,
                                    const std::vector<std::string>& context);

/// Filters by threshold and orders by confidence (descending, then label).
std::vector<Detection> filter_and_sort(std::vector<Detection> detections, double threshold);

}  // namespace fabula
