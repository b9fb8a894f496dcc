#include "fabula/backends.hpp"

#include "fabula/text.hpp"

#include <algorithm>

namespace fabula {

void BackendEndpoint::validate() const {
    if (base_url.empty()) {
        throw InvalidArgument("backend endpoint needs a base URL");
    }
    if (timeout.count() <= 0) {
        throw InvalidArgument("backend timeout must be positive");
    }
    if (retries < 0) {
        throw InvalidArgument("backend retries must be non-negative");
    }
}

void ImageRequest::validate() const {
    if (trim(prompt).empty()) {
        throw InvalidArgument("image prompt must be non-empty");
    }
    if (steps < 1 || n_batches < 1) {
        throw InvalidArgument("image request needs steps >= 1 and n_batches >= 1");
    }
    if (!(clip_guidance_scale > 0.0)) {
        throw InvalidArgument("clip_guidance_scale must be positive");
    }
}

ImageRef ImageRef::from_png(std::vector<std::uint8_t> png, std::string prompt) {
    ImageRef ref;
    ref.id = sha256_hex(png);
    ref.png = std::move(png);
    ref.prompt = std::move(prompt);
    return ref;
}

void Detection::validate() const {
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
        throw InvalidArgument("detection confidence outside [0, 1]");
    }
    if (!(box.w > 0.0 && box.h > 0.0)) {
        throw InvalidArgument("detection box needs positive width and height");
    }
    if (label.empty()) {
        throw InvalidArgument("detection label must be non-empty");
    }
}

EmotionVector LexiconEmotionBackend::predict_next_emotions(
    const std::vector<std::string>& context) {
    if (context.empty()) {
        throw InvalidArgument("emotion prediction needs at least one context sentence");
    }
    return lexicon_score(context.back(), *lexicon_);
}

EmotionVector predict_next_emotions(EmotionBackend* backend,
                                    const std::vector<std::string>& context) {
    if (context.empty()) {
        throw InvalidArgument("emotion prediction needs at least one context sentence");
    }
    if (backend == nullptr) {
        return LexiconEmotionBackend().predict_next_emotions(context);
    }
    return backend->predict_next_emotions(context);
}

std::vector<Detection> filter_and_sort(std::vector<Detection> detections, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw InvalidArgument("detection threshold must lie in [0, 1]");
    }
    std::erase_if(detections, [&](const Detection& d) { return d.confidence < threshold; });
    std::stable_sort(detections.begin(), detections.end(),
                     [](const Detection& a, const Detection& b) {
                         if (a.confidence != b.confidence) return a.confidence > b.confidence;
                         return a.label < b.label;
                     });
    return detections;
}

}  // namespace fabula
