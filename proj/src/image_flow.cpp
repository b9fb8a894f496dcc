#include "fabula/image_flow.hpp"

#include "fabula/error.hpp"
#include "fabula/text.hpp"

#include <algorithm>
#include <map>

namespace fabula {

StylePrefs StylePrefs::normalized() const {
    auto clean = [](const std::optional<std::string>& field) -> std::optional<std::string> {
        if (!field) return std::nullopt;
        const auto trimmed = trim(*field);
        if (trimmed.empty()) return std::nullopt;
        return std::string(trimmed);
    };
    return {clean(artist), clean(background)};
}

std::size_t DetectionSummary::total_count() const noexcept {
    std::size_t total = 0;
    for (const auto& row : rows) total += row.count;
    return total;
}

std::string augment_image_prompt(std::string_view sentence, const StylePrefs& prefs) {
    if (trim(sentence).empty()) {
        throw InvalidArgument("image prompt sentence must be non-empty");
    }
    const auto style = prefs.normalized();
    std::string prompt(sentence);
    if (style.background) {
        prompt += ", ";
        prompt += *style.background;
    }
    if (style.artist) {
        prompt += ", by ";
        prompt += *style.artist;
    }
    return prompt;
}

DetectionSummary summarize_detections(const std::vector<std::vector<Detection>>& batches) {
    std::map<std::string, DetectionRow> by_label;
    for (const auto& batch : batches) {
        for (const auto& detection : batch) {
            detection.validate();
            auto& row = by_label[detection.label];
            if (row.count == 0) {
                row.item = detection.label;
                row.confidence = detection.confidence;
            } else {
                row.confidence = std::max(row.confidence, detection.confidence);
            }
            ++row.count;
        }
    }
    DetectionSummary summary;
    for (auto& [label, row] : by_label) {
        summary.rows.push_back(std::move(row));
    }
    // by_label is already label-ordered, so a stable sort keeps ties alphabetical.
    std::stable_sort(summary.rows.begin(), summary.rows.end(),
                     [](const DetectionRow& a, const DetectionRow& b) {
                         return a.confidence > b.confidence;
                     });
    return summary;
}

KeywordSet suggestion_keywords(const DetectionSummary& summary, std::size_t limit) {
    KeywordSet out;
    for (const auto& row : summary.rows) {
        if (out.size() >= limit) break;
        out.insert(row.item);
    }
    return out;
}

}  // namespace fabula
