#pragma once

#include "fabula/backends.hpp"
#include "fabula/keywords.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fabula {

/// Optional style hints appended to an image prompt.
struct StylePrefs {
    std::optional<std::string> artist;      ///< e.g. "Carl Spitzweg"
    std::optional<std::string> background;  ///< e.g. "country view"

    /// Trims both fields; a blank field becomes absent.
    [[nodiscard]] StylePrefs normalized() const;

    friend bool operator==(const StylePrefs&, const StylePrefs&) = default;
};

struct DetectionRow {
    std::string item;
    std::size_t count = 0;
    double confidence = 0.0;  ///< highest confidence seen for the item

    friend bool operator==(const DetectionRow&, const DetectionRow&) = default;
};

/// Per-label aggregate over an image batch, most confident first.
struct DetectionSummary {
    std::vector<DetectionRow> rows;

    [[nodiscard]] std::size_t total_count() const noexcept;

    friend bool operator==(const DetectionSummary&, const DetectionSummary&) = default;
};

inline constexpr std::size_t default_suggestion_limit = 5;

/// "{sentence}, {background}, by {artist}", omitting absent parts.
std::string augment_image_prompt(std::string_view sentence, const StylePrefs& prefs);

/// Groups detections by label across every image: count of occurrences and
/// maximum confidence, ordered by confidence descending then label ascending.
DetectionSummary summarize_detections(const std::vector<std::vector<Detection>>& batches);

/// The first `limit` items of the summary as keyword phrases.
KeywordSet suggestion_keywords(const DetectionSummary& summary,
                               std::size_t limit = default_suggestion_limit);

}  // namespace fabula
