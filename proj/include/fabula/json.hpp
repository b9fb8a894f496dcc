#pragma once

#include "fabula/backends.hpp"
#include "fabula/emotion.hpp"
#include "fabula/keywords.hpp"
#include "fabula/prompt.hpp"

#include <nlohmann/json.hpp>

// nlohmann::json conversions for the value types that cross the wire or get
// persisted. Decoding failures surface as nlohmann exceptions; callers turn
// them into ParseError.
namespace fabula {

void to_json(nlohmann::json& j, const EmotionVector& v);
void from_json(const nlohmann::json& j, EmotionVector& v);

void to_json(nlohmann::json& j, const EmotionLabelSet& set);
void from_json(const nlohmann::json& j, EmotionLabelSet& set);

void to_json(nlohmann::json& j, const KeywordSet& set);
void from_json(const nlohmann::json& j, KeywordSet& set);

void to_json(nlohmann::json& j, const GenerationConfig& config);
void from_json(const nlohmann::json& j, GenerationConfig& config);

void to_json(nlohmann::json& j, const ImageRequest& req);
void from_json(const nlohmann::json& j, ImageRequest& req);

void to_json(nlohmann::json& j, const Detection& d);
void from_json(const nlohmann::json& j, Detection& d);

}  // namespace fabula
