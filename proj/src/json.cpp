#include "fabula/json.hpp"

namespace fabula {

using nlohmann::json;

void to_json(json& j, const EmotionVector& v) {
    j = json::array();
    for (const double value : v.values()) j.push_back(value);
}

void from_json(const json& j, EmotionVector& v) {
    if (!j.is_array() || j.size() != emotion_count) {
        throw InvalidArgument("emotion vector must be an array of 8 numbers");
    }
    std::array<double, emotion_count> values{};
    for (std::size_t i = 0; i < emotion_count; ++i) values[i] = j.at(i).get<double>();
    v = EmotionVector(values);
}

void to_json(json& j, const EmotionLabelSet& set) {
    j = set.names();
}

void from_json(const json& j, EmotionLabelSet& set) {
    set = EmotionLabelSet::from_names(j.get<std::vector<std::string>>());
}

void to_json(json& j, const KeywordSet& set) {
    j = set.phrases();
}

void from_json(const json& j, KeywordSet& set) {
    set = KeywordSet{};
    for (const auto& phrase : j.get<std::vector<std::string>>()) set.insert(phrase);
}

void to_json(json& j, const GenerationConfig& config) {
    j = json{{"max_source_length", config.max_source_length},
             {"max_output_length", config.max_output_length},
             {"top_k", config.top_k},
             {"repetition_penalty", config.repetition_penalty},
             {"length_penalty", config.length_penalty}};
}

void from_json(const json& j, GenerationConfig& config) {
    GenerationConfig defaults;
    config.max_source_length = j.value("max_source_length", defaults.max_source_length);
    config.max_output_length = j.value("max_output_length", defaults.max_output_length);
    config.top_k = j.value("top_k", defaults.top_k);
    config.repetition_penalty = j.value("repetition_penalty", defaults.repetition_penalty);
    config.length_penalty = j.value("length_penalty", defaults.length_penalty);
    config.validate();
}

void to_json(json& j, const ImageRequest& req) {
    j = json{{"prompt", req.prompt},
             {"clip_guidance_scale", req.clip_guidance_scale},
             {"steps", req.steps},
             {"n_batches", req.n_batches}};
}

void from_json(const json& j, ImageRequest& req) {
    ImageRequest defaults;
    req.prompt = j.at("prompt").get<std::string>();
    req.clip_guidance_scale = j.value("clip_guidance_scale", defaults.clip_guidance_scale);
    req.steps = j.value("steps", defaults.steps);
    req.n_batches = j.value("n_batches", defaults.n_batches);
    req.validate();
}

void to_json(json& j, const Detection& d) {
    j = json{{"label", d.label},
             {"confidence", d.confidence},
             {"box", {d.box.x, d.box.y, d.box.w, d.box.h}}};
}

void from_json(const json& j, Detection& d) {
    d.label = j.at("label").get<std::string>();
    d.confidence = j.at("confidence").get<double>();
    const auto& box = j.at("box");
    if (!box.is_array() || box.size() != 4) {
        throw InvalidArgument("detection box must be [x, y, w, h]");
    }
    d.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
             box[3].get<double>()};
    d.validate();
}

}  // namespace fabula
