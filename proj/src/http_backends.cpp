#include "fabula/http_backends.hpp"

#include "fabula/json.hpp"
#include "fabula/text.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>

namespace fabula {
namespace {

using nlohmann::json;

std::optional<std::string> env(const char* name) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

[[noreturn]] void rethrow_as_bad_response(const std::string& what, const std::exception& e) {
    throw BackendError(what + ": malformed response (" + e.what() + ")", 0);
}

}  // namespace

HttpJsonClient::HttpJsonClient(BackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
    const auto scheme_end = endpoint_.base_url.find("://");
    if (scheme_end == std::string::npos || endpoint_.base_url.substr(0, scheme_end) != "http") {
        throw InvalidArgument("backend URL must start with http:// : " + endpoint_.base_url);
    }
    const auto path_begin = endpoint_.base_url.find('/', scheme_end + 3);
    origin_ = endpoint_.base_url.substr(0, path_begin);
    if (path_begin != std::string::npos) {
        path_prefix_ = endpoint_.base_url.substr(path_begin);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
}

json HttpJsonClient::post(const std::string& path, const json& body) const {
    httplib::Client client(origin_);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
        endpoint_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), static_cast<time_t>(micros.count()));
    client.set_read_timeout(seconds.count(), static_cast<time_t>(micros.count()));
    client.set_write_timeout(seconds.count(), static_cast<time_t>(micros.count()));
    if (endpoint_.auth_token) {
        client.set_bearer_token_auth(*endpoint_.auth_token);
    }

    const std::string target = path_prefix_ + path;
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
        auto result = client.Post(target, payload, "application/json");
        if (!result) {
            last_error = httplib::to_string(result.error());
            spdlog::warn("backend {}{} attempt {} failed: {}", origin_, target, attempt + 1,
                         last_error);
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            throw BackendError("backend " + origin_ + target + " returned status " +
                                   std::to_string(result->status),
                               result->status);
        }
        try {
            return json::parse(result->body);
        } catch (const json::parse_error& e) {
            rethrow_as_bad_response(origin_ + target, e);
        }
    }
    throw BackendUnavailable("backend " + origin_ + target + " unavailable after " +
                             std::to_string(endpoint_.retries + 1) + " attempt(s): " + last_error);
}

std::string HttpTextBackend::generate_text(const std::string& prompt,
                                           const GenerationConfig& config) {
    if (trim(prompt).empty()) {
        throw InvalidArgument("prompt must be non-empty");
    }
    config.validate();
    json body = config;
    body["prompt"] = prompt;
    const auto response = client_.post("/generate", body);
    std::string text;
    try {
        text = response.at("text").get<std::string>();
    } catch (const json::exception& e) {
        rethrow_as_bad_response("/generate", e);
    }
    const auto trimmed = trim(text);
    if (trimmed.empty()) {
        throw EmptyGeneration("text backend returned an empty completion");
    }
    return std::string(trimmed);
}

EmotionVector HttpEmotionBackend::predict_next_emotions(const std::vector<std::string>& context) {
    if (context.empty()) {
        throw InvalidArgument("emotion prediction needs at least one context sentence");
    }
    const auto response = client_.post("/emotions", json{{"context", context}});
    std::array<double, emotion_count> raw{};
    try {
        const auto& values = response.at("values");
        if (!values.is_array() || values.size() != emotion_count) {
            throw BackendError("/emotions: expected 8 values", 0);
        }
        for (std::size_t i = 0; i < emotion_count; ++i) raw[i] = values[i].get<double>();
    } catch (const json::exception& e) {
        rethrow_as_bad_response("/emotions", e);
    }
    std::size_t clamped = 0;
    auto vector = EmotionVector::clamped(raw, &clamped);
    if (clamped > 0) {
        spdlog::warn("emotion backend returned {} component(s) outside [0, 1]; clamped", clamped);
    }
    return vector;
}

std::vector<ImageRef> HttpImageBackend::generate_images(const ImageRequest& req) {
    req.validate();
    const auto response = client_.post("/images", json(req));
    std::vector<ImageRef> images;
    try {
        for (const auto& item : response.at("images")) {
            auto png = base64_decode(item.at("png_base64").get<std::string>());
            auto ref = ImageRef::from_png(std::move(png), req.prompt);
            if (item.contains("id") && item["id"].get<std::string>() != ref.id) {
                spdlog::debug("image backend id {} differs from content hash {}",
                              item["id"].get<std::string>(), ref.id);
            }
            images.push_back(std::move(ref));
        }
    } catch (const json::exception& e) {
        rethrow_as_bad_response("/images", e);
    } catch (const ParseError& e) {
        rethrow_as_bad_response("/images", e);
    }
    if (images.size() < static_cast<std::size_t>(req.n_batches)) {
        throw PartialResult("image backend returned " + std::to_string(images.size()) + " of " +
                                std::to_string(req.n_batches) + " images",
                            std::move(images));
    }
    images.resize(static_cast<std::size_t>(req.n_batches));
    return images;
}

std::vector<Detection> HttpDetectionBackend::detect_objects(const ImageRef& image,
                                                            double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw InvalidArgument("detection threshold must lie in [0, 1]");
    }
    const json body{{"png_base64", base64_encode(image.png)}, {"threshold", threshold}};
    const auto response = client_.post("/detect", body);
    std::vector<Detection> detections;
    try {
        detections = response.at("detections").get<std::vector<Detection>>();
    } catch (const json::exception& e) {
        rethrow_as_bad_response("/detect", e);
    } catch (const InvalidArgument& e) {
        rethrow_as_bad_response("/detect", e);
    }
    return filter_and_sort(std::move(detections), threshold);
}

Backends backends_from_env(const EndpointDefaults& defaults) {
    auto endpoint = [&](const char* var) -> std::optional<BackendEndpoint> {
        auto url = env(var);
        if (!url) return std::nullopt;
        BackendEndpoint ep;
        ep.base_url = *url;
        ep.timeout = defaults.timeout;
        ep.retries = defaults.retries;
        ep.auth_token = env("FABULA_BACKEND_TOKEN");
        if (!ep.auth_token) ep.auth_token = defaults.auth_token;
        return ep;
    };
    Backends backends;
    if (auto ep = endpoint("FABULA_TEXT_URL")) {
        backends.text = std::make_shared<HttpTextBackend>(*ep);
    }
    if (auto ep = endpoint("FABULA_EMOTION_URL")) {
        backends.emotion = std::make_shared<HttpEmotionBackend>(*ep);
    }
    if (auto ep = endpoint("FABULA_IMAGE_URL")) {
        backends.image = std::make_shared<HttpImageBackend>(*ep);
    }
    if (auto ep = endpoint("FABULA_DETECT_URL")) {
        backends.detection = std::make_shared<HttpDetectionBackend>(*ep);
    }
    return backends;
}

BackendServer::BackendServer(Backends backends) : backends_(std::move(backends)) {}

void BackendServer::mount(httplib::Server& server) {
    const auto handle = [](const httplib::Request& req, httplib::Response& res, auto&& body_fn) {
        try {
            const auto body = json::parse(req.body);
            res.set_content(body_fn(body).dump(), "application/json");
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        } catch (const Error& e) {
            res.status = e.code() == ErrorCode::invalid_argument ? 400 : 500;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    };

    server.Post("/generate", [this, handle](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [this](const json& body) {
            const GenerationConfig config = body;
            return json{{"text", backends_.text->generate_text(body.at("prompt"), config)}};
        });
    });
    server.Post("/emotions", [this, handle](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [this](const json& body) {
            const auto context = body.at("context").get<std::vector<std::string>>();
            return json{{"values", predict_next_emotions(backends_.emotion.get(), context)}};
        });
    });
    server.Post("/images", [this, handle](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [this](const json& body) {
            const ImageRequest request = body;
            json images = json::array();
            for (auto& image : backends_.image->generate_images(request)) {
                images.push_back({{"id", image.id}, {"png_base64", base64_encode(image.png)}});
                const std::lock_guard lock(images_mutex_);
                images_.insert_or_assign(image.id, std::move(image));
            }
            return json{{"images", images}};
        });
    });
    server.Post("/detect", [this, handle](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [this](const json& body) {
            ImageRef image;
            if (body.contains("png_base64")) {
                image = ImageRef::from_png(base64_decode(body["png_base64"].get<std::string>()), "");
            } else {
                const auto id = body.at("image_id").get<std::string>();
                const std::lock_guard lock(images_mutex_);
                const auto it = images_.find(id);
                if (it == images_.end()) throw InvalidArgument("unknown image_id " + id);
                image = it->second;
            }
            const double threshold = body.value("threshold", default_detection_threshold);
            return json{{"detections", backends_.detection->detect_objects(image, threshold)}};
        });
    });
}

}  // namespace fabula
