#pragma once

#include "fabula/backends.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

namespace httplib {
class Server;
}

namespace fabula {

/// JSON-over-HTTP POST with timeout, bounded retries on transport failure and
/// bearer auth. Thread-safe: each call opens its own connection.
class HttpJsonClient {
public:
    explicit HttpJsonClient(BackendEndpoint endpoint);

    /// Throws BackendUnavailable once retries are exhausted, BackendError on a
    /// non-2xx status or a body that is not JSON.
    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

    [[nodiscard]] const BackendEndpoint& endpoint() const noexcept { return endpoint_; }

private:
    BackendEndpoint endpoint_;
    std::string origin_;       // scheme://host:port
    std::string path_prefix_;  // without trailing slash
};

class HttpTextBackend final : public TextBackend {
public:
    explicit HttpTextBackend(BackendEndpoint endpoint) : client_(std::move(endpoint)) {}
    std::string generate_text(const std::string& prompt, const GenerationConfig& config) override;

private:
    HttpJsonClient client_;
};

class HttpEmotionBackend final : public EmotionBackend {
public:
    explicit HttpEmotionBackend(BackendEndpoint endpoint) : client_(std::move(endpoint)) {}
    /// Components outside [0, 1] are clamped and a warning is logged.
    EmotionVector predict_next_emotions(const std::vector<std::string>& context) override;

private:
    HttpJsonClient client_;
};

class HttpImageBackend final : public ImageBackend {
public:
    explicit HttpImageBackend(BackendEndpoint endpoint) : client_(std::move(endpoint)) {}
    std::vector<ImageRef> generate_images(const ImageRequest& req) override;

private:
    HttpJsonClient client_;
};

class HttpDetectionBackend final : public DetectionBackend {
public:
    explicit HttpDetectionBackend(BackendEndpoint endpoint) : client_(std::move(endpoint)) {}
    std::vector<Detection> detect_objects(const ImageRef& image, double threshold) override;

private:
    HttpJsonClient client_;
};

/// Endpoint settings shared by every backend built from the environment.
struct EndpointDefaults {
    std::chrono::milliseconds timeout{30000};
    int retries = 1;
    std::optional<std::string> auth_token;
};

/// HTTP backends for whichever of FABULA_TEXT_URL, FABULA_EMOTION_URL,
/// FABULA_IMAGE_URL and FABULA_DETECT_URL are set; FABULA_BACKEND_TOKEN, when
/// set, overrides the default token. Unset roles stay null.
Backends backends_from_env(const EndpointDefaults& defaults = {});

/// Serves the backend wire protocol (/generate, /emotions, /images, /detect)
/// on top of any Backends, so mocks can stand in for real model servers.
class BackendServer {
public:
    explicit BackendServer(Backends backends);

    void mount(httplib::Server& server);

private:
    Backends backends_;
    std::mutex images_mutex_;
    std::unordered_map<std::string, ImageRef> images_;  // by id, for /detect {image_id}
};

}  // namespace fabula
