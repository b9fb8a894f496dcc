#pragma once

#include "fabula/error.hpp"
#include "fabula/session.hpp"
#include "fabula/session_store.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace httplib {
class Server;
}

namespace fabula {

/// Service configuration. Sources apply in order: defaults, config file,
/// FABULA_* environment variables, command-line flags.
struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> sessions_dir;
    bool mock = false;
    std::uint64_t seed = 42;
    std::optional<std::string> text_url;
    std::optional<std::string> emotion_url;
    std::optional<std::string> image_url;
    std::optional<std::string> detect_url;
    std::optional<std::string> backend_token;
    std::chrono::milliseconds backend_timeout{30000};
    int backend_retries = 1;

    void validate() const;
};

/// Key-value lines `key = value`; `#` starts a comment. Keys: host, port,
/// sessions_dir, mock, seed, text_url, emotion_url, image_url, detect_url,
/// backend_token, backend_timeout_ms, backend_retries. Throws ParseError with
/// the line number on unknown keys or bad values.
void apply_config_text(ServiceConfig& config, std::string_view text);
void apply_config_file(ServiceConfig& config, const std::filesystem::path& path);

/// FABULA_HOST, FABULA_PORT, FABULA_SESSIONS_DIR, FABULA_MOCK, FABULA_SEED,
/// FABULA_TEXT_URL, FABULA_EMOTION_URL, FABULA_IMAGE_URL, FABULA_DETECT_URL,
/// FABULA_BACKEND_TOKEN, FABULA_BACKEND_TIMEOUT_MS, FABULA_BACKEND_RETRIES.
void apply_environment(ServiceConfig& config);

/// Mock factory when `config.mock`, otherwise HTTP adapters for the
/// configured URLs (a missing emotion URL falls back to the lexicon).
BackendFactory backend_factory(const ServiceConfig& config);

/// HTTP status for an error code.
int http_status(ErrorCode code) noexcept;

/// {"error": {"code", "message", "details"?}} using the public code set.
nlohmann::json error_body(const Error& error);

/// Session JSON as served: the persisted form plus "status" ("idle" or
/// "busy") and image URLs.
nlohmann::json session_view(const StorySession& session, bool busy);

/// The REST API over a SessionStore.
class Service {
public:
    explicit Service(ServiceConfig config);
    Service(ServiceConfig config, BackendFactory backends,
            Clock clock = std::chrono::system_clock::now);

    /// Registers every endpoint on `server`.
    void mount(httplib::Server& server);

    /// Binds, serves until stop() or SIGINT/SIGTERM, then drains. Throws
    /// InvalidArgument when the port cannot be bound.
    void run();
    void stop();

    [[nodiscard]] SessionStore& store() noexcept { return *store_; }
    [[nodiscard]] const ServiceConfig& config() const noexcept { return config_; }

private:
    struct StoredResponse {
        int status = 200;
        std::string body;
        std::string content_type;
    };

    std::optional<StoredResponse> recall(const std::string& key);
    void remember(const std::string& key, StoredResponse response);

    ServiceConfig config_;
    std::unique_ptr<SessionStore> store_;
    std::mutex idempotency_mutex_;
    std::map<std::string, StoredResponse> idempotency_;
    std::deque<std::string> idempotency_order_;
    std::mutex server_mutex_;
    httplib::Server* running_ = nullptr;
};

}  // namespace fabula
