#include "fabula/service.hpp"

#include "fabula/evaluation.hpp"
#include "fabula/http_backends.hpp"
#include "fabula/json.hpp"
#include "fabula/text.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <charconv>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace fabula {
namespace {

using nlohmann::json;

constexpr std::size_t idempotency_capacity = 1024;

std::atomic<bool> stop_requested{false};

extern "C" void on_stop_signal(int) {
    stop_requested = true;
}

template <typename T>
T parse_number(std::string_view value, std::string_view key, std::size_t line) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("line " + std::to_string(line) + ": invalid value for " +
                             std::string(key) + ": '" + std::string(value) + "'",
                         line);
    }
    return out;
}

bool parse_bool(std::string_view value, std::string_view key, std::size_t line) {
    const auto v = to_lower(value);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ParseError("line " + std::to_string(line) + ": invalid boolean for " + std::string(key),
                     line);
}

void apply_setting(ServiceConfig& config, std::string_view key, std::string_view value,
                   std::size_t line) {
    auto text = [&] { return std::optional<std::string>(std::string(value)); };
    if (key == "host") {
        config.host = std::string(value);
    } else if (key == "port") {
        config.port = parse_number<int>(value, key, line);
        if (config.port < 0 || config.port > 65535) {
            throw ParseError("line " + std::to_string(line) + ": port out of range", line);
        }
    } else if (key == "sessions_dir") {
        config.sessions_dir = std::filesystem::path(std::string(value));
    } else if (key == "mock") {
        config.mock = parse_bool(value, key, line);
    } else if (key == "seed") {
        config.seed = parse_number<std::uint64_t>(value, key, line);
    } else if (key == "text_url") {
        config.text_url = text();
    } else if (key == "emotion_url") {
        config.emotion_url = text();
    } else if (key == "image_url") {
        config.image_url = text();
    } else if (key == "detect_url") {
        config.detect_url = text();
    } else if (key == "backend_token") {
        config.backend_token = text();
    } else if (key == "backend_timeout_ms") {
        config.backend_timeout = std::chrono::milliseconds(parse_number<long>(value, key, line));
    } else if (key == "backend_retries") {
        config.backend_retries = parse_number<int>(value, key, line);
    } else {
        throw ParseError("line " + std::to_string(line) + ": unknown key '" + std::string(key) + "'",
                         line);
    }
}

std::string public_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::parse_error:
    case ErrorCode::undefined_result:
        return "invalid_argument";
    case ErrorCode::empty_generation:
    case ErrorCode::partial_result:
    case ErrorCode::aborted_run:
        return "backend_error";
    default:
        return std::string(to_string(code));
    }
}

json parse_body(const httplib::Request& req) {
    if (trim(req.body).empty()) return json::object();
    auto body = json::parse(req.body);
    if (!body.is_object()) {
        throw InvalidArgument("request body must be a JSON object");
    }
    return body;
}

bool present(const json& body, const char* key) {
    return body.contains(key) && !body.at(key).is_null();
}

std::optional<StylePrefs> style_from_body(const json& body) {
    if (!present(body, "artist") && !present(body, "background")) return std::nullopt;
    StylePrefs prefs;
    if (present(body, "artist")) prefs.artist = body.at("artist").get<std::string>();
    if (present(body, "background")) prefs.background = body.at("background").get<std::string>();
    return prefs.normalized();
}

struct Reply {
    int status = 200;
    json body;
};

}  // namespace

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) {
        throw InvalidArgument("port must lie in [0, 65535]");
    }
    if (backend_timeout.count() <= 0 || backend_retries < 0) {
        throw InvalidArgument("backend timeout must be positive and retries non-negative");
    }
    if (!mock) {
        for (const auto* url : {&text_url, &emotion_url, &image_url, &detect_url}) {
            if (*url && url->value().rfind("http://", 0) != 0) {
                throw InvalidArgument("backend URL must start with http:// : " + url->value());
            }
        }
    }
}

void apply_config_text(ServiceConfig& config, std::string_view text) {
    std::size_t line_number = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_number;
        auto line = trim(raw);
        if (const auto hash = line.find(" #"); hash != std::string_view::npos) {
            line = trim(line.substr(0, hash));
        }
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("line " + std::to_string(line_number) + ": expected key = value",
                             line_number);
        }
        apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_number);
    }
}

void apply_config_file(ServiceConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw NotFound("cannot open config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_config_text(config, buffer.str());
}

void apply_environment(ServiceConfig& config) {
    static constexpr std::pair<const char*, const char*> vars[] = {
        {"FABULA_HOST", "host"},
        {"FABULA_PORT", "port"},
        {"FABULA_SESSIONS_DIR", "sessions_dir"},
        {"FABULA_MOCK", "mock"},
        {"FABULA_SEED", "seed"},
        {"FABULA_TEXT_URL", "text_url"},
        {"FABULA_EMOTION_URL", "emotion_url"},
        {"FABULA_IMAGE_URL", "image_url"},
        {"FABULA_DETECT_URL", "detect_url"},
        {"FABULA_BACKEND_TOKEN", "backend_token"},
        {"FABULA_BACKEND_TIMEOUT_MS", "backend_timeout_ms"},
        {"FABULA_BACKEND_RETRIES", "backend_retries"},
    };
    for (const auto& [var, key] : vars) {
        const char* value = std::getenv(var);
        if (value == nullptr || *value == '\0') continue;
        try {
            apply_setting(config, key, value, 0);
        } catch (const ParseError& e) {
            throw InvalidArgument(std::string(var) + ": " + e.what());
        }
    }
}

BackendFactory backend_factory(const ServiceConfig& config) {
    if (config.mock) return mock_backend_factory();
    auto endpoint = [&](const std::string& url) {
        BackendEndpoint ep;
        ep.base_url = url;
        ep.timeout = config.backend_timeout;
        ep.retries = config.backend_retries;
        ep.auth_token = config.backend_token;
        return ep;
    };
    Backends backends;
    if (config.text_url) backends.text = std::make_shared<HttpTextBackend>(endpoint(*config.text_url));
    if (config.emotion_url) {
        backends.emotion = std::make_shared<HttpEmotionBackend>(endpoint(*config.emotion_url));
    }
    if (config.image_url) {
        backends.image = std::make_shared<HttpImageBackend>(endpoint(*config.image_url));
    }
    if (config.detect_url) {
        backends.detection = std::make_shared<HttpDetectionBackend>(endpoint(*config.detect_url));
    }
    return fixed_backends(std::move(backends));
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::parse_error:
    case ErrorCode::undefined_result:
        return 400;
    case ErrorCode::not_found:
        return 404;
    case ErrorCode::invalid_state:
    case ErrorCode::conflict:
        return 409;
    case ErrorCode::unsupported_version:
        return 422;
    case ErrorCode::backend_unavailable:
    case ErrorCode::backend_error:
    case ErrorCode::empty_generation:
    case ErrorCode::partial_result:
    case ErrorCode::aborted_run:
        return 502;
    }
    return 500;
}

json error_body(const Error& error) {
    json e{{"code", public_code(error.code())}, {"message", error.what()}};
    json details = json::object();
    if (public_code(error.code()) != to_string(error.code())) {
        details["cause"] = std::string(to_string(error.code()));
    }
    if (const auto* backend = dynamic_cast<const BackendError*>(&error)) {
        details["backend_status"] = backend->status();
    }
    if (const auto* parse = dynamic_cast<const ParseError*>(&error)) {
        details["line"] = parse->line();
    }
    if (!details.empty()) e["details"] = details;
    return json{{"error", e}};
}

json session_view(const StorySession& session, bool busy) {
    auto j = session_to_json(session);
    j["status"] = busy ? "busy" : "idle";
    for (auto& turn : j["turns"]) {
        for (auto& image : turn["image_batch"]) {
            image["url"] = "/sessions/" + session.id + "/images/" + image["hash"].get<std::string>();
        }
    }
    return j;
}

Service::Service(ServiceConfig config)
    : Service(config, backend_factory(config)) {}

Service::Service(ServiceConfig config, BackendFactory backends, Clock clock)
    : config_(std::move(config)) {
    config_.validate();
    auto engine = std::make_shared<const SessionEngine>(std::move(backends), SessionOptions{},
                                                        std::move(clock));
    store_ = std::make_unique<SessionStore>(std::move(engine), config_.sessions_dir);
}

std::optional<Service::StoredResponse> Service::recall(const std::string& key) {
    const std::lock_guard lock(idempotency_mutex_);
    const auto it = idempotency_.find(key);
    if (it == idempotency_.end()) return std::nullopt;
    return it->second;
}

void Service::remember(const std::string& key, StoredResponse response) {
    const std::lock_guard lock(idempotency_mutex_);
    if (idempotency_.insert_or_assign(key, std::move(response)).second) {
        idempotency_order_.push_back(key);
    }
    while (idempotency_order_.size() > idempotency_capacity) {
        idempotency_.erase(idempotency_order_.front());
        idempotency_order_.pop_front();
    }
}

void Service::mount(httplib::Server& server) {
    auto in_flight = std::make_shared<std::pair<std::mutex, std::set<std::string>>>();

    auto endpoint = [this, in_flight](auto handler) {
        return [this, in_flight, handler](const httplib::Request& req, httplib::Response& res) {
            std::string key;
            if (req.method == "POST" && req.has_header("Idempotency-Key")) {
                key = req.path + "\n" + req.get_header_value("Idempotency-Key");
                if (auto stored = recall(key)) {
                    res.status = stored->status;
                    res.set_header("Idempotent-Replay", "true");
                    res.set_content(stored->body, stored->content_type);
                    return;
                }
                const std::lock_guard lock(in_flight->first);
                if (!in_flight->second.insert(key).second) {
                    res.status = 409;
                    res.set_content(
                        error_body(Error(ErrorCode::conflict,
                                         "a request with this Idempotency-Key is in progress"))
                            .dump(),
                        "application/json");
                    return;
                }
            }
            try {
                Reply reply = handler(req);
                res.status = reply.status;
                res.set_content(reply.body.dump(), "application/json");
            } catch (const Error& e) {
                res.status = http_status(e.code());
                res.set_content(error_body(e).dump(), "application/json");
            } catch (const nlohmann::json::exception& e) {
                res.status = 400;
                res.set_content(error_body(InvalidArgument(std::string("bad request body: ") +
                                                           e.what()))
                                    .dump(),
                                "application/json");
            } catch (const std::exception& e) {
                spdlog::error("{} {} failed: {}", req.method, req.path, e.what());
                res.status = 500;
                res.set_content(json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump(),
                                "application/json");
            }
            if (!key.empty()) {
                if (res.status < 500) {
                    remember(key, {res.status, res.body, "application/json"});
                }
                const std::lock_guard lock(in_flight->first);
                in_flight->second.erase(key);
            }
        };
    };

    auto view = [this](const StorySession& session) {
        return session_view(session, store_->busy(session.id));
    };

    server.Get("/healthz", endpoint([](const httplib::Request&) {
                   return Reply{200, json{{"status", "ok"}}};
               }));

    server.Post("/sessions", endpoint([this, view](const httplib::Request& req) {
                    const auto body = parse_body(req);
                    const auto sentence = body.value("first_sentence", std::string());
                    const auto seed = body.value("seed", config_.seed);
                    StylePrefs style;
                    if (present(body, "style")) style = style_from_body(body.at("style")).value_or(StylePrefs{});
                    return Reply{201, view(store_->create(sentence, seed, style))};
                }));

    server.Get("/sessions", endpoint([this](const httplib::Request&) {
                   json sessions = json::array();
                   for (const auto& info : store_->list()) {
                       sessions.push_back({{"id", info.id},
                                           {"phase", std::string(to_string(info.phase))},
                                           {"sentences", info.sentences},
                                           {"updated_at", info.updated_at},
                                           {"status", info.busy ? "busy" : "idle"}});
                   }
                   return Reply{200, json{{"sessions", sessions}}};
               }));

    server.Get(R"(/sessions/([^/]+))", endpoint([this, view](const httplib::Request& req) {
                   return Reply{200, view(store_->get(req.matches[1]))};
               }));

    server.Post(R"(/sessions/([^/]+)/override)",
                endpoint([this, view](const httplib::Request& req) {
                    const auto body = parse_body(req);
                    std::optional<EmotionLabelSet> emotions;
                    std::optional<KeywordSet> keywords;
                    if (present(body, "emotions")) emotions = body.at("emotions").get<EmotionLabelSet>();
                    if (present(body, "keywords")) keywords = body.at("keywords").get<KeywordSet>();
                    const auto& engine = store_->engine();
                    return Reply{200, view(store_->mutate(req.matches[1], [&](const StorySession& s) {
                                     return engine.override_suggestions(s, emotions, keywords);
                                 }))};
                }));

    server.Post(R"(/sessions/([^/]+)/generate)",
                endpoint([this, view](const httplib::Request& req) {
                    const auto& engine = store_->engine();
                    return Reply{200, view(store_->mutate(req.matches[1], [&](const StorySession& s) {
                                     return engine.generate_next_sentence(s);
                                 }))};
                }));

    server.Post(R"(/sessions/([^/]+)/images)",
                endpoint([this, view](const httplib::Request& req) {
                    const auto prefs = style_from_body(parse_body(req));
                    const auto& engine = store_->engine();
                    return Reply{200, view(store_->mutate(req.matches[1], [&](const StorySession& s) {
                                     return engine.generate_turn_images(s, prefs);
                                 }))};
                }));

    server.Post(R"(/sessions/([^/]+)/select)",
                endpoint([this, view](const httplib::Request& req) {
                    const auto body = parse_body(req);
                    if (!present(body, "index") || !body.at("index").is_number_unsigned()) {
                        throw InvalidArgument("select needs a non-negative integer index");
                    }
                    const auto index = body.at("index").get<std::size_t>();
                    const auto& engine = store_->engine();
                    return Reply{200, view(store_->mutate(req.matches[1], [&](const StorySession& s) {
                                     return engine.select_image(s, index);
                                 }))};
                }));

    server.Get(R"(/sessions/([^/]+)/images/([0-9a-f]{64}))",
               [this](const httplib::Request& req, httplib::Response& res) {
                   try {
                       const auto png = store_->image(req.matches[1], req.matches[2]);
                       res.set_content(std::string(png.begin(), png.end()), "image/png");
                   } catch (const Error& e) {
                       res.status = http_status(e.code());
                       res.set_content(error_body(e).dump(), "application/json");
                   }
               });

    server.Post("/eval/run", endpoint([this](const httplib::Request& req) {
                    const auto body = parse_body(req);
                    std::vector<CorpusItem> corpus;
                    if (present(body, "corpus_jsonl")) {
                        corpus = parse_corpus(body.at("corpus_jsonl").get<std::string>());
                    } else if (present(body, "corpus")) {
                        std::string jsonl;
                        for (const auto& item : body.at("corpus")) jsonl += item.dump() + "\n";
                        corpus = parse_corpus(jsonl);
                    } else {
                        throw InvalidArgument("eval run needs corpus or corpus_jsonl");
                    }
                    const auto seed = body.value("seed", config_.seed);
                    const auto a = make_system(body.value("a", std::string("mock:prompted")), seed);
                    const auto b = make_system(body.value("b", std::string("mock:baseline")), seed);
                    return Reply{200, report_to_json(run_comparison(corpus, a, b))};
                }));
}

void Service::run() {
    httplib::Server server;
    mount(server);
    if (!server.bind_to_port(config_.host, config_.port)) {
        throw InvalidArgument("cannot bind " + config_.host + ":" + std::to_string(config_.port) +
                              " (port busy or not permitted)");
    }
    {
        const std::lock_guard lock(server_mutex_);
        running_ = &server;
    }
    stop_requested = false;
    std::signal(SIGINT, on_stop_signal);
    std::signal(SIGTERM, on_stop_signal);
    std::atomic<bool> done{false};
    std::thread watcher([&] {
        while (!done) {
            if (stop_requested) {
                spdlog::info("stop signal received; draining in-flight requests");
                server.stop();
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
    });
    spdlog::info("serving on {}:{}{}", config_.host, config_.port, config_.mock ? " (mock backends)" : "");
    server.listen_after_bind();
    done = true;
    watcher.join();
    const std::lock_guard lock(server_mutex_);
    running_ = nullptr;
}

void Service::stop() {
    const std::lock_guard lock(server_mutex_);
    if (running_ != nullptr) running_->stop();
}

}  // namespace fabula
