#include <httplib.h>

#include <cmath>
#include <json.hpp>
#include <limits>
#include <thread>

#include "negadapt/embed_store.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

namespace {

std::string excerpt(std::string_view body) {
    constexpr std::size_t limit = 200;
    return body.size() <= limit ? std::string(body) : std::string(body.substr(0, limit)) + "...";
}

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string base_path;
};

Endpoint split_endpoint(std::string url) {
    if (url.find("://") == std::string::npos) {
        url = "http://" + url;
    }
    const auto host_start = url.find("://") + 3;
    const auto slash = url.find('/', host_start);
    Endpoint e;
    e.origin = url.substr(0, slash);
    if (slash != std::string::npos) {
        e.base_path = url.substr(slash);
        while (!e.base_path.empty() && e.base_path.back() == '/') {
            e.base_path.pop_back();
        }
    }
    return e;
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::chrono::milliseconds RetryPolicy::delay(int retry, double unit) const {
    const double floor_ms = static_cast<double>(base_delay.count()) * std::pow(factor, retry);
    const double jitter_ms = jitter ? floor_ms * unit : 0.0;
    return std::chrono::milliseconds(static_cast<std::int64_t>(floor_ms + jitter_ms));
}

std::vector<EmbeddingVector> parse_embeddings_response(std::string_view body, const EmbedRequest& request) {
    const std::string prefix = request.instruction_prefix.value_or("");
    const std::size_t n = request.texts.size();
    std::vector<std::optional<std::vector<double>>> slots(n);
    try {
        const auto doc = nlohmann::json::parse(body);
        const auto& data = doc.at("data");
        if (!data.is_array()) {
            throw Error(ErrorCode::ProviderError, "\"data\" is not an array: " + excerpt(body));
        }
        for (const auto& item : data) {
            const auto index = item.at("index").get<std::int64_t>();
            if (index < 0 || static_cast<std::size_t>(index) >= n || slots[static_cast<std::size_t>(index)]) {
                throw Error(ErrorCode::ProviderError,
                            "bad or repeated index " + std::to_string(index) + " in provider response");
            }
            slots[static_cast<std::size_t>(index)] = item.at("embedding").get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderError,
                    std::string("malformed provider response (") + e.what() + "): " + excerpt(body));
    }

    std::vector<EmbeddingVector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots[i]) {
            throw Error(ErrorCode::ProviderError, "provider response lacks index " + std::to_string(i));
        }
        if (!out.empty() && slots[i]->size() != out.front().dim()) {
            throw Error(ErrorCode::InconsistentDimensions,
                        "provider returned dims " + std::to_string(out.front().dim()) + " and " +
                            std::to_string(slots[i]->size()));
        }
        out.emplace_back(text_digest(prefix, request.texts[i]), std::move(*slots[i]), request.model);
    }
    return out;
}

HttpProvider::HttpProvider(ProviderConfig config, Sleeper sleeper, std::uint64_t jitter_seed)
    : config_(std::move(config)), sleeper_(std::move(sleeper)), rng_(jitter_seed) {
    if (!sleeper_) {
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
    if (config_.retry.max_attempts < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_attempts must be at least 1");
    }
}

double HttpProvider::next_unit() {
    std::lock_guard lock(rng_mutex_);
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::vector<EmbeddingVector> HttpProvider::fetch(const EmbedRequest& request) {
    validate(request, std::numeric_limits<std::size_t>::max());
    const std::string prefix = request.instruction_prefix.value_or("");
    nlohmann::json body;
    body["model"] = request.model;
    body["input"] = nlohmann::json::array();
    for (const auto& text : request.texts) {
        body["input"].push_back(prefix + text);
    }
    const std::string payload = body.dump();

    const Endpoint endpoint = split_endpoint(config_.endpoint);
    const std::string path = endpoint.base_path + config_.route;
    httplib::Headers headers;
    if (config_.api_key) {
        headers.emplace("Authorization", "Bearer " + *config_.api_key);
    }

    std::string last_failure;
    for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
        if (attempt > 0) {
            sleeper_(config_.retry.delay(attempt - 1, next_unit()));
        }
        httplib::Client client(endpoint.origin);
        if (!client.is_valid()) {
            throw Error(ErrorCode::ProviderError, "invalid endpoint " + config_.endpoint);
        }
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            return parse_embeddings_response(res->body, request);
        }
        if (!transient_status(res->status)) {
            throw Error(ErrorCode::ProviderError,
                        "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
        }
        last_failure = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
    }
    throw Error(ErrorCode::RetriesExhausted, std::to_string(config_.retry.max_attempts) +
                                                 " attempts failed; last: " + last_failure);
}

}  // namespace negadapt
