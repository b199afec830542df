#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

namespace nete {

struct HttpOptions {
    std::chrono::milliseconds timeout{30000};
    int max_attempts = 3;
    std::chrono::milliseconds backoff{100};
    int max_in_flight = 4;
};

// JSON-over-HTTP POST with bounded retries and a cap on concurrent requests.
// Transport failures and 502/503/504 are retried; every other failure is
// reported on the first occurrence.
class JsonHttpClient {
public:
    JsonHttpClient(std::string endpoint, HttpOptions options);
    ~JsonHttpClient();
    JsonHttpClient(const JsonHttpClient&) = delete;
    JsonHttpClient& operator=(const JsonHttpClient&) = delete;

    nlohmann::json post(std::string_view route, const nlohmann::json& body) const;

    const std::string& endpoint() const noexcept { return endpoint_; }
    const HttpOptions& options() const noexcept { return options_; }

private:
    struct Limiter;

    std::string endpoint_;
    std::string scheme_host_port_;
    std::string base_path_;
    HttpOptions options_;
    std::unique_ptr<Limiter> limiter_;
};

// First n bytes of a payload, for error messages.
std::string excerpt(std::string_view payload, std::size_t n = 200);

}  // namespace nete
