#include "nete/http.hpp"

#include <semaphore>
#include <thread>

#include <httplib.h>

#include "nete/error.hpp"

namespace nete {

struct JsonHttpClient::Limiter {
    explicit Limiter(int n) : slots(n) {}
    std::counting_semaphore<> slots;
};

namespace {

class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
    ~SlotGuard() { s_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<>& s_;
};

bool is_retryable_status(int status) {
    return status == 502 || status == 503 || status == 504;
}

}  // namespace

std::string excerpt(std::string_view payload, std::size_t n) {
    if (payload.size() <= n) return std::string(payload);
    return std::string(payload.substr(0, n)) + "...";
}

JsonHttpClient::JsonHttpClient(std::string endpoint, HttpOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
    if (options_.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
    if (options_.max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
    const auto scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos)
        throw InvalidArgument("endpoint \"" + endpoint_ + "\" lacks a scheme (http:// or https://)");
    const auto path_start = endpoint_.find('/', scheme_end + 3);
    scheme_host_port_ = endpoint_.substr(0, path_start);
    if (path_start != std::string::npos) base_path_ = endpoint_.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    limiter_ = std::make_unique<Limiter>(options_.max_in_flight);
}

JsonHttpClient::~JsonHttpClient() = default;

nlohmann::json JsonHttpClient::post(std::string_view route, const nlohmann::json& body) const {
    const std::string path = base_path_ + std::string(route);
    const std::string payload = body.dump();
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);

    std::string last_detail;
    bool last_was_timeout = false;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        if (attempt > 1) std::this_thread::sleep_for(options_.backoff * (attempt - 1));

        httplib::Result res{nullptr, httplib::Error::Unknown};
        {
            SlotGuard guard(limiter_->slots);
            httplib::Client cli(scheme_host_port_);
            cli.set_connection_timeout(secs.count(), usecs.count());
            cli.set_read_timeout(secs.count(), usecs.count());
            cli.set_write_timeout(secs.count(), usecs.count());
            res = cli.Post(path, payload, "application/json");
        }

        if (!res) {
            const auto err = res.error();
            last_was_timeout =
                err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
            last_detail = httplib::to_string(err);
            continue;
        }
        if (res->status != 200) {
            if (is_retryable_status(res->status) && attempt < options_.max_attempts) {
                last_detail = "HTTP " + std::to_string(res->status);
                continue;
            }
            throw HttpStatusError(endpoint_ + path, res->status, excerpt(res->body));
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
            throw ProtocolError("response from " + endpoint_ + path +
                                " is not valid JSON: " + excerpt(res->body));
        }
    }
    if (last_was_timeout)
        throw TimeoutError(endpoint_ + path, options_.max_attempts, last_detail);
    throw TransportError(endpoint_ + path, options_.max_attempts, last_detail);
}

}  // namespace nete
