#include "deeptrace/fetcher.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <thread>

#include "deeptrace/errors.hpp"
#include "deeptrace/util.hpp"

namespace deeptrace {

using json = nlohmann::json;

const char* fetch_status_name(FetchStatus s) {
    switch (s) {
        case FetchStatus::Ok: return "ok";
        case FetchStatus::Paywalled: return "paywalled";
        case FetchStatus::NotFound: return "not_found";
        case FetchStatus::Timeout: return "timeout";
        case FetchStatus::ExtractionError: return "extraction_error";
    }
    return "?";
}

FetchStatus parse_fetch_status(const std::string& s) {
    if (s == "ok") return FetchStatus::Ok;
    if (s == "paywalled") return FetchStatus::Paywalled;
    if (s == "not_found") return FetchStatus::NotFound;
    if (s == "timeout") return FetchStatus::Timeout;
    if (s == "extraction_error") return FetchStatus::ExtractionError;
    throw Error("unknown fetch status: " + s);
}

namespace {

std::int64_t now_unix() {
    return static_cast<std::int64_t>(std::time(nullptr));
}

FetchOutcome outcome_from_response(const std::string& url, const httplib::Result& res) {
    FetchOutcome out;
    out.url = url;
    out.fetched_at = now_unix();
    if (!res) {
        switch (res.error()) {
            case httplib::Error::ConnectionTimeout:
            case httplib::Error::Read:
            case httplib::Error::Write:
                out.status = FetchStatus::Timeout;
                break;
            default:
                out.status = FetchStatus::ExtractionError;
                break;
        }
        return out;
    }
    const int code = res->status;
    if (code >= 200 && code < 300) {
        if (res->body.empty()) {
            out.status = FetchStatus::ExtractionError;
        } else {
            out.status = FetchStatus::Ok;
            out.text = res->body;
        }
    } else if (code == 404 || code == 410) {
        out.status = FetchStatus::NotFound;
    } else if (code == 401 || code == 402 || code == 403 || code == 451) {
        out.status = FetchStatus::Paywalled;
    } else {
        out.status = FetchStatus::ExtractionError;
    }
    return out;
}

}  // namespace

ReaderEndpointBackend::ReaderEndpointBackend(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

FetchOutcome ReaderEndpointBackend::fetch(const std::string& url) {
    auto base = parse_url(base_url_);
    if (!base) {
        FetchOutcome out;
        out.url = url;
        out.status = FetchStatus::ExtractionError;
        out.fetched_at = now_unix();
        return out;
    }
    httplib::Client client(base->origin());
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_follow_location(true);
    std::string path = base->path == "/" ? "" : base->path;
    path += "/" + url;
    auto res = client.Get(path);
    return outcome_from_response(url, res);
}

DirectHttpBackend::DirectHttpBackend(int timeout_seconds) : timeout_seconds_(timeout_seconds) {}

FetchOutcome DirectHttpBackend::fetch(const std::string& url) {
    auto parsed = parse_url(url);
    if (!parsed) {
        FetchOutcome out;
        out.url = url;
        out.status = FetchStatus::ExtractionError;
        out.fetched_at = now_unix();
        return out;
    }
    httplib::Client client(parsed->origin());
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_follow_location(true);
    auto res = client.Get(parsed->path);
    return outcome_from_response(url, res);
}

Fetcher::Fetcher(std::unique_ptr<ReaderBackend> backend, FetcherConfig cfg)
    : backend_(std::move(backend)), cfg_(std::move(cfg)) {}

std::optional<FetchOutcome> Fetcher::cache_get(const std::string& url) {
    if (cfg_.cache_dir.empty()) return std::nullopt;
    const std::filesystem::path p =
        std::filesystem::path(cfg_.cache_dir) / (sha256_hex(url) + ".json");
    if (!std::filesystem::exists(p)) return std::nullopt;
    json obj = json::parse(read_file(p.string()), nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) return std::nullopt;
    try {
        FetchOutcome out;
        out.url = obj.at("url").get<std::string>();
        if (out.url != url) return std::nullopt;  // hash collision or stale file
        out.status = parse_fetch_status(obj.at("status").get<std::string>());
        out.text = obj.value("text", std::string());
        out.fetched_at = obj.at("fetched_at").get<std::int64_t>();
        if (cfg_.ttl_seconds > 0 && now_unix() - out.fetched_at > cfg_.ttl_seconds)
            return std::nullopt;
        out.from_cache = true;
        return out;
    } catch (const json::exception&) {
        return std::nullopt;
    } catch (const Error&) {
        return std::nullopt;
    }
}

void Fetcher::cache_put(const FetchOutcome& outcome) {
    if (cfg_.cache_dir.empty()) return;
    const std::filesystem::path p =
        std::filesystem::path(cfg_.cache_dir) / (sha256_hex(outcome.url) + ".json");
    json obj;
    obj["url"] = outcome.url;
    obj["status"] = fetch_status_name(outcome.status);
    obj["text"] = outcome.text;
    obj["fetched_at"] = outcome.fetched_at;
    atomic_write_file(p.string(), obj.dump() + "\n");
}

void Fetcher::wait_host_slot(const std::string& url) {
    if (cfg_.per_host_delay_ms <= 0) return;
    auto parsed = parse_url(url);
    const std::string host = parsed ? parsed->host : url;
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard<std::mutex> lock(host_mutex_);
        const auto now = std::chrono::steady_clock::now();
        auto& next = host_next_slot_[host];
        slot = std::max(next, now);
        next = slot + std::chrono::milliseconds(cfg_.per_host_delay_ms);
    }
    std::this_thread::sleep_until(slot);
}

FetchOutcome Fetcher::fetch_uncached(const std::string& url) {
    wait_host_slot(url);
    ++network_calls_;
    FetchOutcome out = backend_->fetch(url);
    cache_put(out);
    return out;
}

FetchOutcome Fetcher::fetch_source(const std::string& url) {
    if (auto hit = cache_get(url)) {
        ++cache_hits_;
        return *hit;
    }

    std::promise<FetchOutcome> promise;
    std::shared_future<FetchOutcome> shared;
    bool owner = false;
    {
        std::lock_guard<std::mutex> lock(inflight_mutex_);
        auto it = inflight_.find(url);
        if (it == inflight_.end()) {
            shared = promise.get_future().share();
            inflight_.emplace(url, shared);
            owner = true;
        } else {
            shared = it->second;
        }
    }
    if (!owner) {
        ++cache_hits_;  // joined an in-flight fetch instead of the network
        return shared.get();
    }

    FetchOutcome out = fetch_uncached(url);
    promise.set_value(out);
    {
        std::lock_guard<std::mutex> lock(inflight_mutex_);
        inflight_.erase(url);
    }
    return out;
}

std::vector<FetchOutcome> Fetcher::fetch_all(const std::vector<std::string>& urls) {
    std::vector<FetchOutcome> results(urls.size());

    // Deduplicate so a URL repeated within one batch is fetched once.
    std::map<std::string, std::vector<std::size_t>> positions;
    std::vector<std::string> unique_urls;
    for (std::size_t i = 0; i < urls.size(); ++i) {
        auto [it, inserted] = positions.try_emplace(urls[i]);
        if (inserted) unique_urls.push_back(urls[i]);
        else ++cache_hits_;  // later duplicates are served from the first fetch
        it->second.push_back(i);
    }

    std::vector<FetchOutcome> unique_results(unique_urls.size());
    const std::size_t workers =
        std::min<std::size_t>(std::max(1, cfg_.max_in_flight), unique_urls.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= unique_urls.size()) return;
            unique_results[i] = fetch_source(unique_urls[i]);
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    for (std::size_t u = 0; u < unique_urls.size(); ++u)
        for (std::size_t pos : positions[unique_urls[u]]) results[pos] = unique_results[u];
    return results;
}

}  // namespace deeptrace
