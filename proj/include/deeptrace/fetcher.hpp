#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace deeptrace {

enum class FetchStatus { Ok, Paywalled, NotFound, Timeout, ExtractionError };

const char* fetch_status_name(FetchStatus s);
FetchStatus parse_fetch_status(const std::string& s);

struct FetchOutcome {
    std::string url;
    FetchStatus status = FetchStatus::ExtractionError;
    std::string text;            // non-empty iff status == Ok
    std::int64_t fetched_at = 0; // unix seconds
    bool from_cache = false;

    bool ok() const { return status == FetchStatus::Ok; }
};

/// Turns a URL into extracted page text. Implementations must be safe to
/// call from multiple threads.
class ReaderBackend {
public:
    virtual ~ReaderBackend() = default;
    virtual FetchOutcome fetch(const std::string& url) = 0;
};

/// Content-extraction endpoint of the form GET <base>/<url>, returning the
/// page's main content as text (the r.jina.ai reader contract).
class ReaderEndpointBackend : public ReaderBackend {
public:
    explicit ReaderEndpointBackend(std::string base_url, int timeout_seconds = 30);
    FetchOutcome fetch(const std::string& url) override;

private:
    std::string base_url_;
    int timeout_seconds_;
};

/// Plain GET of the URL itself; the response body is used verbatim. Useful
/// against local fixtures or pre-extracted mirrors.
class DirectHttpBackend : public ReaderBackend {
public:
    explicit DirectHttpBackend(int timeout_seconds = 30);
    FetchOutcome fetch(const std::string& url) override;

private:
    int timeout_seconds_;
};

struct FetcherConfig {
    std::string cache_dir;                       // empty disables caching
    std::int64_t ttl_seconds = 7 * 24 * 3600;
    int max_in_flight = 8;
    int per_host_delay_ms = 0;
};

/// URL fetcher with an on-disk outcome cache, bounded concurrency, and a
/// per-host politeness delay. Output order always equals input order.
class Fetcher {
public:
    Fetcher(std::unique_ptr<ReaderBackend> backend, FetcherConfig cfg);

    FetchOutcome fetch_source(const std::string& url);
    std::vector<FetchOutcome> fetch_all(const std::vector<std::string>& urls);

    std::int64_t network_calls() const { return network_calls_.load(); }
    std::int64_t cache_hits() const { return cache_hits_.load(); }

private:
    std::optional<FetchOutcome> cache_get(const std::string& url);
    void cache_put(const FetchOutcome& outcome);
    FetchOutcome fetch_uncached(const std::string& url);
    void wait_host_slot(const std::string& url);

    std::unique_ptr<ReaderBackend> backend_;
    FetcherConfig cfg_;
    std::atomic<std::int64_t> network_calls_{0};
    std::atomic<std::int64_t> cache_hits_{0};
    std::mutex host_mutex_;
    std::map<std::string, std::chrono::steady_clock::time_point> host_next_slot_;
    // Single-flight: concurrent requests for one URL share one fetch.
    std::mutex inflight_mutex_;
    std::map<std::string, std::shared_future<FetchOutcome>> inflight_;
};

}  // namespace deeptrace
