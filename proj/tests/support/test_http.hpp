#pragma once

// Local HTTP fixtures for the judge and fetcher tests. Servers bind an
// ephemeral port on 127.0.0.1 and stop on destruction.

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace testhttp {

class ScopedServer {
public:
    ScopedServer() : server_(std::make_unique<httplib::Server>()) {}

    ~ScopedServer() { stop(); }

    httplib::Server& server() { return *server_; }

    /// Binds and serves on a background thread; returns the base URL.
    std::string start() {
        port_ = server_->bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this]() { server_->listen_after_bind(); });
        server_->wait_until_ready();
        return "http://127.0.0.1:" + std::to_string(port_);
    }

    void stop() {
        if (thread_.joinable()) {
            server_->stop();
            thread_.join();
        }
    }

    int port() const { return port_; }

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

/// Chat-completion endpoint that replays a scripted list of message
/// contents, in order, and counts requests.
class ScriptedJudgeServer {
public:
    explicit ScriptedJudgeServer(std::vector<std::string> replies)
        : replies_(std::move(replies)) {
        srv_.server().Post("/v1/chat/completions",
                           [this](const httplib::Request& req, httplib::Response& res) {
                               handle(req, res);
                           });
    }

    std::string start() { return srv_.start(); }

    int requests() const { return requests_.load(); }
    std::string last_authorization() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return last_authorization_;
    }
    std::string last_prompt() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return last_prompt_;
    }

private:
    void handle(const httplib::Request& req, httplib::Response& res) {
        const int n = requests_.fetch_add(1);
        std::string reply = "{}";
        {
            std::lock_guard<std::mutex> lock(mutex_);
            last_authorization_ = req.get_header_value("Authorization");
            auto body = nlohmann::json::parse(req.body, nullptr, false);
            if (!body.is_discarded() && body.contains("messages"))
                last_prompt_ = body["messages"][0]["content"].get<std::string>();
            if (!replies_.empty())
                reply = replies_[std::min<std::size_t>(static_cast<std::size_t>(n),
                                                       replies_.size() - 1)];
        }
        nlohmann::json out;
        out["choices"] =
            nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", reply}}}}});
        res.set_content(out.dump(), "application/json");
    }

    ScopedServer srv_;
    std::vector<std::string> replies_;
    std::atomic<int> requests_{0};
    mutable std::mutex mutex_;
    std::string last_authorization_;
    std::string last_prompt_;
};

/// Static page host: path -> (status, body), with a request counter. Also
/// answers reader-endpoint style requests ("GET /<absolute-url>") by
/// matching the page path inside the wrapped URL.
class PageServer {
public:
    PageServer() {
        srv_.server().Get(R"(/(.*))", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = pages_.find(req.path);
            if (it == pages_.end()) {
                const std::size_t wrapped = req.path.find("://");
                if (wrapped != std::string::npos) {
                    const std::size_t slash = req.path.find('/', wrapped + 3);
                    if (slash != std::string::npos) it = pages_.find(req.path.substr(slash));
                }
            }
            if (it == pages_.end()) {
                res.status = 404;
                res.set_content("not here", "text/plain");
                return;
            }
            res.status = it->second.first;
            if (!it->second.second.empty())
                res.set_content(it->second.second, "text/plain");
        });
    }

    void add_page(const std::string& path, int status, const std::string& body) {
        std::lock_guard<std::mutex> lock(mutex_);
        pages_[path] = {status, body};
    }

    std::string start() { return srv_.start(); }
    void stop() { srv_.stop(); }
    int requests() const { return requests_.load(); }

private:
    ScopedServer srv_;
    std::map<std::string, std::pair<int, std::string>> pages_;
    std::atomic<int> requests_{0};
    mutable std::mutex mutex_;
};

}  // namespace testhttp
