#include "deeptrace/judge.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "deeptrace/errors.hpp"

namespace deeptrace {

using json = nlohmann::json;

const char* support_level_name(SupportLevel level) {
    switch (level) {
        case SupportLevel::Full: return "full";
        case SupportLevel::Partial: return "partial";
        case SupportLevel::None: return "none";
    }
    return "?";
}

SupportLevel parse_support_level(const std::string& s) {
    const std::string lc = to_lower(trim(s));
    if (lc == "full") return SupportLevel::Full;
    if (lc == "partial") return SupportLevel::Partial;
    if (lc == "none") return SupportLevel::None;
    throw Error("unknown support level: \"" + s + "\"");
}

std::optional<json> extract_first_json_object(const std::string& reply) {
    for (std::size_t start = 0; start < reply.size(); ++start) {
        if (reply[start] != '{') continue;
        // Find the matching close brace, honoring strings and escapes.
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < reply.size(); ++i) {
            const char c = reply[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    json parsed = json::parse(reply.substr(start, i - start + 1), nullptr,
                                              /*allow_exceptions=*/false);
                    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
                    break;  // balanced but invalid; try the next '{'
                }
            }
        }
    }
    return std::nullopt;
}

void align_decomposition(const std::string& answer, DecompositionResult& result) {
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < result.sentences.size(); ++i) {
        auto span = find_normalized(answer, result.sentences[i].text, cursor);
        if (!span)
            throw AlignmentError("sentence " + std::to_string(i + 1) +
                                 " not found in answer order: \"" +
                                 result.sentences[i].text.substr(0, 60) + "\"");
        result.sentences[i].span = *span;
        cursor = span->end;
    }
}

std::optional<DecompositionResult> parse_decomposition_response(const json& obj,
                                                                const std::string& answer) {
    if (!obj.contains("sentences") || !obj["sentences"].is_array()) return std::nullopt;
    DecompositionResult result;
    for (const json& item : obj["sentences"]) {
        if (!item.is_object() || !item.contains("sentence") || !item["sentence"].is_string())
            return std::nullopt;
        DecomposedSentence s;
        s.text = item["sentence"].get<std::string>();
        if (trim(s.text).empty()) return std::nullopt;
        if (!item.contains("core")) return std::nullopt;
        const json& core = item["core"];
        if (core.is_boolean()) {
            s.core = core.get<bool>();
        } else if (core.is_number_integer()) {
            s.core = core.get<int>() != 0;
        } else if (core.is_string()) {
            const std::string v = trim(core.get<std::string>());
            if (v != "1" && v != "0") return std::nullopt;
            s.core = v == "1";
        } else {
            return std::nullopt;
        }
        result.sentences.push_back(std::move(s));
    }
    if (result.sentences.empty()) return std::nullopt;
    align_decomposition(answer, result);
    return result;
}

std::optional<int> parse_confidence_response(const json& obj) {
    if (!obj.contains("confidence")) return std::nullopt;
    const json& c = obj["confidence"];
    if (!c.is_string()) return std::nullopt;
    static const std::pair<const char*, int> kLabels[] = {
        {"Strongly Not Confident", 1}, {"Not Confident", 2}, {"Neutral", 3},
        {"Confident", 4},              {"Strongly Confident", 5},
    };
    const std::string label = trim(c.get<std::string>());
    for (const auto& [name, level] : kLabels)
        if (label == name) return level;
    throw UnknownLabel(label);
}

namespace {

std::optional<std::vector<int>> read_index_array(const json& obj, const char* key) {
    if (!obj.contains(key) || !obj[key].is_array()) return std::nullopt;
    std::vector<int> out;
    for (const json& v : obj[key]) {
        if (!v.is_number_integer()) return std::nullopt;
        out.push_back(v.get<int>());
    }
    return out;
}

}  // namespace

std::optional<StanceResult> parse_stance_response(const json& obj) {
    StanceResult stance;
    auto agree = read_index_array(obj, "agree_statements");
    auto disagree = read_index_array(obj, "disagree_statements");
    auto neutral = read_index_array(obj, "neutral_statements");
    if (!agree || !disagree || !neutral) return std::nullopt;
    stance.agree = std::move(*agree);
    stance.disagree = std::move(*disagree);
    stance.neutral = std::move(*neutral);
    return stance;
}

void validate_stance_partition(const StanceResult& stance, int n) {
    std::vector<int> seen(static_cast<std::size_t>(n) + 1, 0);
    auto absorb = [&](const std::vector<int>& xs) {
        for (int x : xs) {
            if (x < 1 || x > n) throw PartitionViolation("index " + std::to_string(x) +
                                                         " outside 1.." + std::to_string(n));
            if (++seen[static_cast<std::size_t>(x)] > 1)
                throw PartitionViolation("index " + std::to_string(x) + " listed twice");
        }
    };
    absorb(stance.agree);
    absorb(stance.disagree);
    absorb(stance.neutral);
    for (int i = 1; i <= n; ++i)
        if (seen[static_cast<std::size_t>(i)] == 0)
            throw PartitionViolation("index " + std::to_string(i) + " missing");
}

std::optional<SupportLevel> parse_support_response(const json& obj) {
    if (!obj.contains("support") || !obj["support"].is_string()) return std::nullopt;
    const std::string v = to_lower(trim(obj["support"].get<std::string>()));
    if (v == "full") return SupportLevel::Full;
    if (v == "partial") return SupportLevel::Partial;
    if (v == "none") return SupportLevel::None;
    return std::nullopt;
}

std::string judge_cache_key(const std::string& task, const std::string& model,
                            const std::vector<std::string>& inputs) {
    std::string blob = task;
    blob.push_back('\x1f');
    blob += model;
    for (const std::string& in : inputs) {
        blob.push_back('\x1f');
        blob += in;
    }
    return sha256_hex(blob);
}

// ---------------------------------------------------------------------------
// HttpJudge
// ---------------------------------------------------------------------------

HttpJudge::HttpJudge(JudgeConfig cfg)
    : cfg_(std::move(cfg)),
      prompts_(cfg_.prompt_dir.empty() ? PromptLibrary::builtin()
                                       : PromptLibrary::from_dir(cfg_.prompt_dir)) {
    if (cfg_.endpoint.empty()) throw Error("judge endpoint not configured");
}

std::string HttpJudge::complete(const std::string& prompt, int* attempts_left) const {
    auto url = parse_url(cfg_.endpoint);
    if (!url) throw JudgeProtocolError("bad endpoint URL: " + cfg_.endpoint);
    std::string path = url->path;
    if (path.empty() || path == "/") path = "/v1/chat/completions";

    json body;
    body["model"] = cfg_.model_name;
    body["temperature"] = cfg_.temperature;
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});

    std::string last_error;
    int backoff_ms = cfg_.retry_backoff_ms;
    while (*attempts_left > 0) {
        --*attempts_left;
        httplib::Client client(url->origin());
        client.set_connection_timeout(cfg_.timeout_seconds, 0);
        client.set_read_timeout(cfg_.timeout_seconds, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key != nullptr && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);

        ++network_calls_;
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
        } else if (res->status < 200 || res->status >= 300) {
            last_error = "http status " + std::to_string(res->status);
        } else {
            json reply = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
            if (!reply.is_discarded() && reply.contains("choices") &&
                reply["choices"].is_array() && !reply["choices"].empty() &&
                reply["choices"][0].contains("message") &&
                reply["choices"][0]["message"].contains("content") &&
                reply["choices"][0]["message"]["content"].is_string()) {
                return reply["choices"][0]["message"]["content"].get<std::string>();
            }
            last_error = "reply is not a chat completion";
        }
        if (*attempts_left > 0 && backoff_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
    }
    throw JudgeProtocolError(last_error);
}

std::optional<json> HttpJudge::cache_get(const std::string& key) {
    if (cfg_.cache_dir.empty()) return std::nullopt;
    const std::filesystem::path p = std::filesystem::path(cfg_.cache_dir) / (key + ".json");
    if (!std::filesystem::exists(p)) return std::nullopt;
    json obj = json::parse(read_file(p.string()), nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded()) return std::nullopt;
    ++cache_hits_;
    return obj;
}

void HttpJudge::cache_put(const std::string& key, const json& value) const {
    if (cfg_.cache_dir.empty()) return;
    const std::filesystem::path p = std::filesystem::path(cfg_.cache_dir) / (key + ".json");
    atomic_write_file(p.string(), value.dump(2) + "\n");
}

DecompositionResult HttpJudge::decompose_answer(const std::string& query,
                                                const std::string& answer) {
    if (trim(answer).empty()) throw Error("cannot decompose an empty answer");
    const std::string key = judge_cache_key("decompose", cfg_.model_name, {query, answer});
    if (auto hit = cache_get(key)) {
        if (auto parsed = parse_decomposition_response(*hit, answer)) return *parsed;
    }
    const std::string prompt =
        prompts_.render("decompose", {{"QUESTION", query}, {"ANSWER", answer}});
    int attempts = 1 + std::max(0, cfg_.max_retries);
    while (true) {
        const std::string content = complete(prompt, &attempts);
        auto obj = extract_first_json_object(content);
        if (obj) {
            if (auto parsed = parse_decomposition_response(*obj, answer)) {
                json cached;
                cached["sentences"] = json::array();
                for (const auto& s : parsed->sentences)
                    cached["sentences"].push_back(json{{"sentence", s.text}, {"core", s.core}});
                cache_put(key, cached);
                return *parsed;
            }
        }
        if (attempts <= 0) throw JudgeProtocolError("malformed decomposition response");
    }
}

ConfidenceScore HttpJudge::score_confidence(const std::string& query,
                                            const std::string& answer) {
    const std::string key = judge_cache_key("confidence", cfg_.model_name, {query, answer});
    if (auto hit = cache_get(key)) {
        if (auto level = parse_confidence_response(*hit)) return ConfidenceScore{*level};
    }
    const std::string prompt =
        prompts_.render("confidence", {{"QUERY", query}, {"ANSWER", answer}});
    int attempts = 1 + std::max(0, cfg_.max_retries);
    while (true) {
        const std::string content = complete(prompt, &attempts);
        auto obj = extract_first_json_object(content);
        if (obj) {
            if (auto level = parse_confidence_response(*obj)) {
                cache_put(key, *obj);
                return ConfidenceScore{*level};
            }
        }
        if (attempts <= 0) throw JudgeProtocolError("malformed confidence response");
    }
}

StanceResult HttpJudge::classify_stance(const std::string& query,
                                        const std::vector<std::string>& statements) {
    if (statements.empty()) throw Error("stance classification needs at least one statement");
    const int n = static_cast<int>(statements.size());
    std::vector<std::string> key_inputs = {query};
    key_inputs.insert(key_inputs.end(), statements.begin(), statements.end());
    const std::string key = judge_cache_key("stance", cfg_.model_name, key_inputs);
    if (auto hit = cache_get(key)) {
        if (auto stance = parse_stance_response(*hit)) {
            validate_stance_partition(*stance, n);
            return *stance;
        }
    }

    const std::string block = render_statements_block(statements);
    const std::string prompt =
        prompts_.render("stance", {{"QUERY", query}, {"STATEMENTS", block}});
    // A partition violation earns exactly one corrective reprompt.
    const std::string corrective =
        prompt +
        "\nYour previous response did not include each statement number in exactly one "
        "list. Re-answer with a strict partition of 1.." +
        std::to_string(n) + ".\n";

    int attempts = 1 + std::max(0, cfg_.max_retries);
    bool reprompted = false;
    while (true) {
        const std::string content = complete(reprompted ? corrective : prompt, &attempts);
        auto obj = extract_first_json_object(content);
        if (obj) {
            if (auto stance = parse_stance_response(*obj)) {
                try {
                    validate_stance_partition(*stance, n);
                } catch (const PartitionViolation&) {
                    if (reprompted) throw;
                    reprompted = true;
                    if (attempts <= 0) throw;
                    continue;
                }
                cache_put(key, *obj);
                return *stance;
            }
        }
        if (attempts <= 0) throw JudgeProtocolError("malformed stance response");
    }
}

SupportVerdict HttpJudge::judge_support(const std::string& source_text,
                                        const std::string& statement) {
    if (source_text.empty()) throw Error("support judging requires non-empty source text");
    std::string doc = source_text;
    if (static_cast<int>(doc.size()) > cfg_.max_source_chars)
        doc.resize(static_cast<std::size_t>(cfg_.max_source_chars));

    // Keyed by the full source text so truncation-budget changes can't serve
    // stale verdicts.
    const std::string key = judge_cache_key("support", cfg_.model_name,
                                            {source_text, statement});
    if (auto hit = cache_get(key)) {
        if (auto level = parse_support_response(*hit)) return SupportVerdict{*level};
    }
    const std::string prompt =
        prompts_.render("support", {{"DOCUMENT", doc}, {"STATEMENT", statement}});
    int attempts = 1 + std::max(0, cfg_.max_retries);
    while (true) {
        const std::string content = complete(prompt, &attempts);
        auto obj = extract_first_json_object(content);
        if (obj) {
            if (auto level = parse_support_response(*obj)) {
                cache_put(key, *obj);
                return SupportVerdict{*level};
            }
        }
        if (attempts <= 0) throw JudgeProtocolError("malformed support response");
    }
}

}  // namespace deeptrace
