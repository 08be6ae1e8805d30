#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deeptrace/prompts.hpp"
#include "deeptrace/util.hpp"

namespace deeptrace {

struct JudgeConfig {
    std::string endpoint;  // chat-completion base URL, e.g. http://host:port
    std::string model_name = "gpt-5";
    double temperature = 0.0;
    int max_retries = 2;       // additional attempts after the first
    std::string cache_dir;     // empty disables the on-disk verdict cache
    std::string prompt_dir;    // empty uses the built-in templates
    std::string api_key_env = "DEEPTRACE_JUDGE_KEY";
    int max_source_chars = 60000;  // document truncation budget (from the head)
    int max_in_flight = 4;         // concurrent judge calls
    int retry_backoff_ms = 250;    // doubled per retry
    int timeout_seconds = 60;
};

struct DecomposedSentence {
    std::string text;
    bool core = false;
    Span span;  // location in the original answer text
};

/// Answer split into sentences, each flagged core (query-relevant) or filler.
/// Sentences are verbatim substrings of the answer modulo whitespace runs,
/// in answer order, non-overlapping; spans are filled during validation.
struct DecompositionResult {
    std::vector<DecomposedSentence> sentences;

    int core_count() const {
        int n = 0;
        for (const auto& s : sentences) n += s.core ? 1 : 0;
        return n;
    }
};

/// Likert answer-confidence level, 1 (Strongly Not Confident) .. 5 (Strongly
/// Confident).
struct ConfidenceScore {
    int level = 3;
};

/// Statement indices (1-based) partitioned by stance toward the query.
struct StanceResult {
    std::vector<int> agree;
    std::vector<int> disagree;
    std::vector<int> neutral;
};

enum class SupportLevel { Full, Partial, None };

struct SupportVerdict {
    SupportLevel level = SupportLevel::None;
};

const char* support_level_name(SupportLevel level);
SupportLevel parse_support_level(const std::string& s);

/// The four judge tasks behind one interface so a deterministic mock can
/// stand in for the HTTP client.
class Judge {
public:
    virtual ~Judge() = default;

    virtual DecompositionResult decompose_answer(const std::string& query,
                                                 const std::string& answer) = 0;
    virtual ConfidenceScore score_confidence(const std::string& query,
                                             const std::string& answer) = 0;
    virtual StanceResult classify_stance(const std::string& query,
                                         const std::vector<std::string>& statements) = 0;
    virtual SupportVerdict judge_support(const std::string& source_text,
                                         const std::string& statement) = 0;

    virtual const JudgeConfig& config() const = 0;
    virtual std::int64_t network_calls() const { return 0; }
    virtual std::int64_t cache_hits() const { return 0; }
};

// -- response interpretation (shared by the HTTP judge, the mock, and tests) --

/// Extracts the first syntactically valid JSON object from a judge reply,
/// tolerating markdown code fences and surrounding prose.
std::optional<nlohmann::json> extract_first_json_object(const std::string& reply);

/// Locates each sentence in the answer (in order, non-overlapping,
/// whitespace-insensitive) and fills the spans. Throws AlignmentError when
/// the judge altered or reordered text.
void align_decomposition(const std::string& answer, DecompositionResult& result);

/// nullopt on shape errors (malformed response -> retry); AlignmentError on
/// altered text.
std::optional<DecompositionResult> parse_decomposition_response(const nlohmann::json& obj,
                                                                const std::string& answer);

/// nullopt on shape errors; UnknownLabel for a string outside the scheme.
std::optional<int> parse_confidence_response(const nlohmann::json& obj);

std::optional<StanceResult> parse_stance_response(const nlohmann::json& obj);

/// Throws PartitionViolation unless the three sets partition 1..n exactly.
void validate_stance_partition(const StanceResult& stance, int n);

std::optional<SupportLevel> parse_support_response(const nlohmann::json& obj);

/// Cache/fixture key for a judge task over its exact inputs.
std::string judge_cache_key(const std::string& task, const std::string& model,
                            const std::vector<std::string>& inputs);

/// LLM judge speaking a chat-completions protocol, with bounded retries,
/// exponential backoff, and an on-disk result cache.
class HttpJudge : public Judge {
public:
    explicit HttpJudge(JudgeConfig cfg);

    DecompositionResult decompose_answer(const std::string& query,
                                         const std::string& answer) override;
    ConfidenceScore score_confidence(const std::string& query,
                                     const std::string& answer) override;
    StanceResult classify_stance(const std::string& query,
                                 const std::vector<std::string>& statements) override;
    SupportVerdict judge_support(const std::string& source_text,
                                 const std::string& statement) override;

    const JudgeConfig& config() const override { return cfg_; }
    std::int64_t network_calls() const override { return network_calls_.load(); }
    std::int64_t cache_hits() const override { return cache_hits_.load(); }

private:
    std::string complete(const std::string& prompt, int* attempts_left) const;
    std::optional<nlohmann::json> cache_get(const std::string& key);
    void cache_put(const std::string& key, const nlohmann::json& value) const;

    JudgeConfig cfg_;
    PromptLibrary prompts_;
    mutable std::atomic<std::int64_t> network_calls_{0};
    mutable std::atomic<std::int64_t> cache_hits_{0};
};

/// Deterministic judge for tests and offline runs: canned responses for
/// exact inputs, keyword heuristics otherwise. Pure, so the whole pipeline
/// becomes a function of its inputs.
class MockJudge : public Judge {
public:
    MockJudge();
    explicit MockJudge(JudgeConfig cfg);

    /// Fixture layout: {"decompose":[{"query","answer","response"}],
    /// "confidence":[...], "stance":[{"query","statements","response"}],
    /// "support":[{"source_text","statement","response"}]}. Responses go
    /// through the same parsing/validation as live judge replies.
    static MockJudge from_fixture_file(const std::string& path);
    static MockJudge from_fixture_json(const nlohmann::json& fixture);

    void add_canned(const std::string& task, const std::vector<std::string>& inputs,
                    nlohmann::json response);

    DecompositionResult decompose_answer(const std::string& query,
                                         const std::string& answer) override;
    ConfidenceScore score_confidence(const std::string& query,
                                     const std::string& answer) override;
    StanceResult classify_stance(const std::string& query,
                                 const std::vector<std::string>& statements) override;
    SupportVerdict judge_support(const std::string& source_text,
                                 const std::string& statement) override;

    const JudgeConfig& config() const override { return cfg_; }

private:
    std::optional<nlohmann::json> canned(const std::string& task,
                                         const std::vector<std::string>& inputs) const;

    JudgeConfig cfg_;
    std::map<std::string, nlohmann::json> canned_;
};

/// Deterministic sentence splitter used by the mock judge's heuristics.
std::vector<std::string> split_sentences(const std::string& text);

}  // namespace deeptrace
