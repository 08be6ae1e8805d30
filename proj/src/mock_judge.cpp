#include <algorithm>
#include <cctype>

#include "deeptrace/errors.hpp"
#include "deeptrace/judge.hpp"
#include "deeptrace/transcript.hpp"

namespace deeptrace {

using json = nlohmann::json;

namespace {

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

const std::vector<std::string>& filler_openers() {
    static const std::vector<std::string> v = {
        "great question",  "that's a great", "thats a great", "sure,",
        "sure!",           "of course",      "i hope",         "hope this helps",
        "let me know",     "in conclusion",  "in summary",     "to summarize",
        "feel free",       "as an ai",       "happy to help",  "thanks for asking",
    };
    return v;
}

const std::vector<std::string>& strong_confidence_cues() {
    static const std::vector<std::string> v = {
        "definitely", "certainly", "undoubtedly", "without a doubt",
        "clearly",    "unquestionably",
    };
    return v;
}

const std::vector<std::string>& hedged_confidence_cues() {
    static const std::vector<std::string> v = {
        "might", "may be", "maybe", "perhaps", "possibly", "uncertain",
        "unclear", "it depends", "hard to say", "evidence is mixed",
    };
    return v;
}

const std::vector<std::string>& disagree_cues() {
    static const std::vector<std::string> v = {
        "however",  "critics",  "opponents", "on the other hand",
        "counters", "against this", "downside", "objection",
    };
    return v;
}

const std::vector<std::string>& agree_cues() {
    static const std::vector<std::string> v = {
        "supporters", "proponents", "benefit", "advantage", "in favor",
        "advocates",  "strengthens",
    };
    return v;
}

bool contains_any(const std::string& haystack, const std::vector<std::string>& needles) {
    for (const std::string& n : needles)
        if (haystack.find(n) != std::string::npos) return true;
    return false;
}

// Lowercased, markers stripped, punctuation folded to spaces: containment
// then tolerates "[1]." style marker placements.
std::string normalized_for_matching(const std::string& s) {
    std::string cleaned = strip_citation_marks(s);
    for (char& c : cleaned)
        if (std::isalnum(static_cast<unsigned char>(c)) == 0) c = ' ';
    return to_lower(collapse_whitespace(cleaned));
}

std::vector<std::string> content_tokens(const std::string& s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            if (cur.size() >= 4) tokens.push_back(cur);
            cur.clear();
        }
    }
    if (cur.size() >= 4) tokens.push_back(cur);
    return tokens;
}

bool heuristic_core(const std::string& sentence) {
    const std::string lc = to_lower(trim(strip_citation_marks(sentence)));
    if (lc.empty()) return false;
    if (!std::any_of(lc.begin(), lc.end(),
                     [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }))
        return false;
    for (const std::string& opener : filler_openers())
        if (lc.rfind(opener, 0) == 0) return false;
    return true;
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            const std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
            continue;
        }
        cur.push_back(c);
        if (is_terminator(c)) {
            // Swallow a run of terminators ("..." / "?!").
            while (i + 1 < text.size() && is_terminator(text[i + 1])) cur.push_back(text[++i]);
            if (i + 1 >= text.size() ||
                std::isspace(static_cast<unsigned char>(text[i + 1])) != 0) {
                const std::string t = trim(cur);
                if (!t.empty()) out.push_back(t);
                cur.clear();
            }
        }
    }
    const std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
}

MockJudge::MockJudge() : MockJudge(JudgeConfig{}) {}

MockJudge::MockJudge(JudgeConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.model_name = "mock";
}

MockJudge MockJudge::from_fixture_file(const std::string& path) {
    json fixture = json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
    if (fixture.is_discarded() || !fixture.is_object())
        throw Error("mock judge fixture is not a JSON object: " + path);
    return from_fixture_json(fixture);
}

MockJudge MockJudge::from_fixture_json(const json& fixture) {
    MockJudge judge;
    auto entries = [&](const char* task) {
        return fixture.contains(task) && fixture[task].is_array() ? fixture[task]
                                                                  : json::array();
    };
    for (const json& e : entries("decompose"))
        judge.add_canned("decompose",
                         {e.at("query").get<std::string>(), e.at("answer").get<std::string>()},
                         e.at("response"));
    for (const json& e : entries("confidence"))
        judge.add_canned("confidence",
                         {e.at("query").get<std::string>(), e.at("answer").get<std::string>()},
                         e.at("response"));
    for (const json& e : entries("stance")) {
        std::vector<std::string> inputs = {e.at("query").get<std::string>()};
        for (const json& s : e.at("statements")) inputs.push_back(s.get<std::string>());
        judge.add_canned("stance", inputs, e.at("response"));
    }
    for (const json& e : entries("support"))
        judge.add_canned("support",
                         {e.at("source_text").get<std::string>(),
                          e.at("statement").get<std::string>()},
                         e.at("response"));
    return judge;
}

void MockJudge::add_canned(const std::string& task, const std::vector<std::string>& inputs,
                           json response) {
    canned_[judge_cache_key(task, cfg_.model_name, inputs)] = std::move(response);
}

std::optional<json> MockJudge::canned(const std::string& task,
                                      const std::vector<std::string>& inputs) const {
    auto it = canned_.find(judge_cache_key(task, cfg_.model_name, inputs));
    if (it == canned_.end()) return std::nullopt;
    std::optional<json> out;
    out.emplace(it->second);
    return out;
}

DecompositionResult MockJudge::decompose_answer(const std::string& query,
                                                const std::string& answer) {
    if (trim(answer).empty()) throw Error("cannot decompose an empty answer");
    if (auto response = canned("decompose", {query, answer})) {
        auto parsed = parse_decomposition_response(*response, answer);
        if (!parsed) throw JudgeProtocolError("malformed canned decomposition");
        return *parsed;
    }
    DecompositionResult result;
    for (const std::string& sentence : split_sentences(answer))
        result.sentences.push_back(DecomposedSentence{sentence, heuristic_core(sentence), {}});
    align_decomposition(answer, result);
    return result;
}

ConfidenceScore MockJudge::score_confidence(const std::string& query,
                                            const std::string& answer) {
    if (auto response = canned("confidence", {query, answer})) {
        auto level = parse_confidence_response(*response);
        if (!level) throw JudgeProtocolError("malformed canned confidence");
        return ConfidenceScore{*level};
    }
    const std::string lc = to_lower(answer);
    if (contains_any(lc, strong_confidence_cues())) return ConfidenceScore{5};
    if (contains_any(lc, hedged_confidence_cues())) return ConfidenceScore{2};
    return ConfidenceScore{3};
}

StanceResult MockJudge::classify_stance(const std::string& query,
                                        const std::vector<std::string>& statements) {
    if (statements.empty()) throw Error("stance classification needs at least one statement");
    const int n = static_cast<int>(statements.size());
    std::vector<std::string> inputs = {query};
    inputs.insert(inputs.end(), statements.begin(), statements.end());
    if (auto response = canned("stance", inputs)) {
        auto stance = parse_stance_response(*response);
        if (!stance) throw JudgeProtocolError("malformed canned stance");
        validate_stance_partition(*stance, n);
        return *stance;
    }
    StanceResult stance;
    for (int i = 1; i <= n; ++i) {
        const std::string lc = to_lower(statements[static_cast<std::size_t>(i - 1)]);
        if (contains_any(lc, disagree_cues()))
            stance.disagree.push_back(i);
        else if (contains_any(lc, agree_cues()))
            stance.agree.push_back(i);
        else
            stance.neutral.push_back(i);
    }
    return stance;
}

SupportVerdict MockJudge::judge_support(const std::string& source_text,
                                        const std::string& statement) {
    if (source_text.empty()) throw Error("support judging requires non-empty source text");
    if (auto response = canned("support", {source_text, statement})) {
        auto level = parse_support_response(*response);
        if (!level) throw JudgeProtocolError("malformed canned support verdict");
        return SupportVerdict{*level};
    }
    const std::string doc = normalized_for_matching(source_text);
    const std::string stmt = normalized_for_matching(statement);
    if (!stmt.empty() && doc.find(stmt) != std::string::npos)
        return SupportVerdict{SupportLevel::Full};
    const std::vector<std::string> tokens = content_tokens(stmt);
    if (tokens.empty()) return SupportVerdict{SupportLevel::None};
    std::size_t hits = 0;
    for (const std::string& t : tokens)
        if (doc.find(t) != std::string::npos) ++hits;
    if (hits * 2 >= tokens.size()) return SupportVerdict{SupportLevel::Partial};
    return SupportVerdict{SupportLevel::None};
}

}  // namespace deeptrace
