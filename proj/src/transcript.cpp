#include "deeptrace/transcript.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <limits>

#include "deeptrace/errors.hpp"

namespace deeptrace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

void skip_spaces(const std::string& s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

// Parses the content of one bracket group starting at the '[' at `open`.
// On success returns the position one past ']' and appends the expanded
// indices; returns nullopt when the content is not citation grammar.
std::optional<std::size_t> parse_bracket_group(const std::string& text, std::size_t open,
                                               std::vector<int>& out) {
    std::size_t i = open + 1;
    std::vector<int> parsed;
    bool expect_item = true;
    while (i < text.size()) {
        skip_spaces(text, i);
        if (i >= text.size()) return std::nullopt;
        if (text[i] == ']') {
            if (expect_item) return std::nullopt;  // "[]" or trailing comma
            out.insert(out.end(), parsed.begin(), parsed.end());
            return i + 1;
        }
        if (!expect_item) {
            if (text[i] != ',') return std::nullopt;
            ++i;
            expect_item = true;
            continue;
        }
        if (!is_digit(text[i])) return std::nullopt;
        long first = 0;
        while (i < text.size() && is_digit(text[i])) {
            first = first * 10 + (text[i] - '0');
            if (first > 1000000) return std::nullopt;
            ++i;
        }
        skip_spaces(text, i);
        if (i < text.size() && text[i] == '-') {
            ++i;
            skip_spaces(text, i);
            if (i >= text.size() || !is_digit(text[i])) return std::nullopt;
            long second = 0;
            while (i < text.size() && is_digit(text[i])) {
                second = second * 10 + (text[i] - '0');
                if (second > 1000000) return std::nullopt;
                ++i;
            }
            // Reversed or oversized ranges are prose ("[1-2020]" is a year
            // span, not two thousand citations).
            if (second < first) return std::nullopt;
            if (second - first + 1 > kMaxRangeExpansion) return std::nullopt;
            for (long v = first; v <= second; ++v) parsed.push_back(static_cast<int>(v));
        } else {
            parsed.push_back(static_cast<int>(first));
        }
        expect_item = false;
    }
    return std::nullopt;  // unterminated bracket
}

}  // namespace

std::vector<int> CitationMark::valid_indices(int k) const {
    std::vector<int> out;
    for (int idx : indices)
        if (idx >= 1 && idx <= k) out.push_back(idx);
    return out;
}

std::vector<CitationMark> parse_citation_marks(const std::string& answer_text, int k) {
    std::vector<CitationMark> marks;
    std::size_t i = 0;
    while (i < answer_text.size()) {
        if (answer_text[i] != '[') {
            ++i;
            continue;
        }
        std::vector<int> indices;
        auto end = parse_bracket_group(answer_text, i, indices);
        if (!end) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        std::size_t run_end = *end;
        // Merge directly adjacent groups: "[1][4]" is one mark {1,4}.
        while (run_end < answer_text.size() && answer_text[run_end] == '[') {
            auto next = parse_bracket_group(answer_text, run_end, indices);
            if (!next) break;
            run_end = *next;
        }
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());

        CitationMark mark;
        mark.span = Span{start, run_end};
        mark.dangling =
            std::any_of(indices.begin(), indices.end(), [k](int v) { return v < 1 || v > k; });
        mark.indices = std::move(indices);
        marks.push_back(std::move(mark));
        i = run_end;
    }
    return marks;
}

std::string strip_citation_marks(const std::string& answer_text) {
    // Spans are valid for any K; use the most permissive parse.
    const auto marks = parse_citation_marks(answer_text, std::numeric_limits<int>::max());
    std::string out;
    out.reserve(answer_text.size());
    std::size_t pos = 0;
    for (const CitationMark& m : marks) {
        out.append(answer_text, pos, m.span.begin - pos);
        pos = m.span.end;
    }
    out.append(answer_text, pos, answer_text.size() - pos);
    return out;
}

Transcript parse_transcript(const std::string& content) {
    json obj = json::parse(content, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object())
        throw MalformedTranscript("file is not a JSON object");

    Transcript t;
    try {
        t.query_id = obj.at("query_id").get<std::string>();
        t.engine = obj.at("engine").get<std::string>();
        t.answer_text = obj.at("answer_text").get<std::string>();
        if (obj.contains("captured_at")) t.captured_at = obj["captured_at"].get<std::string>();
        for (const json& src : obj.at("listed_sources")) {
            ListedSource s;
            s.index = src.at("index").get<int>();
            s.url = src.at("url").get<std::string>();
            if (src.contains("title") && src["title"].is_string())
                s.title = src["title"].get<std::string>();
            t.listed_sources.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw MalformedTranscript(e.what());
    }

    if (trim(t.answer_text).empty()) throw MalformedTranscript("empty answer_text");
    if (t.query_id.empty()) throw MalformedTranscript("empty query_id");
    if (t.engine.empty()) throw MalformedTranscript("empty engine");

    // Renumber to listing order, then demand a contiguous 1..K index set.
    std::sort(t.listed_sources.begin(), t.listed_sources.end(),
              [](const ListedSource& a, const ListedSource& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < t.listed_sources.size(); ++i) {
        if (t.listed_sources[i].index != static_cast<int>(i) + 1)
            throw NonContiguousSourceIndices(
                "index " + std::to_string(t.listed_sources[i].index) + " at listing position " +
                std::to_string(i + 1));
    }
    return t;
}

Transcript load_transcript(const std::string& path) {
    try {
        return parse_transcript(read_file(path));
    } catch (const MalformedTranscript& e) {
        throw MalformedTranscript(path + ": " + e.what());
    }
}

std::string serialize_transcript(const Transcript& t) {
    ordered_json obj;
    obj["query_id"] = t.query_id;
    obj["engine"] = t.engine;
    obj["answer_text"] = t.answer_text;
    obj["listed_sources"] = ordered_json::array();
    for (const ListedSource& s : t.listed_sources) {
        ordered_json src;
        src["index"] = s.index;
        src["url"] = s.url;
        if (!s.title.empty()) src["title"] = s.title;
        obj["listed_sources"].push_back(std::move(src));
    }
    obj["captured_at"] = t.captured_at;
    return obj.dump(2) + "\n";
}

}  // namespace deeptrace
