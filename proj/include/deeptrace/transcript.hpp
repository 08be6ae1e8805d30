#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deeptrace/util.hpp"

namespace deeptrace {

struct ListedSource {
    int index = 0;  // 1-based listing position
    std::string url;
    std::string title;  // optional, empty when absent
};

/// One captured (query, engine) response: answer text with inline citation
/// markers plus the roster of listed sources.
struct Transcript {
    std::string query_id;
    std::string engine;
    std::string answer_text;
    std::vector<ListedSource> listed_sources;  // sorted by index, 1..K contiguous
    std::string captured_at;                   // opaque timestamp string

    int source_count() const { return static_cast<int>(listed_sources.size()); }
};

/// One recognized citation marker run, e.g. "[1,4]" or "[2][3]".
struct CitationMark {
    Span span;                 // character range covering the whole run
    std::vector<int> indices;  // every parsed index, sorted, deduplicated
    bool dangling = false;     // true iff any index is outside 1..K

    /// Indices within 1..K (the ones eligible for the citation matrix).
    std::vector<int> valid_indices(int k) const;
};

Transcript load_transcript(const std::string& path);
Transcript parse_transcript(const std::string& content);
std::string serialize_transcript(const Transcript& t);

/// Recognizes bracketed numeric markers: `[n]`, `[n,m]` (optional spaces),
/// inclusive ranges `[n-m]`, and directly adjacent runs `[n][m]` which merge
/// into a single mark. Bracket content outside the grammar is prose. Ranges
/// expanding to more than `kMaxRangeExpansion` indices are treated as prose.
std::vector<CitationMark> parse_citation_marks(const std::string& answer_text, int k);

/// Removes every recognized marker from the text (diagnostics helper; also
/// underpins the parse-after-strip idempotence property).
std::string strip_citation_marks(const std::string& answer_text);

inline constexpr int kMaxRangeExpansion = 50;

}  // namespace deeptrace
