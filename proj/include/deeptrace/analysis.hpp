#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deeptrace/corpus.hpp"
#include "deeptrace/fetcher.hpp"
#include "deeptrace/judge.hpp"
#include "deeptrace/matrix.hpp"
#include "deeptrace/metrics.hpp"
#include "deeptrace/transcript.hpp"

namespace deeptrace {

const char* stance_name(StanceLabel s);
StanceLabel parse_stance_label(const std::string& s);

/// One answer sentence. Relevant statements carry a 1-based index in answer
/// order; irrelevant ones keep index 0 and never enter the matrices. The
/// stance label exists only for relevant statements of debate queries.
struct Statement {
    int index = 0;
    std::string text;
    bool relevant = false;
    std::optional<StanceLabel> stance;
    Span span;
};

struct SourceInfo {
    int index = 0;  // 1-based listing position
    std::string url;
    std::string title;
    bool accessible = false;
    FetchStatus status = FetchStatus::ExtractionError;
};

struct AnalysisDiagnostics {
    int dangling_marks = 0;        // marks with any out-of-range index
    int marks_on_irrelevant = 0;   // marks attached to non-relevant statements
    std::vector<int> marks_per_statement;  // over all statements, answer order
};

/// How ternary support verdicts collapse into the binary support matrix.
enum class PartialSupportPolicy {
    Ignore,  // partial counts as not supported (strict, the default)
    Count,   // partial counts as supported
};

const char* partial_policy_name(PartialSupportPolicy p);
PartialSupportPolicy parse_partial_policy(const std::string& s);

/// Everything derived from one (query, engine) transcript: statements,
/// sources with accessibility, and the citation/support matrices. Serialized
/// to JSON, this is the metric engine's sole input.
struct AuditRecord {
    Query query;
    std::string engine;
    std::string captured_at;
    std::vector<Statement> statements;   // all statements, answer order
    std::vector<SourceInfo> sources;     // all K listed sources
    std::optional<int> confidence;       // debate queries only
    BinaryMatrix citation;               // relevant statements x K
    BinaryMatrix support;                // relevant statements x accessible
    std::vector<int> support_columns;    // listing index (1-based) per support column
    AnalysisDiagnostics diagnostics;

    int n_total_statements() const { return static_cast<int>(statements.size()); }
    int n_relevant() const;
    std::vector<std::string> relevant_texts() const;
    std::vector<StanceLabel> relevant_stances() const;
};

/// Merges the decomposition with an optional stance partition. Relevant
/// statements get indices 1..N; a stance partition must cover exactly those N.
std::vector<Statement> build_statements(const DecompositionResult& decomp,
                                        const std::optional<StanceResult>& stance);

/// Cell (i, j) = 1 iff relevant statement i carries a mark containing source
/// j. A mark belongs to the statement whose span contains its position; a
/// mark trailing a sentence attaches to the preceding statement. Dangling
/// indices and marks on irrelevant statements are excluded and counted.
BinaryMatrix build_citation_matrix(const std::vector<Statement>& statements,
                                   const std::vector<CitationMark>& marks, int k,
                                   AnalysisDiagnostics* diagnostics = nullptr);

/// One judge_support call per (relevant statement, accessible source) pair,
/// run concurrently up to the judge's in-flight limit. `outcomes` must align
/// with the listed sources. Fills `support_columns_out` with the 1-based
/// listing index of each support column.
BinaryMatrix build_support_matrix(const std::vector<Statement>& statements,
                                  const std::vector<FetchOutcome>& outcomes, Judge& judge,
                                  PartialSupportPolicy policy,
                                  std::vector<int>* support_columns_out);

struct AnalyzeOptions {
    PartialSupportPolicy partial_policy = PartialSupportPolicy::Ignore;
};

/// Full per-record pipeline: decompose, stance/confidence for debate
/// queries, fetch sources, build both matrices.
AuditRecord analyze_transcript(const Query& query, const Transcript& transcript, Judge& judge,
                               Fetcher& fetcher, const AnalyzeOptions& options = {});

std::string audit_record_to_json(const AuditRecord& record);
AuditRecord audit_record_from_json(const std::string& content);
void save_audit_record(const AuditRecord& record, const std::string& path);
AuditRecord load_audit_record(const std::string& path);

}  // namespace deeptrace
