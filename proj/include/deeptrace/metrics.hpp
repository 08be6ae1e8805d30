#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deeptrace/matrix.hpp"
#include "deeptrace/rational.hpp"

namespace deeptrace {

enum class MetricName {
    OneSidedAnswer,
    OverconfidentAnswer,
    RelevantStatements,
    UncitedSources,
    UnsupportedStatements,
    SourceNecessity,
    CitationAccuracy,
    CitationThoroughness,
};

inline constexpr std::array<MetricName, 8> kAllMetrics = {
    MetricName::OneSidedAnswer,       MetricName::OverconfidentAnswer,
    MetricName::RelevantStatements,   MetricName::UncitedSources,
    MetricName::UnsupportedStatements, MetricName::SourceNecessity,
    MetricName::CitationAccuracy,     MetricName::CitationThoroughness,
};

const char* metric_key(MetricName m);
const char* metric_title(MetricName m);
MetricName parse_metric_key(const std::string& key);
bool metric_is_binary(MetricName m);
bool metric_is_debate_only(MetricName m);

/// One computed metric. Ratio metrics carry an exact rational in [0,1];
/// binary metrics carry 0 or 1. `defined == false` means the denominator
/// vanished (or a debate-only metric on an expertise query) and the value
/// must be excluded from aggregation.
struct MetricValue {
    MetricName name = MetricName::OneSidedAnswer;
    bool defined = false;
    Rational value;

    static MetricValue undefined(MetricName n) { return MetricValue{n, false, Rational()}; }
    static MetricValue of(MetricName n, Rational v) { return MetricValue{n, true, v}; }
    static MetricValue of_bool(MetricName n, bool v) {
        return MetricValue{n, true, Rational(v ? 1 : 0)};
    }
};

enum class StanceLabel { Pro, Con, Neutral };

/// Minimum source set covering every supported statement, with the maximum
/// bipartite matching reported alongside. The matching equals the literal
/// minimum vertex cover of the support graph (König), so either reading of
/// "necessary sources" can be recovered from the result.
struct NecessityResult {
    std::vector<int> necessary_sources;  // 1-based column positions, ascending
    int cover_size = 0;
    int matching_size = 0;
    bool approximate = false;  // greedy fallback was used
};

struct NecessityOptions {
    std::int64_t node_budget = 1000000;
    bool allow_greedy_fallback = true;
};

// -- the eight metric computations ------------------------------------------

/// True (one-sided) unless pro and con statements are both present.
bool one_sided(const std::vector<StanceLabel>& stances);

/// True iff the answer is one-sided and confidence is exactly 5.
bool overconfident(bool is_one_sided, int confidence);

MetricValue relevant_ratio(int n_relevant, int n_total);

/// Fraction of all-zero citation columns over K listed sources.
MetricValue uncited_sources_ratio(const BinaryMatrix& citation, int k);

/// Fraction of relevant statements with an all-zero support row.
MetricValue unsupported_ratio(const BinaryMatrix& support, int n_relevant);

/// Minimum hitting set over supported statements plus Hopcroft-Karp matching;
/// the ratio divides the cover size by all K listed sources. Ties break
/// toward the lexicographically smallest column set.
std::pair<NecessityResult, MetricValue> source_necessity(
    const BinaryMatrix& support, int k_listed, const NecessityOptions& opts = {});

/// sum(citation ⊙ support) / sum(citation), both restricted to accessible
/// columns; `support_columns` maps support column -> citation column (0-based).
MetricValue citation_accuracy(const BinaryMatrix& citation, const BinaryMatrix& support,
                              const std::vector<int>& support_columns);

/// Same numerator over sum(support).
MetricValue citation_thoroughness(const BinaryMatrix& citation, const BinaryMatrix& support,
                                  const std::vector<int>& support_columns);

// -- solvers exposed for direct use and oracle testing -----------------------

/// Maximum bipartite matching via Hopcroft-Karp; rows on the left, columns on
/// the right, edges where the matrix is 1.
int hopcroft_karp_matching(const BinaryMatrix& m);

// -- record-level metric engine ----------------------------------------------

struct AuditRecord;  // analysis.hpp

/// All eight metrics for one record, plus the counts the scorecard needs.
struct RecordMetrics {
    std::string query_id;
    std::string engine;
    bool debate = false;
    std::array<MetricValue, 8> values{};
    NecessityResult necessity;  // necessary_sources hold 1-based listing indices
    int n_statements = 0;
    int n_relevant = 0;
    int n_sources = 0;
    std::int64_t n_citations = 0;
    std::optional<int> confidence;

    const MetricValue& get(MetricName name) const;
    MetricValue& get(MetricName name);
};

/// Computes every metric from a serialized-record-equivalent AuditRecord;
/// pure, judge-free.
RecordMetrics compute_record_metrics(const AuditRecord& record,
                                     const NecessityOptions& opts = {});

std::string record_metrics_to_json(const RecordMetrics& metrics);
RecordMetrics record_metrics_from_json(const std::string& content);

}  // namespace deeptrace
