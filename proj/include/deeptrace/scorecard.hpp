#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "deeptrace/analysis.hpp"
#include "deeptrace/corpus.hpp"
#include "deeptrace/metrics.hpp"

namespace deeptrace {

enum class Classification { Acceptable, Borderline, Problematic };

const char* classification_name(Classification c);
Classification parse_classification(const std::string& s);

/// Half-open percent interval [lo, hi).
struct ThresholdBand {
    double lo = 0;
    double hi = 0;
};

struct MetricThresholds {
    ThresholdBand acceptable;
    ThresholdBand borderline;
    ThresholdBand problematic;
};

/// Per-metric classification bands. The three bands of each metric must
/// partition [0, 100) exactly; 100 clamps into whichever band is closed by
/// the top boundary.
class ThresholdTable {
public:
    static ThresholdTable defaults();
    /// JSON override: {"<metric_key>": {"acceptable": [lo,hi],
    /// "borderline": [lo,hi], "problematic": [lo,hi]}, ...}. Metrics absent
    /// from the file keep their default bands.
    static ThresholdTable from_file(const std::string& path);

    const MetricThresholds& for_metric(MetricName m) const;
    void set(MetricName m, MetricThresholds t);

private:
    void validate() const;
    std::array<std::optional<MetricThresholds>, 8> bands_;
};

Classification classify(double value_percent, MetricName metric, const ThresholdTable& table);

struct MetricAggregate {
    bool defined = false;
    double mean_percent = 0.0;
    std::string mean_exact;  // exact "p/q" of the mean ratio (not percent)
    Classification classification = Classification::Problematic;
    int n_defined = 0;
};

struct BasicStats {
    double mean_sources = 0.0;
    double mean_statements = 0.0;
    double mean_citations_per_statement = 0.0;
};

/// Per-engine aggregate: macro-averaged metric percentages with threshold
/// classifications, plus basic statistics and the confidence histogram.
struct Scorecard {
    std::string engine;
    int n_queries = 0;
    int n_debate = 0;
    std::array<MetricAggregate, 8> per_metric{};
    BasicStats basic_stats;
    std::array<int, 5> confidence_histogram{};  // levels 1..5, debate queries

    const MetricAggregate& get(MetricName name) const;
    MetricAggregate& get(MetricName name);
};

/// Macro-aggregation: binary metrics as the proportion of defined debate
/// records, ratio metrics as the exact arithmetic mean of defined per-query
/// values; undefined values are excluded and n_defined records the count.
Scorecard aggregate(const std::vector<RecordMetrics>& records, const std::string& engine,
                    const ThresholdTable& table = ThresholdTable::defaults());

std::string scorecard_to_json(const Scorecard& card);
Scorecard scorecard_from_json(const std::string& content);

enum class ReportFormat { Json, Markdown };

/// Deterministic multi-engine report; engines appear as columns sorted by
/// name. Markdown mirrors the grouped Answer/Sources/Citation layout.
std::string render_report(std::vector<Scorecard> cards, ReportFormat format);

struct AuditOptions {
    PartialSupportPolicy partial_policy = PartialSupportPolicy::Ignore;
    bool strict = false;       // abort on the first record failure
    int record_threads = 2;
    NecessityOptions necessity;
    ThresholdTable thresholds = ThresholdTable::defaults();
    std::string thresholds_origin = "default";  // for the manifest
};

struct RunSummary {
    int ok = 0;
    int skipped = 0;
    int failed = 0;
    std::vector<std::string> engines;
};

/// End-to-end audit: one record per (query, transcript) pair found in
/// `transcripts_dir` (files named <query_id>__<engine>.json), per-engine
/// scorecards, a markdown report, and a run manifest, all written atomically
/// under `out_dir`. Per-record failures are recorded, not fatal, unless
/// `strict`.
RunSummary run_audit(const Corpus& corpus, const std::string& transcripts_dir,
                     const std::string& out_dir, Judge& judge, Fetcher& fetcher,
                     const AuditOptions& options = {});

}  // namespace deeptrace
