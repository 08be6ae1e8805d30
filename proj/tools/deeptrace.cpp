#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

#include "deeptrace/analysis.hpp"
#include "deeptrace/corpus.hpp"
#include "deeptrace/errors.hpp"
#include "deeptrace/fetcher.hpp"
#include "deeptrace/judge.hpp"
#include "deeptrace/metrics.hpp"
#include "deeptrace/scorecard.hpp"

namespace fs = std::filesystem;
using namespace deeptrace;

namespace {

int cmd_audit(const std::string& corpus_path, const std::string& transcripts_dir,
              const std::string& out_dir, const std::string& judge_endpoint,
              const std::string& judge_model, const std::string& mock_judge,
              const std::string& partial_support, bool strict, const std::string& reader_base,
              int fetch_delay_ms, std::string cache_dir, const std::string& thresholds_path,
              const std::string& prompt_dir, int jobs, int judge_retries) {
    const Corpus corpus = load_corpus(corpus_path);
    if (cache_dir.empty()) cache_dir = (fs::path(out_dir) / "cache").string();

    JudgeConfig judge_cfg;
    judge_cfg.endpoint = judge_endpoint;
    judge_cfg.model_name = judge_model;
    judge_cfg.max_retries = judge_retries;
    judge_cfg.cache_dir = (fs::path(cache_dir) / "judge").string();
    judge_cfg.prompt_dir = prompt_dir;

    std::unique_ptr<Judge> judge;
    if (!mock_judge.empty()) {
        if (mock_judge == "builtin")
            judge = std::make_unique<MockJudge>(judge_cfg);
        else
            judge = std::make_unique<MockJudge>(MockJudge::from_fixture_file(mock_judge));
    } else {
        if (judge_endpoint.empty()) {
            std::cerr << "error: --judge-endpoint is required unless --mock-judge is given\n";
            return 2;
        }
        judge = std::make_unique<HttpJudge>(judge_cfg);
    }

    FetcherConfig fetcher_cfg;
    fetcher_cfg.cache_dir = (fs::path(cache_dir) / "pages").string();
    fetcher_cfg.per_host_delay_ms = fetch_delay_ms;
    Fetcher fetcher(std::make_unique<ReaderEndpointBackend>(reader_base), fetcher_cfg);

    AuditOptions options;
    options.partial_policy = parse_partial_policy(partial_support);
    options.strict = strict;
    options.record_threads = jobs;
    if (!thresholds_path.empty()) {
        options.thresholds = ThresholdTable::from_file(thresholds_path);
        options.thresholds_origin = thresholds_path;
    }

    const RunSummary summary = run_audit(corpus, transcripts_dir, out_dir, *judge, fetcher,
                                         options);
    std::cout << "audited " << summary.ok << " record(s), " << summary.skipped << " skipped, "
              << summary.failed << " failed; engines:";
    for (const std::string& e : summary.engines) std::cout << " " << e;
    std::cout << "\nrun directory: " << out_dir << "\n";
    return summary.failed == 0 ? 0 : 1;
}

int cmd_metrics(const std::string& record_path) {
    const AuditRecord record = load_audit_record(record_path);
    std::cout << record_metrics_to_json(compute_record_metrics(record));
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& format) {
    std::vector<Scorecard> cards;
    const fs::path dir = fs::path(run_dir) / "scorecards";
    if (fs::exists(dir)) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        for (const std::string& f : files) cards.push_back(scorecard_from_json(read_file(f)));
    }
    if (cards.empty()) {
        std::cerr << "error: no scorecards found under " << dir << "\n";
        return 2;
    }
    std::cout << render_report(std::move(cards),
                               format == "json" ? ReportFormat::Json : ReportFormat::Markdown);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DeepTRACE: audits generative search engine transcripts into "
                 "citation/support matrices, eight metrics, and threshold scorecards"};
    app.require_subcommand(1);

    // audit
    std::string corpus_path, transcripts_dir, out_dir;
    std::string judge_endpoint, judge_model = "gpt-5", mock_judge;
    std::string partial_support = "ignore";
    bool strict = false;
    std::string reader_base = "https://r.jina.ai";
    int fetch_delay_ms = 0;
    std::string cache_dir, thresholds_path, prompt_dir;
    int jobs = 2;
    int judge_retries = 2;

    CLI::App* audit = app.add_subcommand("audit", "run a full audit over captured transcripts");
    audit->add_option("--corpus", corpus_path, "corpus JSON-lines file")->required();
    audit->add_option("--transcripts", transcripts_dir,
                      "directory of <query_id>__<engine>.json transcripts")
        ->required();
    audit->add_option("--out", out_dir, "run output directory")->required();
    audit->add_option("--judge-endpoint", judge_endpoint,
                      "chat-completion base URL (bearer token from DEEPTRACE_JUDGE_KEY)");
    audit->add_option("--judge-model", judge_model, "judge model name");
    audit->add_option("--mock-judge", mock_judge,
                      "use the deterministic mock judge: 'builtin' or a fixture JSON path");
    audit->add_option("--partial-support", partial_support,
                      "how partial verdicts collapse: count|ignore")
        ->check(CLI::IsMember({"count", "ignore"}));
    audit->add_flag("--strict", strict, "abort on the first record failure");
    audit->add_option("--reader-base", reader_base, "content-extraction endpoint base URL");
    audit->add_option("--fetch-delay-ms", fetch_delay_ms, "per-host politeness delay");
    audit->add_option("--cache-dir", cache_dir, "cache directory (default <out>/cache)");
    audit->add_option("--thresholds", thresholds_path, "threshold table override (JSON)");
    audit->add_option("--prompt-dir", prompt_dir, "directory of judge prompt templates");
    audit->add_option("--jobs", jobs, "concurrent records");
    audit->add_option("--judge-retries", judge_retries, "judge retry budget per call");

    // metrics
    std::string record_path;
    CLI::App* metrics = app.add_subcommand("metrics",
                                           "recompute metrics from a saved audit record");
    metrics->add_option("--record", record_path, "audit record JSON file")->required();

    // report
    std::string run_dir, format = "markdown";
    CLI::App* report = app.add_subcommand("report", "render a report from a run directory");
    report->add_option("--run", run_dir, "run directory")->required();
    report->add_option("--format", format, "json|markdown")
        ->check(CLI::IsMember({"json", "markdown"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (audit->parsed())
            return cmd_audit(corpus_path, transcripts_dir, out_dir, judge_endpoint, judge_model,
                             mock_judge, partial_support, strict, reader_base, fetch_delay_ms,
                             cache_dir, thresholds_path, prompt_dir, jobs, judge_retries);
        if (metrics->parsed()) return cmd_metrics(record_path);
        if (report->parsed()) return cmd_report(run_dir, format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
