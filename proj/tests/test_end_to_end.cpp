#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "deeptrace/corpus.hpp"
#include "deeptrace/errors.hpp"
#include "deeptrace/scorecard.hpp"
#include "support/e2e_fixture.hpp"

using namespace deeptrace;
namespace fs = std::filesystem;

namespace {

RunSummary run_fixture(e2e::Fixture& fx, const std::string& out_dir,
                       const std::string& cache_dir) {
    const Corpus corpus = load_corpus(fx.corpus_path);
    JudgeConfig cfg;
    MockJudge judge(cfg);
    FetcherConfig fetcher_cfg;
    fetcher_cfg.cache_dir = cache_dir;
    Fetcher fetcher(std::make_unique<DirectHttpBackend>(5), fetcher_cfg);
    AuditOptions options;
    options.record_threads = 2;
    return run_audit(corpus, fx.transcripts_dir, out_dir, judge, fetcher, options);
}

std::string fixtures_dir() {
    const char* env = std::getenv("DEEPTRACE_TEST_FIXTURES");
    REQUIRE(env != nullptr);
    return env;
}

}  // namespace

TEST_CASE("full audit run: deterministic, cached, and fail-soft") {
    e2e::Fixture fx;
    fx.build();
    const std::string cache_dir = fx.root + "/cache";

    const RunSummary first = run_fixture(fx, fx.root + "/run1", cache_dir);
    CHECK(first.ok == 6);
    CHECK(first.skipped == 1);  // d9 has no transcript
    CHECK(first.failed == 0);
    CHECK(first.engines == std::vector<std::string>{"alpha", "beta"});

    const int requests_after_first = fx.server.requests();
    CHECK(requests_after_first == 5);  // five unique URLs, one fetch each

    const RunSummary second = run_fixture(fx, fx.root + "/run2", cache_dir);
    CHECK(second.ok == 6);

    // Warm caches: byte-identical scorecards, zero network traffic.
    for (const char* engine : {"alpha", "beta"}) {
        const std::string a =
            read_file(fx.root + "/run1/scorecards/" + engine + ".json");
        const std::string b =
            read_file(fx.root + "/run2/scorecards/" + engine + ".json");
        CHECK(a == b);
        CHECK_FALSE(a.empty());
    }
    CHECK(fx.server.requests() == requests_after_first);

    // The second run's manifest records zero fetch network calls.
    const auto manifest =
        nlohmann::json::parse(read_file(fx.root + "/run2/manifest.json"));
    CHECK(manifest["cache"]["fetch_network_calls"] == 0);
    CHECK(manifest["cache"]["judge_network_calls"] == 0);
    CHECK(manifest["records"].size() == 7);  // 6 processed + 1 skipped
    bool found_skipped = false;
    for (const auto& r : manifest["records"])
        if (r["status"] == "skipped" && r["query_id"] == "d9") found_skipped = true;
    CHECK(found_skipped);
    CHECK(manifest["accessibility"]["sources_total"] == 12);
    CHECK(manifest["accessibility"]["sources_ok"] == 10);

    // Reports exist and match across runs.
    CHECK(read_file(fx.root + "/run1/report.md") == read_file(fx.root + "/run2/report.md"));

    // Scorecards match the committed golden files.
    for (const char* engine : {"alpha", "beta"}) {
        const std::string got =
            read_file(fx.root + "/run1/scorecards/" + engine + ".json");
        const std::string golden =
            read_file(fixtures_dir() + "/golden_scorecard_" + engine + ".json");
        CHECK(got == golden);
    }

    fx.server.stop();
    fs::remove_all(fx.root);
}

TEST_CASE("per-record failures are fail-soft unless strict") {
    e2e::Fixture fx;
    fx.build();
    // Corrupt one transcript: non-contiguous source indices.
    atomic_write_file(fx.transcripts_dir + "/d1__alpha.json",
                      R"({"query_id":"d1","engine":"alpha","answer_text":"Text.",
                          "listed_sources":[{"index":1,"url":"u"},{"index":3,"url":"v"}]})");

    const Corpus corpus = load_corpus(fx.corpus_path);
    JudgeConfig cfg;
    MockJudge judge(cfg);
    FetcherConfig fetcher_cfg;
    fetcher_cfg.cache_dir = fx.root + "/cache";
    Fetcher fetcher(std::make_unique<DirectHttpBackend>(5), fetcher_cfg);

    AuditOptions options;
    const RunSummary summary =
        run_audit(corpus, fx.transcripts_dir, fx.root + "/soft", judge, fetcher, options);
    CHECK(summary.failed == 1);
    CHECK(summary.ok == 5);

    const auto manifest = nlohmann::json::parse(read_file(fx.root + "/soft/manifest.json"));
    bool failed_listed = false;
    for (const auto& r : manifest["records"])
        if (r["status"] == "failed" && r["query_id"] == "d1" && r["engine"] == "alpha")
            failed_listed = true;
    CHECK(failed_listed);

    AuditOptions strict_options;
    strict_options.strict = true;
    CHECK_THROWS_AS(run_audit(corpus, fx.transcripts_dir, fx.root + "/strict", judge, fetcher,
                              strict_options),
                    Error);

    fx.server.stop();
    fs::remove_all(fx.root);
}

TEST_CASE("orphan transcripts are reported, not processed") {
    e2e::Fixture fx;
    fx.build();
    atomic_write_file(fx.transcripts_dir + "/zz__alpha.json",
                      R"({"query_id":"zz","engine":"alpha","answer_text":"T.",
                          "listed_sources":[]})");

    const Corpus corpus = load_corpus(fx.corpus_path);
    JudgeConfig cfg;
    MockJudge judge(cfg);
    Fetcher fetcher(std::make_unique<DirectHttpBackend>(5), FetcherConfig{});
    const RunSummary summary =
        run_audit(corpus, fx.transcripts_dir, fx.root + "/orphan", judge, fetcher, {});
    CHECK(summary.ok == 6);

    const auto manifest = nlohmann::json::parse(read_file(fx.root + "/orphan/manifest.json"));
    CHECK(manifest["orphan_files"].size() == 1);
    CHECK(manifest["orphan_files"][0] == "zz__alpha.json");

    fx.server.stop();
    fs::remove_all(fx.root);
}
