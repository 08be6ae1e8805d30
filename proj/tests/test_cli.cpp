#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>

#include "deeptrace/analysis.hpp"
#include "deeptrace/util.hpp"
#include "support/e2e_fixture.hpp"
#include "support/example_case.hpp"

using namespace deeptrace;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const std::string& stdout_file) {
    const std::string cmd = std::string(DEEPTRACE_CLI_PATH) + " " + args + " > " +
                            stdout_file + " 2> " + stdout_file + ".err";
    return std::system(cmd.c_str());
}

AuditRecord worked_example_record() {
    AuditRecord record;
    record.query = Query{"q1", "Is the energy transition on track?", Category::Debate};
    record.engine = "demo";
    const std::vector<std::pair<std::string, StanceLabel>> rows = {
        {"Solar adoption keeps climbing worldwide[1].", StanceLabel::Pro},
        {"Battery storage costs have fallen sharply[2].", StanceLabel::Pro},
        {"Grid operators report steady reliability[1][3].", StanceLabel::Con},
        {"Heat pumps cut household emissions significantly[2].", StanceLabel::Pro},
        {"Permitting delays slow new transmission projects[5].", StanceLabel::Con},
        {"Subsidy design remains contested among economists[4].", StanceLabel::Neutral},
    };
    for (std::size_t i = 0; i < rows.size(); ++i)
        record.statements.push_back(
            Statement{static_cast<int>(i) + 1, rows[i].first, true, rows[i].second, {}});
    record.statements.push_back(Statement{0, "I hope this helps!", false, std::nullopt, {}});
    for (int i = 1; i <= 5; ++i) {
        SourceInfo s;
        s.index = i;
        s.url = "https://example.com/s" + std::to_string(i);
        s.accessible = true;
        s.status = FetchStatus::Ok;
        record.sources.push_back(std::move(s));
    }
    record.confidence = 4;
    record.citation = example_case::citation();
    record.support = example_case::support();
    record.support_columns = {1, 2, 3, 4, 5};
    record.diagnostics.marks_per_statement = {1, 1, 1, 1, 1, 1, 0};
    return record;
}

}  // namespace

TEST_CASE("cli: metrics subcommand recomputes from a saved record") {
    const std::string dir = e2e::make_temp_dir("cli_metrics");
    const std::string record_path = dir + "/record.json";
    save_audit_record(worked_example_record(), record_path);

    const std::string out = dir + "/out.json";
    REQUIRE(run_cli("metrics --record " + record_path, out) == 0);

    const auto obj = nlohmann::json::parse(read_file(out));
    CHECK(obj["metrics"]["relevant_statements"]["value"] == "6/7");
    CHECK(obj["metrics"]["source_necessity"]["value"] == "3/5");
    CHECK(obj["metrics"]["source_necessity"]["extras"]["cover"] ==
          nlohmann::json::array({1, 2, 3}));
    CHECK(obj["metrics"]["citation_accuracy"]["value"] == "4/7");
    CHECK(obj["metrics"]["citation_thoroughness"]["value"] == "2/5");
    CHECK(obj["metrics"]["one_sided_answer"]["value"] == "0");
    fs::remove_all(dir);
}

TEST_CASE("cli: full audit then report, end to end") {
    e2e::Fixture fx;
    fx.build();
    const std::string out_dir = fx.root + "/cli_run";

    const std::string log = fx.root + "/audit.log";
    const int rc = run_cli("audit --corpus " + fx.corpus_path + " --transcripts " +
                               fx.transcripts_dir + " --out " + out_dir +
                               " --mock-judge builtin --reader-base " + fx.base_url +
                               " --jobs 2",
                           log);
    INFO(read_file(log + ".err"));
    REQUIRE(rc == 0);

    // Same scorecards as the library-level golden run.
    const char* env = std::getenv("DEEPTRACE_TEST_FIXTURES");
    REQUIRE(env != nullptr);
    for (const char* engine : {"alpha", "beta"}) {
        CHECK(read_file(out_dir + "/scorecards/" + engine + ".json") ==
              read_file(std::string(env) + "/golden_scorecard_" + engine + ".json"));
    }

    const std::string report = fx.root + "/report.md";
    REQUIRE(run_cli("report --run " + out_dir + " --format markdown", report) == 0);
    const std::string body = read_file(report);
    CHECK(body.find("# DeepTRACE Report") != std::string::npos);
    CHECK(body.find("| Statistic | alpha | beta |") != std::string::npos);

    const std::string json_report = fx.root + "/report.json";
    REQUIRE(run_cli("report --run " + out_dir + " --format json", json_report) == 0);
    CHECK(nlohmann::json::parse(read_file(json_report))["engines"].size() == 2);

    fx.server.stop();
    fs::remove_all(fx.root);
}

TEST_CASE("cli: bad invocations fail cleanly") {
    const std::string dir = e2e::make_temp_dir("cli_bad");
    const std::string out = dir + "/out.txt";
    CHECK(run_cli("metrics --record " + dir + "/nope.json", out) != 0);
    CHECK(run_cli("report --run " + dir + " --format markdown", out) != 0);
    CHECK(run_cli("audit --corpus missing.jsonl --transcripts x --out y --mock-judge builtin",
                  out) != 0);
    fs::remove_all(dir);
}
