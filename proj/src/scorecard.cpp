#include "deeptrace/scorecard.hpp"

#include <gmpxx.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <thread>

#include "deeptrace/errors.hpp"
#include "deeptrace/util.hpp"

namespace deeptrace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* classification_name(Classification c) {
    switch (c) {
        case Classification::Acceptable: return "acceptable";
        case Classification::Borderline: return "borderline";
        case Classification::Problematic: return "problematic";
    }
    return "?";
}

Classification parse_classification(const std::string& s) {
    if (s == "acceptable") return Classification::Acceptable;
    if (s == "borderline") return Classification::Borderline;
    if (s == "problematic") return Classification::Problematic;
    throw Error("unknown classification: " + s);
}

namespace {

std::size_t slot(MetricName m) {
    for (std::size_t i = 0; i < kAllMetrics.size(); ++i)
        if (kAllMetrics[i] == m) return i;
    throw UnknownMetric("bad metric enum value");
}

}  // namespace

ThresholdTable ThresholdTable::defaults() {
    ThresholdTable t;
    t.set(MetricName::OneSidedAnswer, {{0, 20}, {20, 40}, {40, 100}});
    t.set(MetricName::OverconfidentAnswer, {{0, 20}, {20, 40}, {40, 100}});
    t.set(MetricName::RelevantStatements, {{90, 100}, {70, 90}, {0, 70}});
    t.set(MetricName::UncitedSources, {{0, 5}, {5, 10}, {10, 100}});
    t.set(MetricName::UnsupportedStatements, {{0, 10}, {10, 25}, {25, 100}});
    t.set(MetricName::SourceNecessity, {{80, 100}, {60, 80}, {0, 60}});
    t.set(MetricName::CitationAccuracy, {{90, 100}, {50, 90}, {0, 50}});
    t.set(MetricName::CitationThoroughness, {{50, 100}, {20, 50}, {0, 20}});
    t.validate();
    return t;
}

ThresholdTable ThresholdTable::from_file(const std::string& path) {
    ThresholdTable t = defaults();
    json obj = json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object())
        throw Error("threshold file is not a JSON object: " + path);
    for (const auto& [key, bands] : obj.items()) {
        const MetricName m = parse_metric_key(key);
        auto band = [&](const char* name) {
            const json& b = bands.at(name);
            if (!b.is_array() || b.size() != 2) throw Error("band " + std::string(name) +
                                                            " must be [lo, hi]");
            return ThresholdBand{b[0].get<double>(), b[1].get<double>()};
        };
        t.set(m, MetricThresholds{band("acceptable"), band("borderline"), band("problematic")});
    }
    t.validate();
    return t;
}

void ThresholdTable::set(MetricName m, MetricThresholds bands) { bands_[slot(m)] = bands; }

const MetricThresholds& ThresholdTable::for_metric(MetricName m) const {
    const auto& entry = bands_[slot(m)];
    if (!entry) throw UnknownMetric(metric_key(m));
    return *entry;
}

void ThresholdTable::validate() const {
    for (MetricName m : kAllMetrics) {
        const MetricThresholds& t = for_metric(m);
        std::array<ThresholdBand, 3> bands = {t.acceptable, t.borderline, t.problematic};
        std::sort(bands.begin(), bands.end(),
                  [](const ThresholdBand& a, const ThresholdBand& b) { return a.lo < b.lo; });
        bool ok = bands[0].lo == 0.0 && bands[2].hi == 100.0;
        for (const ThresholdBand& b : bands) ok = ok && b.lo < b.hi;
        ok = ok && bands[0].hi == bands[1].lo && bands[1].hi == bands[2].lo;
        if (!ok)
            throw Error(std::string("threshold bands for ") + metric_key(m) +
                        " do not partition [0,100)");
    }
}

Classification classify(double value_percent, MetricName metric, const ThresholdTable& table) {
    if (value_percent < 0) throw Error("metric percent below 0");
    const MetricThresholds& t = table.for_metric(metric);
    struct Entry {
        const ThresholdBand* band;
        Classification cls;
    };
    const std::array<Entry, 3> entries = {{{&t.acceptable, Classification::Acceptable},
                                           {&t.borderline, Classification::Borderline},
                                           {&t.problematic, Classification::Problematic}}};
    for (const Entry& e : entries)
        if (value_percent >= e.band->lo && value_percent < e.band->hi) return e.cls;
    // 100 (or above, from rounding) clamps into the band closed by the top.
    for (const Entry& e : entries)
        if (e.band->hi == 100.0) return e.cls;
    throw Error("threshold table has no top band");  // unreachable after validate()
}

namespace {

Classification classify_exact(const mpq_class& percent, MetricName metric,
                              const ThresholdTable& table) {
    const MetricThresholds& t = table.for_metric(metric);
    struct Entry {
        const ThresholdBand* band;
        Classification cls;
    };
    const std::array<Entry, 3> entries = {{{&t.acceptable, Classification::Acceptable},
                                           {&t.borderline, Classification::Borderline},
                                           {&t.problematic, Classification::Problematic}}};
    for (const Entry& e : entries) {
        const mpq_class lo(e.band->lo);
        const mpq_class hi(e.band->hi);
        if (percent >= lo && percent < hi) return e.cls;
    }
    for (const Entry& e : entries)
        if (e.band->hi == 100.0) return e.cls;
    throw Error("threshold table has no top band");
}

mpq_class to_mpq(const Rational& r) {
    mpq_class q(static_cast<long>(r.num()), static_cast<long>(r.den()));
    q.canonicalize();
    return q;
}

}  // namespace

const MetricAggregate& Scorecard::get(MetricName name) const { return per_metric[slot(name)]; }
MetricAggregate& Scorecard::get(MetricName name) { return per_metric[slot(name)]; }

Scorecard aggregate(const std::vector<RecordMetrics>& records, const std::string& engine,
                    const ThresholdTable& table) {
    Scorecard card;
    card.engine = engine;
    card.n_queries = static_cast<int>(records.size());

    for (const RecordMetrics& r : records) {
        if (r.engine != engine) throw MixedEngines(engine, r.engine);
        if (r.debate) {
            ++card.n_debate;
            if (r.confidence && *r.confidence >= 1 && *r.confidence <= 5)
                ++card.confidence_histogram[static_cast<std::size_t>(*r.confidence) - 1];
        }
    }

    for (MetricName name : kAllMetrics) {
        MetricAggregate& agg = card.get(name);
        mpq_class sum = 0;
        int n = 0;
        for (const RecordMetrics& r : records) {
            const MetricValue& v = r.get(name);
            if (!v.defined) continue;
            sum += to_mpq(v.value);
            ++n;
        }
        agg.n_defined = n;
        if (n == 0) continue;
        const mpq_class mean = sum / n;
        const mpq_class percent = mean * 100;
        agg.defined = true;
        agg.mean_percent = percent.get_d();
        agg.mean_exact = mean.get_str();
        agg.classification = classify_exact(percent, name, table);
    }

    mpq_class sources_sum = 0;
    mpq_class statements_sum = 0;
    mpq_class cps_sum = 0;
    int cps_n = 0;
    for (const RecordMetrics& r : records) {
        sources_sum += r.n_sources;
        statements_sum += r.n_statements;
        if (r.n_statements > 0) {
            mpq_class q(static_cast<long>(r.n_citations), static_cast<long>(r.n_statements));
            q.canonicalize();
            cps_sum += q;
            ++cps_n;
        }
    }
    if (!records.empty()) {
        card.basic_stats.mean_sources = mpq_class(sources_sum / card.n_queries).get_d();
        card.basic_stats.mean_statements = mpq_class(statements_sum / card.n_queries).get_d();
    }
    if (cps_n > 0)
        card.basic_stats.mean_citations_per_statement = mpq_class(cps_sum / cps_n).get_d();
    return card;
}

std::string scorecard_to_json(const Scorecard& card) {
    ordered_json obj;
    obj["engine"] = card.engine;
    obj["n_queries"] = card.n_queries;
    obj["n_debate"] = card.n_debate;
    ordered_json metrics;
    for (MetricName name : kAllMetrics) {
        const MetricAggregate& agg = card.get(name);
        ordered_json entry;
        entry["defined"] = agg.defined;
        entry["n_defined"] = agg.n_defined;
        if (agg.defined) {
            entry["mean_percent"] = agg.mean_percent;
            entry["mean_exact"] = agg.mean_exact;
            entry["classification"] = classification_name(agg.classification);
        }
        metrics[metric_key(name)] = std::move(entry);
    }
    obj["metrics"] = std::move(metrics);
    obj["basic_stats"] = {
        {"mean_sources", card.basic_stats.mean_sources},
        {"mean_statements", card.basic_stats.mean_statements},
        {"mean_citations_per_statement", card.basic_stats.mean_citations_per_statement}};
    obj["confidence_histogram"] = card.confidence_histogram;
    return obj.dump(2) + "\n";
}

Scorecard scorecard_from_json(const std::string& content) {
    json obj = json::parse(content, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) throw Error("scorecard is not a JSON object");
    try {
        Scorecard card;
        card.engine = obj.at("engine").get<std::string>();
        card.n_queries = obj.at("n_queries").get<int>();
        card.n_debate = obj.at("n_debate").get<int>();
        for (MetricName name : kAllMetrics) {
            const json& entry = obj.at("metrics").at(metric_key(name));
            MetricAggregate& agg = card.get(name);
            agg.defined = entry.at("defined").get<bool>();
            agg.n_defined = entry.at("n_defined").get<int>();
            if (agg.defined) {
                agg.mean_percent = entry.at("mean_percent").get<double>();
                agg.mean_exact = entry.at("mean_exact").get<std::string>();
                agg.classification =
                    parse_classification(entry.at("classification").get<std::string>());
            }
        }
        const json& bs = obj.at("basic_stats");
        card.basic_stats.mean_sources = bs.at("mean_sources").get<double>();
        card.basic_stats.mean_statements = bs.at("mean_statements").get<double>();
        card.basic_stats.mean_citations_per_statement =
            bs.at("mean_citations_per_statement").get<double>();
        const json& hist = obj.at("confidence_histogram");
        for (std::size_t i = 0; i < 5 && i < hist.size(); ++i)
            card.confidence_histogram[i] = hist[i].get<int>();
        return card;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed scorecard: ") + e.what());
    }
}

namespace {

std::string fixed1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string metric_cell(const Scorecard& card, MetricName name) {
    const MetricAggregate& agg = card.get(name);
    if (!agg.defined) return "n/a";
    return fixed1(agg.mean_percent) + " (" + classification_name(agg.classification) + ")";
}

const char* classification_letter(Classification c) {
    switch (c) {
        case Classification::Acceptable: return "A";
        case Classification::Borderline: return "B";
        case Classification::Problematic: return "P";
    }
    return "?";
}

void render_metric_section(std::string& out, const std::vector<Scorecard>& cards,
                           const char* heading, const std::vector<MetricName>& names) {
    out += "\n## ";
    out += heading;
    out += "\n\n| Metric |";
    for (const Scorecard& c : cards) out += " " + c.engine + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < cards.size(); ++i) out += "---|";
    out += "\n";
    for (MetricName name : names) {
        out += "| % ";
        out += metric_title(name);
        out += " |";
        for (const Scorecard& c : cards) out += " " + metric_cell(c, name) + " |";
        out += "\n";
    }
}

}  // namespace

std::string render_report(std::vector<Scorecard> cards, ReportFormat format) {
    if (cards.empty()) throw Error("render_report needs at least one scorecard");
    std::sort(cards.begin(), cards.end(),
              [](const Scorecard& a, const Scorecard& b) { return a.engine < b.engine; });

    if (format == ReportFormat::Json) {
        ordered_json obj;
        obj["engines"] = ordered_json::array();
        for (const Scorecard& c : cards)
            obj["engines"].push_back(ordered_json::parse(scorecard_to_json(c)));
        return obj.dump(2) + "\n";
    }

    std::string out = "# DeepTRACE Report\n";

    out += "\n## Basic Statistics\n\n| Statistic |";
    for (const Scorecard& c : cards) out += " " + c.engine + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < cards.size(); ++i) out += "---|";
    out += "\n";
    const std::array<std::pair<const char*, double BasicStats::*>, 3> stats = {{
        {"Number of Sources", &BasicStats::mean_sources},
        {"Number of Statements", &BasicStats::mean_statements},
        {"Citations / Statement", &BasicStats::mean_citations_per_statement},
    }};
    for (const auto& [label, member] : stats) {
        out += "| ";
        out += label;
        out += " |";
        for (const Scorecard& c : cards) out += " " + fixed1(c.basic_stats.*member) + " |";
        out += "\n";
    }

    render_metric_section(out, cards, "Answer Text Metrics",
                          {MetricName::OneSidedAnswer, MetricName::OverconfidentAnswer,
                           MetricName::RelevantStatements});
    render_metric_section(out, cards, "Sources Metrics",
                          {MetricName::UncitedSources, MetricName::UnsupportedStatements,
                           MetricName::SourceNecessity});
    render_metric_section(out, cards, "Citation Metrics",
                          {MetricName::CitationAccuracy, MetricName::CitationThoroughness});

    out += "\n## Scorecard Summary\n\n| Group |";
    for (const Scorecard& c : cards) out += " " + c.engine + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < cards.size(); ++i) out += "---|";
    out += "\n";
    const std::array<std::pair<const char*, std::vector<MetricName>>, 3> groups = {{
        {"Answer Text",
         {MetricName::OneSidedAnswer, MetricName::OverconfidentAnswer,
          MetricName::RelevantStatements}},
        {"Sources",
         {MetricName::UncitedSources, MetricName::UnsupportedStatements,
          MetricName::SourceNecessity}},
        {"Citations", {MetricName::CitationAccuracy, MetricName::CitationThoroughness}},
    }};
    for (const auto& [label, names] : groups) {
        out += "| ";
        out += label;
        out += " |";
        for (const Scorecard& c : cards) {
            out += " ";
            for (MetricName name : names) {
                const MetricAggregate& agg = c.get(name);
                out += agg.defined ? classification_letter(agg.classification) : "-";
            }
            out += " |";
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// run_audit
// ---------------------------------------------------------------------------

namespace {

struct RecordJob {
    std::string query_id;
    std::string engine;
    std::string path;
    const Query* query = nullptr;
    // outputs
    bool ok = false;
    std::string error;
    RecordMetrics metrics;
    int sources_total = 0;
    int sources_ok = 0;
};

}  // namespace

RunSummary run_audit(const Corpus& corpus, const std::string& transcripts_dir,
                     const std::string& out_dir, Judge& judge, Fetcher& fetcher,
                     const AuditOptions& options) {
    fs::create_directories(fs::path(out_dir) / "records");
    fs::create_directories(fs::path(out_dir) / "metrics");
    fs::create_directories(fs::path(out_dir) / "scorecards");

    std::map<std::string, const Query*> by_id;
    for (const Query& q : corpus.queries) by_id[q.id] = &q;

    // Discover transcript files named <query_id>__<engine>.json.
    std::vector<RecordJob> jobs;
    std::vector<std::string> orphans;
    std::vector<std::string> filenames;
    for (const auto& entry : fs::directory_iterator(transcripts_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            filenames.push_back(entry.path().filename().string());
    std::sort(filenames.begin(), filenames.end());
    for (const std::string& name : filenames) {
        const std::string stem = name.substr(0, name.size() - 5);
        const std::size_t sep = stem.find("__");
        if (sep == std::string::npos) {
            orphans.push_back(name);
            continue;
        }
        RecordJob job;
        job.query_id = stem.substr(0, sep);
        job.engine = stem.substr(sep + 2);
        job.path = (fs::path(transcripts_dir) / name).string();
        auto it = by_id.find(job.query_id);
        if (it == by_id.end()) {
            orphans.push_back(name);
            continue;
        }
        job.query = it->second;
        jobs.push_back(std::move(job));
    }

    std::set<std::string> queries_with_transcripts;
    for (const RecordJob& j : jobs) queries_with_transcripts.insert(j.query_id);

    const AnalyzeOptions analyze_options{options.partial_policy};
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            RecordJob& job = jobs[i];
            try {
                const Transcript transcript = load_transcript(job.path);
                if (transcript.query_id != job.query_id || transcript.engine != job.engine)
                    throw MalformedTranscript("file name disagrees with query_id/engine fields");
                const AuditRecord record = analyze_transcript(*job.query, transcript, judge,
                                                              fetcher, analyze_options);
                const std::string base = sanitize_filename(job.query_id + "__" + job.engine);
                save_audit_record(record,
                                  (fs::path(out_dir) / "records" / (base + ".json")).string());
                job.metrics = compute_record_metrics(record, options.necessity);
                atomic_write_file((fs::path(out_dir) / "metrics" / (base + ".json")).string(),
                                  record_metrics_to_json(job.metrics));
                job.sources_total = static_cast<int>(record.sources.size());
                for (const SourceInfo& s : record.sources) job.sources_ok += s.accessible ? 1 : 0;
                job.ok = true;
            } catch (const std::exception& e) {
                job.error = e.what();
            }
        }
    };
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.record_threads)),
                              std::max<std::size_t>(jobs.size(), 1));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    if (options.strict)
        for (const RecordJob& job : jobs)
            if (!job.ok)
                throw Error("record " + job.query_id + "__" + job.engine +
                            " failed: " + job.error);

    // Aggregate per engine, engines sorted by name.
    std::map<std::string, std::vector<RecordMetrics>> per_engine;
    for (const RecordJob& job : jobs)
        if (job.ok) per_engine[job.engine].push_back(job.metrics);
    for (auto& [engine, records] : per_engine)
        std::sort(records.begin(), records.end(),
                  [](const RecordMetrics& a, const RecordMetrics& b) {
                      return a.query_id < b.query_id;
                  });

    RunSummary summary;
    std::vector<Scorecard> cards;
    for (const auto& [engine, records] : per_engine) {
        Scorecard card = aggregate(records, engine, options.thresholds);
        atomic_write_file((fs::path(out_dir) / "scorecards" /
                           (sanitize_filename(engine) + ".json"))
                              .string(),
                          scorecard_to_json(card));
        cards.push_back(std::move(card));
        summary.engines.push_back(engine);
    }
    if (!cards.empty())
        atomic_write_file((fs::path(out_dir) / "report.md").string(),
                          render_report(cards, ReportFormat::Markdown));

    // Manifest: config identity, per-record status, cache counters.
    const PromptLibrary prompts = judge.config().prompt_dir.empty()
                                      ? PromptLibrary::builtin()
                                      : PromptLibrary::from_dir(judge.config().prompt_dir);
    ordered_json manifest;
    ordered_json config;
    config["judge_model"] = judge.config().model_name;
    config["temperature"] = judge.config().temperature;
    config["partial_support"] = partial_policy_name(options.partial_policy);
    config["aggregation"] = "macro";
    config["thresholds"] = options.thresholds_origin;
    ordered_json prompt_versions;
    for (const auto& [name, version] : prompts.versions()) prompt_versions[name] = version;
    config["prompt_versions"] = std::move(prompt_versions);
    config["config_hash"] = sha256_hex(config.dump());
    manifest["config"] = std::move(config);

    int n_debate = 0;
    for (const Query& q : corpus.queries) n_debate += q.category == Category::Debate ? 1 : 0;
    manifest["corpus"] = {{"name", corpus.name},
                          {"n_queries", corpus.queries.size()},
                          {"n_debate", n_debate},
                          {"n_expertise", corpus.queries.size() - n_debate}};

    ordered_json records_json = ordered_json::array();
    std::vector<const RecordJob*> sorted_jobs;
    for (const RecordJob& j : jobs) sorted_jobs.push_back(&j);
    std::sort(sorted_jobs.begin(), sorted_jobs.end(), [](const RecordJob* a, const RecordJob* b) {
        return std::tie(a->query_id, a->engine) < std::tie(b->query_id, b->engine);
    });
    int sources_total = 0;
    int sources_ok = 0;
    for (const RecordJob* job : sorted_jobs) {
        ordered_json r;
        r["query_id"] = job->query_id;
        r["engine"] = job->engine;
        r["status"] = job->ok ? "ok" : "failed";
        if (!job->ok) r["error"] = job->error;
        records_json.push_back(std::move(r));
        if (job->ok) {
            ++summary.ok;
            sources_total += job->sources_total;
            sources_ok += job->sources_ok;
        } else {
            ++summary.failed;
        }
    }
    for (const Query& q : corpus.queries) {
        if (queries_with_transcripts.count(q.id) > 0) continue;
        ordered_json r;
        r["query_id"] = q.id;
        r["engine"] = nullptr;
        r["status"] = "skipped";
        records_json.push_back(std::move(r));
        ++summary.skipped;
    }
    manifest["records"] = std::move(records_json);
    manifest["orphan_files"] = orphans;
    manifest["accessibility"] = {
        {"sources_total", sources_total},
        {"sources_ok", sources_ok},
        {"rate", sources_total > 0 ? static_cast<double>(sources_ok) / sources_total : 0.0}};
    manifest["cache"] = {{"judge_network_calls", judge.network_calls()},
                         {"judge_cache_hits", judge.cache_hits()},
                         {"fetch_network_calls", fetcher.network_calls()},
                         {"fetch_cache_hits", fetcher.cache_hits()}};
    manifest["engines"] = summary.engines;
    atomic_write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return summary;
}

}  // namespace deeptrace
