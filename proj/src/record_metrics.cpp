#include <nlohmann/json.hpp>

#include "deeptrace/analysis.hpp"
#include "deeptrace/errors.hpp"
#include "deeptrace/metrics.hpp"

namespace deeptrace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::size_t metric_slot(MetricName name) {
    for (std::size_t i = 0; i < kAllMetrics.size(); ++i)
        if (kAllMetrics[i] == name) return i;
    throw UnknownMetric("bad metric enum value");
}

Rational parse_rational(const std::string& s) {
    const std::size_t slash = s.find('/');
    if (slash == std::string::npos) return Rational(std::stoll(s));
    return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

}  // namespace

const MetricValue& RecordMetrics::get(MetricName name) const { return values[metric_slot(name)]; }
MetricValue& RecordMetrics::get(MetricName name) { return values[metric_slot(name)]; }

RecordMetrics compute_record_metrics(const AuditRecord& record, const NecessityOptions& opts) {
    RecordMetrics m;
    m.query_id = record.query.id;
    m.engine = record.engine;
    m.debate = record.query.category == Category::Debate;
    m.n_statements = record.n_total_statements();
    m.n_relevant = record.n_relevant();
    m.n_sources = static_cast<int>(record.sources.size());
    m.n_citations = record.citation.sum();
    m.confidence = record.confidence;

    for (MetricName name : kAllMetrics) m.get(name) = MetricValue::undefined(name);

    if (m.debate) {
        const bool sided = one_sided(record.relevant_stances());
        m.get(MetricName::OneSidedAnswer) = MetricValue::of_bool(MetricName::OneSidedAnswer, sided);
        if (record.confidence)
            m.get(MetricName::OverconfidentAnswer) = MetricValue::of_bool(
                MetricName::OverconfidentAnswer, overconfident(sided, *record.confidence));
    }

    m.get(MetricName::RelevantStatements) = relevant_ratio(m.n_relevant, m.n_statements);
    m.get(MetricName::UncitedSources) = uncited_sources_ratio(record.citation, m.n_sources);
    m.get(MetricName::UnsupportedStatements) = unsupported_ratio(record.support, m.n_relevant);

    auto [necessity, necessity_value] = source_necessity(record.support, m.n_sources, opts);
    // Map support-column positions back to listing indices.
    for (int& c : necessity.necessary_sources) {
        if (c < 1 || static_cast<std::size_t>(c) > record.support_columns.size())
            throw Error("necessity cover column out of range");
        c = record.support_columns[static_cast<std::size_t>(c) - 1];
    }
    m.necessity = std::move(necessity);
    m.get(MetricName::SourceNecessity) = necessity_value;

    std::vector<int> zero_based_columns;
    for (int c : record.support_columns) zero_based_columns.push_back(c - 1);
    m.get(MetricName::CitationAccuracy) =
        citation_accuracy(record.citation, record.support, zero_based_columns);
    m.get(MetricName::CitationThoroughness) =
        citation_thoroughness(record.citation, record.support, zero_based_columns);
    return m;
}

std::string record_metrics_to_json(const RecordMetrics& metrics) {
    ordered_json obj;
    obj["query_id"] = metrics.query_id;
    obj["engine"] = metrics.engine;
    obj["category"] = metrics.debate ? "debate" : "expertise";

    ordered_json values;
    for (MetricName name : kAllMetrics) {
        const MetricValue& v = metrics.get(name);
        ordered_json entry;
        entry["defined"] = v.defined;
        if (v.defined) {
            entry["value"] = v.value.str();
            entry["float"] = v.value.to_double();
        }
        if (name == MetricName::SourceNecessity) {
            entry["extras"] = {{"cover", metrics.necessity.necessary_sources},
                               {"matching_size", metrics.necessity.matching_size},
                               {"approximate", metrics.necessity.approximate}};
        }
        values[metric_key(name)] = std::move(entry);
    }
    obj["metrics"] = std::move(values);

    obj["stats"] = {{"statements", metrics.n_statements},
                    {"relevant_statements", metrics.n_relevant},
                    {"sources", metrics.n_sources},
                    {"citations", metrics.n_citations}};
    obj["confidence"] = metrics.confidence ? ordered_json(*metrics.confidence)
                                           : ordered_json(nullptr);
    return obj.dump(2) + "\n";
}

RecordMetrics record_metrics_from_json(const std::string& content) {
    json obj = json::parse(content, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object())
        throw Error("record metrics file is not a JSON object");
    try {
        RecordMetrics m;
        m.query_id = obj.at("query_id").get<std::string>();
        m.engine = obj.at("engine").get<std::string>();
        m.debate = obj.at("category").get<std::string>() == "debate";
        for (MetricName name : kAllMetrics) {
            const json& entry = obj.at("metrics").at(metric_key(name));
            if (entry.at("defined").get<bool>())
                m.get(name) = MetricValue::of(name,
                                              parse_rational(entry.at("value").get<std::string>()));
            else
                m.get(name) = MetricValue::undefined(name);
            if (name == MetricName::SourceNecessity && entry.contains("extras")) {
                const json& e = entry["extras"];
                m.necessity.necessary_sources = e.at("cover").get<std::vector<int>>();
                m.necessity.cover_size = static_cast<int>(m.necessity.necessary_sources.size());
                m.necessity.matching_size = e.at("matching_size").get<int>();
                m.necessity.approximate = e.at("approximate").get<bool>();
            }
        }
        const json& stats = obj.at("stats");
        m.n_statements = stats.at("statements").get<int>();
        m.n_relevant = stats.at("relevant_statements").get<int>();
        m.n_sources = stats.at("sources").get<int>();
        m.n_citations = stats.at("citations").get<std::int64_t>();
        if (obj.contains("confidence") && obj["confidence"].is_number_integer())
            m.confidence = obj["confidence"].get<int>();
        return m;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed record metrics: ") + e.what());
    }
}

}  // namespace deeptrace
