#include "deeptrace/analysis.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "deeptrace/errors.hpp"
#include "deeptrace/util.hpp"

namespace deeptrace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

const char* stance_name(StanceLabel s) {
    switch (s) {
        case StanceLabel::Pro: return "pro";
        case StanceLabel::Con: return "con";
        case StanceLabel::Neutral: return "neutral";
    }
    return "?";
}

StanceLabel parse_stance_label(const std::string& s) {
    if (s == "pro") return StanceLabel::Pro;
    if (s == "con") return StanceLabel::Con;
    if (s == "neutral") return StanceLabel::Neutral;
    throw Error("unknown stance label: " + s);
}

const char* partial_policy_name(PartialSupportPolicy p) {
    return p == PartialSupportPolicy::Ignore ? "ignore" : "count";
}

PartialSupportPolicy parse_partial_policy(const std::string& s) {
    if (s == "ignore") return PartialSupportPolicy::Ignore;
    if (s == "count") return PartialSupportPolicy::Count;
    throw Error("unknown partial-support policy: " + s + " (expected count|ignore)");
}

int AuditRecord::n_relevant() const {
    int n = 0;
    for (const Statement& s : statements) n += s.relevant ? 1 : 0;
    return n;
}

std::vector<std::string> AuditRecord::relevant_texts() const {
    std::vector<std::string> out;
    for (const Statement& s : statements)
        if (s.relevant) out.push_back(s.text);
    return out;
}

std::vector<StanceLabel> AuditRecord::relevant_stances() const {
    std::vector<StanceLabel> out;
    for (const Statement& s : statements)
        if (s.relevant && s.stance) out.push_back(*s.stance);
    return out;
}

std::vector<Statement> build_statements(const DecompositionResult& decomp,
                                        const std::optional<StanceResult>& stance) {
    std::vector<Statement> statements;
    int next_index = 0;
    for (const DecomposedSentence& s : decomp.sentences) {
        Statement st;
        st.text = s.text;
        st.relevant = s.core;
        st.span = s.span;
        st.index = s.core ? ++next_index : 0;
        statements.push_back(std::move(st));
    }

    if (stance) {
        const std::size_t covered =
            stance->agree.size() + stance->disagree.size() + stance->neutral.size();
        if (covered != static_cast<std::size_t>(next_index))
            throw StanceSizeMismatch(covered, static_cast<std::size_t>(next_index));
        validate_stance_partition(*stance, next_index);

        std::vector<StanceLabel> by_index(static_cast<std::size_t>(next_index) + 1,
                                          StanceLabel::Neutral);
        for (int i : stance->agree) by_index[static_cast<std::size_t>(i)] = StanceLabel::Pro;
        for (int i : stance->disagree) by_index[static_cast<std::size_t>(i)] = StanceLabel::Con;
        for (Statement& st : statements)
            if (st.relevant) st.stance = by_index[static_cast<std::size_t>(st.index)];
    }
    return statements;
}

namespace {

/// Index into `statements` owning the mark at `pos`, or -1 when there are no
/// statements. A mark inside a span belongs to that statement; a mark in a
/// gap attaches to the preceding statement; a mark before every span
/// attaches to the first one.
int owning_statement(const std::vector<Statement>& statements, std::size_t pos) {
    int owner = -1;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        const Span& span = statements[i].span;
        if (span.contains(pos)) return static_cast<int>(i);
        if (span.end <= pos) owner = static_cast<int>(i);
    }
    if (owner == -1 && !statements.empty()) owner = 0;
    return owner;
}

}  // namespace

BinaryMatrix build_citation_matrix(const std::vector<Statement>& statements,
                                   const std::vector<CitationMark>& marks, int k,
                                   AnalysisDiagnostics* diagnostics) {
    int n_relevant = 0;
    for (const Statement& s : statements) n_relevant += s.relevant ? 1 : 0;
    BinaryMatrix matrix(static_cast<std::size_t>(n_relevant), static_cast<std::size_t>(k));

    AnalysisDiagnostics local;
    local.marks_per_statement.assign(statements.size(), 0);
    for (const CitationMark& mark : marks) {
        if (mark.dangling) ++local.dangling_marks;
        const int owner = owning_statement(statements, mark.span.begin);
        if (owner < 0) continue;
        ++local.marks_per_statement[static_cast<std::size_t>(owner)];
        const Statement& st = statements[static_cast<std::size_t>(owner)];
        if (!st.relevant) {
            ++local.marks_on_irrelevant;
            continue;
        }
        for (int idx : mark.valid_indices(k))
            matrix.set(static_cast<std::size_t>(st.index - 1),
                       static_cast<std::size_t>(idx - 1), true);
    }
    if (diagnostics != nullptr) *diagnostics = std::move(local);
    return matrix;
}

BinaryMatrix build_support_matrix(const std::vector<Statement>& statements,
                                  const std::vector<FetchOutcome>& outcomes, Judge& judge,
                                  PartialSupportPolicy policy,
                                  std::vector<int>* support_columns_out) {
    std::vector<const Statement*> relevant;
    for (const Statement& s : statements)
        if (s.relevant) relevant.push_back(&s);

    std::vector<int> columns;  // listing indices of accessible sources
    for (std::size_t j = 0; j < outcomes.size(); ++j)
        if (outcomes[j].ok()) columns.push_back(static_cast<int>(j) + 1);

    BinaryMatrix matrix(relevant.size(), columns.size());
    const std::size_t cells = relevant.size() * columns.size();
    if (cells > 0) {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr first_error;
        std::mutex error_mutex;

        auto worker = [&]() {
            while (!failed.load()) {
                const std::size_t cell = next.fetch_add(1);
                if (cell >= cells) return;
                const std::size_t r = cell / columns.size();
                const std::size_t a = cell % columns.size();
                const std::size_t src = static_cast<std::size_t>(columns[a]) - 1;
                try {
                    const SupportVerdict verdict =
                        judge.judge_support(outcomes[src].text, relevant[r]->text);
                    const bool supported =
                        verdict.level == SupportLevel::Full ||
                        (verdict.level == SupportLevel::Partial &&
                         policy == PartialSupportPolicy::Count);
                    matrix.set(r, a, supported);
                } catch (const JudgeProtocolError& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true))
                        first_error = std::make_exception_ptr(JudgeProtocolError(
                            "support cell (statement " + std::to_string(r + 1) + ", source " +
                            std::to_string(columns[a]) + "): " + e.what()));
                    return;
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) first_error = std::current_exception();
                    return;
                }
            }
        };

        const std::size_t workers = std::min<std::size_t>(
            static_cast<std::size_t>(std::max(1, judge.config().max_in_flight)), cells);
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (std::thread& t : pool) t.join();
        }
        if (failed.load() && first_error) std::rethrow_exception(first_error);
    }

    if (support_columns_out != nullptr) *support_columns_out = std::move(columns);
    return matrix;
}

AuditRecord analyze_transcript(const Query& query, const Transcript& transcript, Judge& judge,
                               Fetcher& fetcher, const AnalyzeOptions& options) {
    AuditRecord record;
    record.query = query;
    record.engine = transcript.engine;
    record.captured_at = transcript.captured_at;

    const DecompositionResult decomp =
        judge.decompose_answer(query.text, transcript.answer_text);

    std::optional<StanceResult> stance;
    if (query.category == Category::Debate && decomp.core_count() > 0) {
        std::vector<std::string> relevant;
        for (const DecomposedSentence& s : decomp.sentences)
            if (s.core) relevant.push_back(s.text);
        stance = judge.classify_stance(query.text, relevant);
    }
    record.statements = build_statements(decomp, stance);

    if (query.category == Category::Debate)
        record.confidence = judge.score_confidence(query.text, transcript.answer_text).level;

    const int k = transcript.source_count();
    const std::vector<CitationMark> marks = parse_citation_marks(transcript.answer_text, k);
    record.citation = build_citation_matrix(record.statements, marks, k, &record.diagnostics);

    std::vector<std::string> urls;
    for (const ListedSource& s : transcript.listed_sources) urls.push_back(s.url);
    const std::vector<FetchOutcome> outcomes = fetcher.fetch_all(urls);
    for (std::size_t j = 0; j < transcript.listed_sources.size(); ++j) {
        SourceInfo info;
        info.index = transcript.listed_sources[j].index;
        info.url = transcript.listed_sources[j].url;
        info.title = transcript.listed_sources[j].title;
        info.status = outcomes[j].status;
        info.accessible = outcomes[j].ok();
        record.sources.push_back(std::move(info));
    }

    record.support = build_support_matrix(record.statements, outcomes, judge,
                                          options.partial_policy, &record.support_columns);
    return record;
}

namespace {

ordered_json matrix_to_json(const BinaryMatrix& m) {
    ordered_json obj;
    obj["rows"] = m.rows();
    obj["cols"] = m.cols();
    ordered_json data = ordered_json::array();
    for (std::uint8_t v : m.data()) data.push_back(static_cast<int>(v));
    obj["data"] = std::move(data);
    return obj;
}

BinaryMatrix matrix_from_json(const json& obj) {
    BinaryMatrix m(obj.at("rows").get<std::size_t>(), obj.at("cols").get<std::size_t>());
    const json& data = obj.at("data");
    if (data.size() != m.rows() * m.cols()) throw Error("matrix data size mismatch");
    std::size_t i = 0;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            m.set(r, c, data[i++].get<int>() != 0);
    return m;
}

}  // namespace

std::string audit_record_to_json(const AuditRecord& record) {
    ordered_json obj;
    obj["query"] = {{"id", record.query.id},
                    {"text", record.query.text},
                    {"category", category_name(record.query.category)}};
    obj["engine"] = record.engine;
    obj["captured_at"] = record.captured_at;
    if (record.confidence)
        obj["confidence"] = *record.confidence;
    else
        obj["confidence"] = nullptr;

    obj["statements"] = ordered_json::array();
    for (const Statement& s : record.statements) {
        ordered_json st;
        st["index"] = s.index;
        st["text"] = s.text;
        st["relevant"] = s.relevant;
        st["stance"] = s.stance ? ordered_json(stance_name(*s.stance)) : ordered_json(nullptr);
        st["span"] = {s.span.begin, s.span.end};
        obj["statements"].push_back(std::move(st));
    }

    obj["sources"] = ordered_json::array();
    for (const SourceInfo& s : record.sources) {
        ordered_json src;
        src["index"] = s.index;
        src["url"] = s.url;
        if (!s.title.empty()) src["title"] = s.title;
        src["accessible"] = s.accessible;
        src["fetch_status"] = fetch_status_name(s.status);
        obj["sources"].push_back(std::move(src));
    }

    obj["citation"] = matrix_to_json(record.citation);
    ordered_json support = matrix_to_json(record.support);
    support["columns"] = record.support_columns;
    obj["support"] = std::move(support);

    obj["diagnostics"] = {{"dangling_marks", record.diagnostics.dangling_marks},
                          {"marks_on_irrelevant", record.diagnostics.marks_on_irrelevant},
                          {"marks_per_statement", record.diagnostics.marks_per_statement}};
    return obj.dump(2) + "\n";
}

AuditRecord audit_record_from_json(const std::string& content) {
    json obj = json::parse(content, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) throw Error("audit record is not a JSON object");
    try {
        AuditRecord record;
        record.query.id = obj.at("query").at("id").get<std::string>();
        record.query.text = obj.at("query").at("text").get<std::string>();
        record.query.category = parse_category(obj.at("query").at("category").get<std::string>());
        record.engine = obj.at("engine").get<std::string>();
        record.captured_at = obj.value("captured_at", std::string());
        if (obj.contains("confidence") && obj["confidence"].is_number_integer())
            record.confidence = obj["confidence"].get<int>();

        for (const json& st : obj.at("statements")) {
            Statement s;
            s.index = st.at("index").get<int>();
            s.text = st.at("text").get<std::string>();
            s.relevant = st.at("relevant").get<bool>();
            if (st.contains("stance") && st["stance"].is_string())
                s.stance = parse_stance_label(st["stance"].get<std::string>());
            if (st.contains("span") && st["span"].is_array() && st["span"].size() == 2)
                s.span = Span{st["span"][0].get<std::size_t>(), st["span"][1].get<std::size_t>()};
            record.statements.push_back(std::move(s));
        }
        for (const json& src : obj.at("sources")) {
            SourceInfo s;
            s.index = src.at("index").get<int>();
            s.url = src.at("url").get<std::string>();
            s.title = src.value("title", std::string());
            s.accessible = src.at("accessible").get<bool>();
            s.status = parse_fetch_status(src.at("fetch_status").get<std::string>());
            record.sources.push_back(std::move(s));
        }
        record.citation = matrix_from_json(obj.at("citation"));
        record.support = matrix_from_json(obj.at("support"));
        record.support_columns = obj.at("support").at("columns").get<std::vector<int>>();
        if (obj.contains("diagnostics")) {
            const json& d = obj["diagnostics"];
            record.diagnostics.dangling_marks = d.value("dangling_marks", 0);
            record.diagnostics.marks_on_irrelevant = d.value("marks_on_irrelevant", 0);
            if (d.contains("marks_per_statement"))
                record.diagnostics.marks_per_statement =
                    d["marks_per_statement"].get<std::vector<int>>();
        }

        if (record.citation.rows() != static_cast<std::size_t>(record.n_relevant()) ||
            record.support.rows() != record.citation.rows() ||
            record.citation.cols() != record.sources.size() ||
            record.support.cols() != record.support_columns.size())
            throw Error("audit record matrices disagree with statement/source rosters");
        return record;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed audit record: ") + e.what());
    }
}

void save_audit_record(const AuditRecord& record, const std::string& path) {
    atomic_write_file(path, audit_record_to_json(record));
}

AuditRecord load_audit_record(const std::string& path) {
    return audit_record_from_json(read_file(path));
}

}  // namespace deeptrace
