#include "deeptrace/corpus.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>
#include <unordered_set>

#include "deeptrace/errors.hpp"
#include "deeptrace/util.hpp"

namespace deeptrace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* category_name(Category c) {
    return c == Category::Debate ? "debate" : "expertise";
}

Category parse_category(const std::string& s) {
    const std::string lc = to_lower(trim(s));
    if (lc == "debate") return Category::Debate;
    if (lc == "expertise") return Category::Expertise;
    throw Error("unknown category: \"" + s + "\"");
}

Corpus parse_corpus(const std::string& jsonl, const std::string& name) {
    Corpus corpus;
    corpus.name = name;
    std::unordered_set<std::string> seen;

    std::istringstream in(jsonl);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;

        json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (obj.is_discarded() || !obj.is_object())
            throw MalformedRecord(line_no, "not a JSON object");

        Query q;
        try {
            q.id = obj.at("id").get<std::string>();
            q.text = obj.at("text").get<std::string>();
            q.category = parse_category(obj.at("category").get<std::string>());
        } catch (const json::exception& e) {
            throw MalformedRecord(line_no, e.what());
        } catch (const Error& e) {
            throw MalformedRecord(line_no, e.what());
        }

        if (trim(q.text).empty()) throw MalformedRecord(line_no, "empty query text");
        if (!seen.insert(q.id).second) throw DuplicateId(q.id);
        corpus.queries.push_back(std::move(q));
    }

    if (corpus.queries.empty()) throw EmptyCorpus();
    return corpus;
}

Corpus load_corpus(const std::string& path) {
    return parse_corpus(read_file(path), std::filesystem::path(path).stem().string());
}

std::string serialize_corpus(const Corpus& corpus) {
    std::string out;
    for (const Query& q : corpus.queries) {
        ordered_json obj;
        obj["id"] = q.id;
        obj["text"] = q.text;
        obj["category"] = category_name(q.category);
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    atomic_write_file(path, serialize_corpus(corpus));
}

Corpus filter_by_category(const Corpus& corpus, Category category) {
    Corpus out;
    out.name = corpus.name;
    for (const Query& q : corpus.queries)
        if (q.category == category) out.queries.push_back(q);
    return out;
}

}  // namespace deeptrace
