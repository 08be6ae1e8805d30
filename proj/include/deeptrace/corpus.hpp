#pragma once

#include <string>
#include <vector>

namespace deeptrace {

enum class Category { Debate, Expertise };

const char* category_name(Category c);
/// Case-insensitive parse of "debate" / "expertise".
Category parse_category(const std::string& s);

struct Query {
    std::string id;
    std::string text;
    Category category = Category::Debate;
};

/// Ordered, id-unique set of audit queries. Immutable once loaded.
struct Corpus {
    std::string name;
    std::vector<Query> queries;

    std::size_t size() const { return queries.size(); }
};

/// Loads a JSON-lines corpus: one {"id","text","category"} object per line.
/// Blank lines are permitted and skipped.
Corpus load_corpus(const std::string& path);

/// Parses corpus content directly; `name` labels the result.
Corpus parse_corpus(const std::string& jsonl, const std::string& name);

std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::string& path);

/// Order-preserving category filter. May return an empty corpus.
Corpus filter_by_category(const Corpus& corpus, Category category);

}  // namespace deeptrace
