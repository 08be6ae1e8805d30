#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "deeptrace/corpus.hpp"
#include "deeptrace/errors.hpp"

using namespace deeptrace;

namespace {

std::string make_line(const std::string& id, const std::string& text,
                      const std::string& category) {
    return R"({"id":")" + id + R"(","text":")" + text + R"(","category":")" + category +
           "\"}\n";
}

std::string make_split_corpus(int n_debate, int n_expertise) {
    std::string out;
    for (int i = 0; i < n_debate; ++i)
        out += make_line("d" + std::to_string(i), "debate question " + std::to_string(i),
                         "debate");
    for (int i = 0; i < n_expertise; ++i)
        out += make_line("e" + std::to_string(i), "expertise question " + std::to_string(i),
                         "expertise");
    return out;
}

}  // namespace

TEST_CASE("corpus with the published two-category split loads fully") {
    const Corpus corpus = parse_corpus(make_split_corpus(168, 135), "full");
    CHECK(corpus.size() == 303);
    CHECK(filter_by_category(corpus, Category::Debate).size() == 168);
    CHECK(filter_by_category(corpus, Category::Expertise).size() == 135);
}

TEST_CASE("empty file is rejected") {
    CHECK_THROWS_AS(parse_corpus("", "empty"), EmptyCorpus);
    CHECK_THROWS_AS(parse_corpus("\n\n  \n", "blank"), EmptyCorpus);
}

TEST_CASE("duplicate ids are rejected") {
    const std::string text = make_line("q1", "first", "debate") +
                             make_line("q1", "second", "expertise");
    CHECK_THROWS_AS(parse_corpus(text, "dup"), DuplicateId);
}

TEST_CASE("malformed records carry their line number") {
    const std::string text = make_line("q1", "fine", "debate") + "{not json}\n";
    try {
        parse_corpus(text, "bad");
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
        CHECK(e.line() == 2);
    }

    const std::string missing = make_line("q1", "fine", "debate") + R"({"id":"q2","text":"x"})" + "\n";
    CHECK_THROWS_AS(parse_corpus(missing, "missing"), MalformedRecord);
    CHECK_THROWS_AS(parse_corpus(R"({"id":"q","text":"  ","category":"debate"})", "ws"),
                    MalformedRecord);
    CHECK_THROWS_AS(parse_corpus(R"({"id":"q","text":"x","category":"leading"})", "cat"),
                    MalformedRecord);
}

TEST_CASE("category parses case-insensitively") {
    const Corpus corpus =
        parse_corpus(make_line("a", "x", "DeBaTe") + make_line("b", "y", "EXPERTISE"), "case");
    CHECK(corpus.queries[0].category == Category::Debate);
    CHECK(corpus.queries[1].category == Category::Expertise);
}

TEST_CASE("filter preserves order and may be empty") {
    const std::string text = make_line("a", "1", "debate") + make_line("b", "2", "expertise") +
                             make_line("c", "3", "debate");
    const Corpus corpus = parse_corpus(text, "mixed");

    const Corpus debate = filter_by_category(corpus, Category::Debate);
    REQUIRE(debate.size() == 2);
    CHECK(debate.queries[0].id == "a");
    CHECK(debate.queries[1].id == "c");

    const Corpus only_exp = parse_corpus(make_line("x", "q", "expertise"), "exp");
    CHECK(filter_by_category(only_exp, Category::Debate).size() == 0);
}

TEST_CASE("category filters partition the corpus") {
    const Corpus corpus = parse_corpus(make_split_corpus(7, 5), "part");
    CHECK(filter_by_category(corpus, Category::Debate).size() +
              filter_by_category(corpus, Category::Expertise).size() ==
          corpus.size());
}

TEST_CASE("serialize then parse is the identity") {
    const std::string text = make_line("a", "one two", "debate") +
                             make_line("b", "three \\\"quoted\\\"", "expertise");
    const Corpus corpus = parse_corpus(text, "rt");
    const Corpus again = parse_corpus(serialize_corpus(corpus), "rt");
    REQUIRE(again.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(again.queries[i].id == corpus.queries[i].id);
        CHECK(again.queries[i].text == corpus.queries[i].text);
        CHECK(again.queries[i].category == corpus.queries[i].category);
    }
    CHECK(serialize_corpus(again) == serialize_corpus(corpus));
}
