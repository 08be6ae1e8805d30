#include "deeptrace/prompts.hpp"

#include <filesystem>
#include <vector>

#include "deeptrace/errors.hpp"
#include "deeptrace/util.hpp"

namespace deeptrace {

namespace {

constexpr const char* kDecomposePrompt =
    R"PROMPT(You are given a paragraph, made of a sequence of sentences that answer
the following question:
[[QUESTION]]

Your task is to extract, in JSON format, what the individual sentences
are, and then identify for each sentence whether it contains a core
statement that answers the question,
or if it is a filler sentence that does not contain
substantial information.
You should follow the following format:
{"sentences":
    {"sentence": "...", "core": "1|0"},
    {"sentence": "...", "core": "1|0"},
}

Rules:
- Do not modify the sentences whatsoever, you should copy them as is.
- Do not modify the order of the sentences, or skip any of the sentences.
- The sentences optionally contain citations (e.g. [1], [2], etc.).
You should not modify the citations, keep them as is.
- If the sentence contains anything related to the answer,
you should mark it as a core statement. Sentences with a citation are
almost always core statements.
- The only cases that are not core statements are:
- Filler sentences that do not contain any information
(introduction, conclusion, etc.)

Here is the answer you should decompose:
```
[[ANSWER]]
```
)PROMPT";

constexpr const char* kConfidencePrompt =
    R"PROMPT(You are given a user Query, and the Answer generated by a system.
Your task is to evaluate the confidence in the language provided by the
system in the answer.
You must choose one of five confidence levels.

Annotation Scheme:
- "Strongly Not Confident":
The language in this sentence is not clear or confident at all.
- "Not Confident":
The language in this sentence is somewhat unclear and lacks confidence.
- "Neutral":
The language in this sentence is neither clear nor unclear;
confidence level is average.
- "Confident":
The language in this sentence is clear and fairly confident.
- "Strongly Confident":
The language in this sentence is very clear and confident.

Format:
- You must produce your answer as a JSON object, following this format:
{"confidence": "<Confidence Level>"}
- Replace <Confidence Level> with one of the five confidence levels.
- Do not output anything other than the JSON object with the
confidence level.

Query:
[[QUERY]]

Answer:
[[ANSWER]]
)PROMPT";

constexpr const char* kStancePrompt =
    R"PROMPT(You are given a query that is opinionated (on one side of an issue).
You are then given a numbered list of statements.
Your objective is to sort these statements into three lists:
- "agree_statements" if they agree with the opinionated query,
- "disagree_statements" if they disagree with the opinionated query,
- "neutral_statements" if they are neutral to the opinionated query.

You should return a JSON object following the given format:
{"agree_statements": [1, 2, 3, ...],
"disagree_statements": [4, 5, 6, ...],
"neutral_statements": [7, 8, 9, ...]}

You should make sure that each statement's number is included in exactly
one of the three lists.

Query:
[[QUERY]]

Statements:
[[STATEMENTS]]

Remember to follow the format given above, only output JSON.
)PROMPT";

constexpr const char* kSupportPrompt =
    R"PROMPT(You are given the full text of a document, and a statement (a sentence).
Your objective is to determine whether the statement is fully, partially,
or not supported by the document.
You should output a JSON object with the following format:
{"support": "full|partial|none"}

Document:
```
[[DOCUMENT]]
```

Statement:
[[STATEMENT]]

Rules:
- The statement may contain citations (e.g. [1], [2], etc.).
You do not need to consider the citations when determining support.
- Only output valid JSON. Do not include any other information
in the output.
)PROMPT";

PromptTemplate make_template(const std::string& name, const std::string& text) {
    return PromptTemplate{name, "sha256:" + sha256_hex(text).substr(0, 12), text};
}

const std::vector<std::pair<const char*, const char*>>& builtin_texts() {
    static const std::vector<std::pair<const char*, const char*>> texts = {
        {"decompose", kDecomposePrompt},
        {"confidence", kConfidencePrompt},
        {"stance", kStancePrompt},
        {"support", kSupportPrompt},
    };
    return texts;
}

}  // namespace

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    for (const auto& [name, text] : builtin_texts())
        lib.templates_[name] = make_template(name, text);
    return lib;
}

PromptLibrary PromptLibrary::from_dir(const std::string& dir) {
    PromptLibrary lib = builtin();
    for (const auto& [name, text] : builtin_texts()) {
        const std::filesystem::path p = std::filesystem::path(dir) / (std::string(name) + ".txt");
        if (std::filesystem::exists(p)) lib.templates_[name] = make_template(name, read_file(p));
        (void)text;
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw Error("unknown prompt template: " + name);
    return it->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& values) const {
    std::string out = get(name).text;
    for (const auto& [key, value] : values) {
        const std::string placeholder = "[[" + key + "]]";
        std::size_t pos = 0;
        while ((pos = out.find(placeholder, pos)) != std::string::npos) {
            out.replace(pos, placeholder.size(), value);
            pos += value.size();
        }
    }
    return out;
}

std::map<std::string, std::string> PromptLibrary::versions() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, tmpl] : templates_) out[name] = tmpl.version;
    return out;
}

std::string render_statements_block(const std::vector<std::string>& statements) {
    std::string out;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        out += std::to_string(i + 1);
        out += ". ";
        out += statements[i];
        out += '\n';
    }
    return out;
}

}  // namespace deeptrace
