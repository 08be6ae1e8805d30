#pragma once

#include <map>
#include <string>
#include <vector>

namespace deeptrace {

/// A judge instruction template. Placeholders look like [[QUERY]] and are
/// replaced verbatim (no escaping) at render time. The version is a content
/// hash so any edit to a template file shows up in run manifests.
struct PromptTemplate {
    std::string name;
    std::string version;
    std::string text;
};

class PromptLibrary {
public:
    /// The four built-in judge task templates: "decompose", "confidence",
    /// "stance", "support".
    static PromptLibrary builtin();

    /// Loads <name>.txt for each task from `dir`; missing files fall back to
    /// the built-in text.
    static PromptLibrary from_dir(const std::string& dir);

    const PromptTemplate& get(const std::string& name) const;

    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& values) const;

    /// name -> version, for the run manifest.
    std::map<std::string, std::string> versions() const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

/// "1. first\n2. second\n..." block for the stance prompt.
std::string render_statements_block(const std::vector<std::string>& statements);

}  // namespace deeptrace
