#pragma once

// Shared end-to-end fixture: a 3-query corpus (plus one query with no
// transcript), two engines' transcripts, and a local page server. Every
// judge outcome is reachable deterministically through the mock judge's
// heuristics, so whole runs are pure functions of these files.

#include <nlohmann/json.hpp>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "deeptrace/util.hpp"
#include "test_http.hpp"

namespace e2e {

inline std::string make_temp_dir(const std::string& prefix) {
    static std::mt19937_64 rng{std::random_device{}()};
    const auto dir = std::filesystem::temp_directory_path() /
                     (prefix + "_" + std::to_string(rng()));
    std::filesystem::create_directories(dir);
    return dir.string();
}

class Fixture {
public:
    std::string root;
    std::string corpus_path;
    std::string transcripts_dir;
    std::string base_url;
    testhttp::PageServer server;

    void build() {
        root = make_temp_dir("deeptrace_e2e");
        server.add_page("/pages/air",
                        200,
                        "City air quality improved after traffic restrictions. "
                        "Proponents cite cleaner air in car-free zones. "
                        "Proponents say downtown bans reduce pollution sharply.");
        server.add_page("/pages/shops",
                        200,
                        "Retail revenue held steady in pedestrian zones. "
                        "However, some shop owners report fewer impulse visits.");
        server.add_page("/pages/remote",
                        200,
                        "Remote employees completed more focused work per week. "
                        "Office distractions fell in hybrid trials.");
        server.add_page("/pages/hydro",
                        200,
                        "Conceptual rainfall-runoff models remain popular for streamflow "
                        "forecasting. Machine learning models are gaining ground.");
        base_url = server.start();

        corpus_path = root + "/corpus.jsonl";
        std::string corpus;
        corpus += R"({"id":"d1","text":"Should cities ban cars from downtown areas?","category":"debate"})" "\n";
        corpus += R"({"id":"d2","text":"Is remote work better for productivity?","category":"debate"})" "\n";
        corpus += R"({"id":"e1","text":"Which models are used for streamflow forecasting?","category":"expertise"})" "\n";
        corpus += R"({"id":"d9","text":"Should schools adopt year-round calendars?","category":"debate"})" "\n";
        deeptrace::atomic_write_file(corpus_path, corpus);

        transcripts_dir = root + "/transcripts";
        std::filesystem::create_directories(transcripts_dir);

        write_transcript(
            "d1", "alpha",
            "Proponents say downtown bans reduce pollution sharply[1]. "
            "However, some shop owners report fewer impulse visits[2]. "
            "The evidence on transit ridership is still emerging[3]. "
            "I hope this helps!",
            {page("air"), page("shops"), page("dead")});
        write_transcript(
            "d1", "beta",
            "Downtown bans might work in dense cities[1]. "
            "Proponents cite cleaner air in car-free zones[1][2]. "
            "Congestion data remains mixed[2]. "
            "Thanks for asking!",
            {page("air"), page("shops")});
        write_transcript(
            "d2", "alpha",
            "Remote employees completed more focused work per week[1]. "
            "Advocates definitely point to fewer office distractions[1]. "
            "In summary, the benefits are clear.",
            {page("remote"), page("shops")});
        write_transcript(
            "d2", "beta",
            "Hybrid trials show mixed productivity outcomes[1]. "
            "However, commuting time savings are real[2]. "
            "Critics argue remote culture weakens mentoring[2].",
            {page("remote"), page("dead")});
        write_transcript(
            "e1", "alpha",
            "Conceptual rainfall-runoff models remain popular for streamflow forecasting[1]. "
            "Machine learning models are gaining ground[1][2].",
            {page("hydro"), page("shops")});
        write_transcript(
            "e1", "beta",
            "Streamflow forecasts often combine physical and statistical approaches[1]. "
            "Conceptual rainfall-runoff models remain popular for streamflow forecasting[1]. "
            "I hope this helps!",
            {page("hydro")});
    }

private:
    std::string page(const std::string& name) const { return base_url + "/pages/" + name; }

    void write_transcript(const std::string& query_id, const std::string& engine,
                          const std::string& answer, const std::vector<std::string>& urls) {
        nlohmann::ordered_json obj;
        obj["query_id"] = query_id;
        obj["engine"] = engine;
        obj["answer_text"] = answer;
        obj["listed_sources"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < urls.size(); ++i)
            obj["listed_sources"].push_back(
                {{"index", i + 1}, {"url", urls[i]}});
        obj["captured_at"] = "2026-01-15T12:00:00Z";
        deeptrace::atomic_write_file(
            transcripts_dir + "/" + query_id + "__" + engine + ".json", obj.dump(2));
    }
};

}  // namespace e2e
