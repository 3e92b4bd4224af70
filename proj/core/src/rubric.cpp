#include "stepeval/rubric.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "stepeval/errors.hpp"

namespace stepeval {

using nlohmann::ordered_json;

void validate_rubric(const SubgoalRubric& rubric) {
    if (rubric.subgoals.empty())
        throw InvalidRubricError("subgoals: empty list");
    if (rubric.subgoals.size() > kMaxSubgoals)
        throw InvalidRubricError("subgoals: more than " + std::to_string(kMaxSubgoals) +
                                 " entries");
    std::unordered_set<std::string> names;
    int expected_index = 1;
    for (const auto& sg : rubric.subgoals) {
        if (sg.index != expected_index)
            throw InvalidRubricError("index: expected " + std::to_string(expected_index) +
                                     ", got " + std::to_string(sg.index));
        if (sg.name.empty())
            throw InvalidRubricError("name: empty at index " + std::to_string(sg.index));
        if (!names.insert(sg.name).second)
            throw InvalidRubricError("name: duplicate '" + sg.name + "'");
        if (sg.description.empty())
            throw InvalidRubricError("description: empty for subgoal '" + sg.name + "'");
        ++expected_index;
    }
}

SubgoalRubric load_rubric(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw FileMissingError(path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }

    SubgoalRubric rubric;
    try {
        rubric.task_name = doc.at("task_name").get<std::string>();
        int index = 1;
        for (const auto& entry : doc.at("subgoals")) {
            Subgoal sg;
            sg.index = index++;
            sg.name = entry.at("name").get<std::string>();
            sg.description = entry.at("description").get<std::string>();
            rubric.subgoals.push_back(std::move(sg));
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }
    validate_rubric(rubric);
    return rubric;
}

void save_rubric(const SubgoalRubric& rubric, const std::filesystem::path& path) {
    ordered_json doc;
    doc["task_name"] = rubric.task_name;
    doc["subgoals"] = ordered_json::array();
    for (const auto& sg : rubric.subgoals) {
        doc["subgoals"].push_back({{"name", sg.name}, {"description", sg.description}});
    }
    std::ofstream out(path);
    if (!out)
        throw FileMissingError(path.string());
    out << doc.dump(2) << '\n';
}

BitVector validate_outcome_vector(const SubgoalRubric& rubric, const BitVector& y) {
    if (y.size() != rubric.size())
        throw LengthMismatchError(rubric.size(), y.size());
    for (auto v : y) {
        if (v != 0 && v != 1)
            throw NonBinaryEntryError("entry " + std::to_string(int(v)));
    }
    return y;
}

}  // namespace stepeval
