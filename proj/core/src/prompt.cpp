#include "stepeval/prompt.hpp"

#include <fstream>

#include <json.hpp>

#include "stepeval/errors.hpp"

namespace stepeval {

using nlohmann::ordered_json;

std::string strategy_name(PromptStrategy s) {
    switch (s) {
        case PromptStrategy::WholeTrajectory: return "whole_trajectory";
        case PromptStrategy::PerSubgoal: return "per_subgoal";
        case PromptStrategy::PerSubgoalWindowed: return "per_subgoal_windowed";
    }
    return "whole_trajectory";
}

PromptStrategy parse_strategy(const std::string& text) {
    if (text == "whole_trajectory") return PromptStrategy::WholeTrajectory;
    if (text == "per_subgoal") return PromptStrategy::PerSubgoal;
    if (text == "per_subgoal_windowed") return PromptStrategy::PerSubgoalWindowed;
    throw MalformedDocumentError("unknown prompt strategy: " + text);
}

namespace {

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

const char* kPlaceholders[] = {"{task_name}", "{subgoal_list}", "{subgoal_description}",
                               "{answer_instruction}"};

void check_filled(const std::string& text) {
    for (const char* ph : kPlaceholders) {
        if (text.find(ph) != std::string::npos)
            throw PlaceholderUnfilledError(ph);
    }
}

std::string few_shot_block(const PromptTemplate& tmpl) {
    if (tmpl.few_shot_examples.empty()) return "";
    std::string block = "Here are worked examples:\n\n";
    for (const auto& [scenario, answer] : tmpl.few_shot_examples) {
        block += "Scenario: " + scenario + "\nANSWER: " + answer + "\n\n";
    }
    block += "Now judge the query below.\n\n";
    return block;
}

}  // namespace

bool PromptTemplate::whole_trajectory_compatible() const {
    return body.find("{subgoal_list}") != std::string::npos &&
           count_occurrences(body, "{answer_instruction}") == 1;
}

bool PromptTemplate::per_subgoal_compatible() const {
    return body.find("{subgoal_description}") != std::string::npos &&
           count_occurrences(body, "{answer_instruction}") == 1;
}

std::string answer_instruction(int n) {
    if (n == 1) {
        return "Finish your reply with a final line of the exact form \"ANSWER: b\" "
               "where b is 1 if the subgoal was achieved and 0 otherwise.";
    }
    return "Finish your reply with a final line of the exact form \"ANSWER: b1 b2 ... b" +
           std::to_string(n) + "\" containing exactly " + std::to_string(n) +
           " space-separated values, each 0 or 1, where the i-th value is 1 if subgoal i "
           "was achieved and 0 otherwise.";
}

RenderedPrompt render_whole_trajectory(const PromptTemplate& tmpl, const SubgoalRubric& rubric,
                                       const Trajectory& frames) {
    if (!tmpl.whole_trajectory_compatible())
        throw TemplateIncompatibleError("template '" + tmpl.id +
                                        "' is not whole-trajectory compatible");

    std::string subgoal_list;
    for (const auto& sg : rubric.subgoals) {
        subgoal_list += std::to_string(sg.index) + ". " + sg.description + "\n";
    }

    std::string text = few_shot_block(tmpl) + tmpl.body;
    text = replace_all(text, "{task_name}", rubric.task_name);
    text = replace_all(text, "{subgoal_list}", subgoal_list);
    text = replace_all(text, "{answer_instruction}",
                       answer_instruction(int(rubric.size())));
    check_filled(text);

    RenderedPrompt prompt;
    prompt.text = std::move(text);
    prompt.image_count = int(frames.image_count());
    prompt.subgoal_scope = std::nullopt;
    return prompt;
}

RenderedPrompt render_per_subgoal(const PromptTemplate& tmpl, const SubgoalRubric& rubric,
                                  int k, const Trajectory& frames) {
    if (k < 1 || std::size_t(k) > rubric.size())
        throw IndexOutOfRangeError("k=" + std::to_string(k) + ", n=" +
                                   std::to_string(rubric.size()));
    if (!tmpl.per_subgoal_compatible())
        throw TemplateIncompatibleError("template '" + tmpl.id +
                                        "' is not per-subgoal compatible");

    std::string text = few_shot_block(tmpl) + tmpl.body;
    text = replace_all(text, "{task_name}", rubric.task_name);
    text = replace_all(text, "{subgoal_description}",
                       rubric.subgoals[std::size_t(k) - 1].description);
    text = replace_all(text, "{answer_instruction}", answer_instruction(1));
    check_filled(text);

    RenderedPrompt prompt;
    prompt.text = std::move(text);
    prompt.image_count = int(frames.image_count());
    prompt.subgoal_scope = k;
    return prompt;
}

std::vector<PromptTemplate> builtin_templates() {
    std::vector<PromptTemplate> out;

    PromptTemplate whole_zero;
    whole_zero.id = "whole_zero_shot";
    whole_zero.style = PromptTemplate::Style::ZeroShot;
    whole_zero.body =
        "You are judging a recorded robot attempt at the task \"{task_name}\".\n"
        "The attached images show the attempt in chronological order.\n"
        "The task decomposes into these subgoals:\n"
        "{subgoal_list}\n"
        "For each subgoal, decide from the images whether it was achieved.\n"
        "{answer_instruction}";
    out.push_back(whole_zero);

    PromptTemplate whole_few = whole_zero;
    whole_few.id = "whole_few_shot";
    whole_few.style = PromptTemplate::Style::FewShot;
    whole_few.few_shot_examples = {
        {"A pick-and-place attempt where the gripper closes on the block, lifts it, "
         "but drops it before the target zone. Subgoals: 1. grasp block 2. lift block "
         "3. place block on target.",
         "1 1 0"},
        {"A drawer-opening attempt where the gripper never reaches the handle. "
         "Subgoals: 1. reach handle 2. pull drawer open.",
         "0 0"},
    };
    out.push_back(whole_few);

    PromptTemplate per_zero;
    per_zero.id = "per_subgoal_zero_shot";
    per_zero.style = PromptTemplate::Style::ZeroShot;
    per_zero.body =
        "You are judging a recorded robot attempt at the task \"{task_name}\".\n"
        "The attached images show the relevant part of the attempt in chronological order.\n"
        "Decide from the images whether this single subgoal was achieved:\n"
        "{subgoal_description}\n"
        "{answer_instruction}";
    out.push_back(per_zero);

    PromptTemplate per_few = per_zero;
    per_few.id = "per_subgoal_few_shot";
    per_few.style = PromptTemplate::Style::FewShot;
    per_few.few_shot_examples = {
        {"Subgoal: gripper closes on the mug handle. The images show fingers wrapped "
         "around the handle and the mug moving with the arm.",
         "1"},
        {"Subgoal: water poured into the bowl. The images show the cup tilted away "
         "from the bowl with the bowl still empty.",
         "0"},
    };
    out.push_back(per_few);

    return out;
}

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw FileMissingError(path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }

    auto parse_one = [&](const ordered_json& entry) {
        PromptTemplate tmpl;
        tmpl.id = entry.at("id").get<std::string>();
        const auto style = entry.at("style").get<std::string>();
        if (style == "zero_shot") {
            tmpl.style = PromptTemplate::Style::ZeroShot;
        } else if (style == "few_shot") {
            tmpl.style = PromptTemplate::Style::FewShot;
        } else {
            throw MalformedDocumentError("unknown template style: " + style);
        }
        tmpl.body = entry.at("body").get<std::string>();
        if (entry.contains("few_shot_examples")) {
            for (const auto& pair : entry["few_shot_examples"]) {
                tmpl.few_shot_examples.emplace_back(pair.at(0).get<std::string>(),
                                                    pair.at(1).get<std::string>());
            }
        }
        return tmpl;
    };

    std::vector<PromptTemplate> out;
    try {
        if (doc.is_array()) {
            for (const auto& entry : doc) out.push_back(parse_one(entry));
        } else {
            out.push_back(parse_one(doc));
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }
    return out;
}

PromptTemplate find_template(const std::string& id, const std::vector<PromptTemplate>& extras) {
    for (const auto& tmpl : extras)
        if (tmpl.id == id) return tmpl;
    for (const auto& tmpl : builtin_templates())
        if (tmpl.id == id) return tmpl;
    throw TemplateIncompatibleError("no template with id '" + id + "'");
}

}  // namespace stepeval
