#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stepeval/rubric.hpp"
#include "stepeval/trajectory.hpp"

namespace stepeval {

enum class PromptStrategy { WholeTrajectory, PerSubgoal, PerSubgoalWindowed };

std::string strategy_name(PromptStrategy s);
PromptStrategy parse_strategy(const std::string& text);

struct PromptTemplate {
    enum class Style { ZeroShot, FewShot };

    std::string id;
    Style style = Style::ZeroShot;
    std::string body;  // placeholders: {task_name} {subgoal_list} {subgoal_description} {answer_instruction}
    std::vector<std::pair<std::string, std::string>> few_shot_examples;  // (scenario, answer)

    bool whole_trajectory_compatible() const;
    bool per_subgoal_compatible() const;
};

struct RenderedPrompt {
    std::string text;
    int image_count = 0;
    std::optional<int> subgoal_scope;  // nullopt = all subgoals, else 1-based k
};

// The answer instruction pins the machine-parseable verdict grammar; see
// parse_verdict in judge.hpp for the matching reader.
std::string answer_instruction(int n);

RenderedPrompt render_whole_trajectory(const PromptTemplate& tmpl, const SubgoalRubric& rubric,
                                       const Trajectory& frames);

RenderedPrompt render_per_subgoal(const PromptTemplate& tmpl, const SubgoalRubric& rubric,
                                  int k, const Trajectory& frames);

// Built-in catalog: {whole_trajectory, per_subgoal} x {zero_shot, few_shot}.
std::vector<PromptTemplate> builtin_templates();

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path);

// Looks up by id across builtins plus extras; throws TemplateIncompatible
// when absent.
PromptTemplate find_template(const std::string& id,
                             const std::vector<PromptTemplate>& extras = {});

}  // namespace stepeval
