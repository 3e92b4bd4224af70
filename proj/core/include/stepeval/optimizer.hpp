#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stepeval/cost.hpp"
#include "stepeval/prompt.hpp"
#include "stepeval/rubric.hpp"
#include "stepeval/trajectory.hpp"

namespace stepeval {

class JudgeBackend;  // judge.hpp

// One evaluation setting: which views, frames, prompt, model, and pricing a
// run uses. config_id() is a stable digest of the contents.
struct EvalConfig {
    std::vector<std::string> views;  // empty = keep all views
    FramePolicy frame_policy;
    PromptStrategy strategy = PromptStrategy::WholeTrajectory;
    std::string template_id = "whole_zero_shot";
    std::string model_id = "mock";
    std::optional<int> resolution;  // longest-edge pixels; downscale only
    CostModel cost_model;
    std::optional<double> cost_ceiling;  // per-run budget guard

    std::string config_id() const;
};

struct ConfigResult {
    EvalConfig config;
    double task_accuracy = 0.0;
    std::vector<double> per_subgoal_accuracy;
    double mean_cost = 0.0;
    double mean_latency_seconds = 0.0;
};

// Per-axis candidate lists; enumerate_configs takes their Cartesian product.
struct ConfigSpace {
    std::vector<std::vector<std::string>> views;
    std::vector<FramePolicy> frame_policies;
    std::vector<PromptStrategy> strategies;
    std::vector<std::string> template_ids;
    std::vector<std::string> model_ids;
    std::vector<std::optional<int>> resolutions;
    CostModel cost_model;
};

ConfigSpace load_config_space(const std::filesystem::path& path, const CostModel& pricing);

// Cartesian product, deduplicated, sorted lexicographically by config_id.
std::vector<EvalConfig> enumerate_configs(const ConfigSpace& space);

// Judges every labeled trajectory under the config and aggregates accuracy
// and mean cost/latency. Every trajectory must carry ground truth.
ConfigResult evaluate_config(const EvalConfig& config, JudgeBackend& backend,
                             const SubgoalRubric& rubric,
                             const std::vector<Trajectory>& labeled_trajectories,
                             const std::vector<PromptTemplate>& extra_templates = {},
                             int parallel = 1);

// Non-dominated set in (task_accuracy up, mean_cost down), ascending cost;
// equal points are both retained, ordered by config_id.
std::vector<ConfigResult> pareto_frontier(const std::vector<ConfigResult>& results);

// Highest task_accuracy among results with mean_cost <= budget; ties broken
// by lower cost, then config_id.
ConfigResult best_under_budget(const std::vector<ConfigResult>& results, double budget);

// Deterministic enumeration over supplied template variants under an
// otherwise-fixed config; ranked by task_accuracy descending.
std::vector<std::pair<PromptTemplate, double>> prompt_variant_search(
    const EvalConfig& base_config, const std::vector<PromptTemplate>& variants,
    JudgeBackend& backend, const SubgoalRubric& rubric,
    const std::vector<Trajectory>& labeled_trajectories, int parallel = 1);

}  // namespace stepeval
