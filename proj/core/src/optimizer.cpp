#include "stepeval/optimizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "stepeval/digest.hpp"
#include "stepeval/errors.hpp"
#include "stepeval/judge.hpp"
#include "stepeval/metrics.hpp"
#include "stepeval/runner.hpp"

namespace stepeval {

using nlohmann::ordered_json;

std::string EvalConfig::config_id() const {
    ordered_json doc;
    doc["views"] = views;
    doc["frame_policy"] = frame_policy.describe();
    doc["strategy"] = strategy_name(strategy);
    doc["template_id"] = template_id;
    doc["model_id"] = model_id;
    doc["resolution"] = resolution ? ordered_json(*resolution) : ordered_json(nullptr);
    doc["alpha"] = cost_model.alpha_per_1k_tokens;
    doc["beta"] = cost_model.beta_per_image;
    doc["currency"] = cost_model.currency_code;
    return hex64(fnv1a64(doc.dump()));
}

ConfigSpace load_config_space(const std::filesystem::path& path, const CostModel& pricing) {
    std::ifstream in(path);
    if (!in)
        throw FileMissingError(path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }

    ConfigSpace space;
    space.cost_model = pricing;
    try {
        for (const auto& views : doc.at("views"))
            space.views.push_back(views.get<std::vector<std::string>>());
        for (const auto& policy : doc.at("frame_policies"))
            space.frame_policies.push_back(FramePolicy::parse(policy.get<std::string>()));
        for (const auto& strategy : doc.at("strategies"))
            space.strategies.push_back(parse_strategy(strategy.get<std::string>()));
        space.template_ids = doc.at("templates").get<std::vector<std::string>>();
        space.model_ids = doc.at("models").get<std::vector<std::string>>();
        if (doc.contains("resolutions")) {
            for (const auto& res : doc["resolutions"]) {
                if (res.is_null())
                    space.resolutions.push_back(std::nullopt);
                else
                    space.resolutions.push_back(res.get<int>());
            }
        } else {
            space.resolutions.push_back(std::nullopt);
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }
    return space;
}

std::vector<EvalConfig> enumerate_configs(const ConfigSpace& space) {
    if (space.views.empty()) throw EmptyAxisError("views");
    if (space.frame_policies.empty()) throw EmptyAxisError("frame_policies");
    if (space.strategies.empty()) throw EmptyAxisError("strategies");
    if (space.template_ids.empty()) throw EmptyAxisError("templates");
    if (space.model_ids.empty()) throw EmptyAxisError("models");
    if (space.resolutions.empty()) throw EmptyAxisError("resolutions");

    std::vector<EvalConfig> configs;
    for (const auto& views : space.views)
        for (const auto& policy : space.frame_policies)
            for (const auto& strategy : space.strategies)
                for (const auto& template_id : space.template_ids)
                    for (const auto& model_id : space.model_ids)
                        for (const auto& resolution : space.resolutions) {
                            EvalConfig config;
                            config.views = views;
                            config.frame_policy = policy;
                            config.strategy = strategy;
                            config.template_id = template_id;
                            config.model_id = model_id;
                            config.resolution = resolution;
                            config.cost_model = space.cost_model;
                            configs.push_back(std::move(config));
                        }

    std::sort(configs.begin(), configs.end(), [](const EvalConfig& a, const EvalConfig& b) {
        return a.config_id() < b.config_id();
    });
    configs.erase(std::unique(configs.begin(), configs.end(),
                              [](const EvalConfig& a, const EvalConfig& b) {
                                  return a.config_id() == b.config_id();
                              }),
                  configs.end());
    return configs;
}

ConfigResult evaluate_config(const EvalConfig& config, JudgeBackend& backend,
                             const SubgoalRubric& rubric,
                             const std::vector<Trajectory>& labeled_trajectories,
                             const std::vector<PromptTemplate>& extra_templates,
                             int parallel) {
    if (labeled_trajectories.empty())
        throw EmptyInputError("no labeled trajectories");
    for (const auto& traj : labeled_trajectories)
        if (!traj.ground_truth)
            throw MissingGroundTruthError(traj.id);

    auto verdicts = evaluate_batch(backend, config, rubric, labeled_trajectories,
                                   extra_templates, parallel);

    std::vector<BitVector> predicted, truth;
    predicted.reserve(verdicts.size());
    truth.reserve(verdicts.size());
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        predicted.push_back(verdicts[i].predictions);
        truth.push_back(*labeled_trajectories[i].ground_truth);
    }

    ConfigResult result;
    result.config = config;
    result.task_accuracy = task_eval_accuracy(predicted, truth);
    result.per_subgoal_accuracy = per_subgoal_accuracy(predicted, truth);

    double total_cost = 0.0, total_latency = 0.0;
    for (const auto& v : verdicts) {
        total_cost += trajectory_cost(config.cost_model, v.prompt_tokens, v.image_count);
        total_latency += v.latency_seconds;
    }
    result.mean_cost = total_cost / double(verdicts.size());
    result.mean_latency_seconds = total_latency / double(verdicts.size());
    return result;
}

std::vector<ConfigResult> pareto_frontier(const std::vector<ConfigResult>& results) {
    if (results.empty())
        throw EmptyInputError("no config results");

    std::vector<ConfigResult> frontier;
    for (const auto& candidate : results) {
        bool dominated = false;
        for (const auto& other : results) {
            const bool geq_acc = other.task_accuracy >= candidate.task_accuracy;
            const bool leq_cost = other.mean_cost <= candidate.mean_cost;
            const bool strict = other.task_accuracy > candidate.task_accuracy ||
                                other.mean_cost < candidate.mean_cost;
            if (geq_acc && leq_cost && strict) {
                dominated = true;
                break;
            }
        }
        if (!dominated) frontier.push_back(candidate);
    }
    std::sort(frontier.begin(), frontier.end(), [](const ConfigResult& a, const ConfigResult& b) {
        if (a.mean_cost != b.mean_cost) return a.mean_cost < b.mean_cost;
        return a.config.config_id() < b.config.config_id();
    });
    return frontier;
}

ConfigResult best_under_budget(const std::vector<ConfigResult>& results, double budget) {
    if (results.empty())
        throw EmptyInputError("no config results");

    const ConfigResult* best = nullptr;
    double min_cost = std::numeric_limits<double>::infinity();
    for (const auto& result : results) {
        min_cost = std::min(min_cost, result.mean_cost);
        if (result.mean_cost > budget) continue;
        if (!best || result.task_accuracy > best->task_accuracy ||
            (result.task_accuracy == best->task_accuracy &&
             (result.mean_cost < best->mean_cost ||
              (result.mean_cost == best->mean_cost &&
               result.config.config_id() < best->config.config_id())))) {
            best = &result;
        }
    }
    if (!best)
        throw NoFeasibleConfigError(budget, min_cost);
    return *best;
}

std::vector<std::pair<PromptTemplate, double>> prompt_variant_search(
    const EvalConfig& base_config, const std::vector<PromptTemplate>& variants,
    JudgeBackend& backend, const SubgoalRubric& rubric,
    const std::vector<Trajectory>& labeled_trajectories, int parallel) {
    if (variants.empty())
        throw EmptyInputError("no template variants");

    std::vector<std::pair<PromptTemplate, double>> ranked;
    std::vector<std::string> config_ids;
    for (const auto& variant : variants) {
        EvalConfig config = base_config;
        config.template_id = variant.id;
        auto result = evaluate_config(config, backend, rubric, labeled_trajectories,
                                      {variant}, parallel);
        ranked.emplace_back(variant, result.task_accuracy);
        config_ids.push_back(config.config_id());
    }

    std::vector<std::size_t> order(ranked.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ranked[a].second != ranked[b].second) return ranked[a].second > ranked[b].second;
        return config_ids[a] < config_ids[b];
    });

    std::vector<std::pair<PromptTemplate, double>> out;
    for (auto i : order) out.push_back(ranked[i]);
    return out;
}

}  // namespace stepeval
