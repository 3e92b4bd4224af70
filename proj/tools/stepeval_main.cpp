// stepeval: post-hoc subgoal-level evaluation of recorded robot trajectories.
//
// Subcommands: validate, run, estimate, optimize.
// Exit codes: 0 success, 2 validation error, 3 infeasible optimization,
// 4 backend failure, 5 verdict parse failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stepeval/errors.hpp"
#include "stepeval/judge.hpp"
#include "stepeval/metrics.hpp"
#include "stepeval/optimizer.hpp"
#include "stepeval/report.hpp"
#include "stepeval/runner.hpp"

namespace fs = std::filesystem;
using namespace stepeval;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitBackend = 4;
constexpr int kExitParse = 5;

int exit_code_for(const Error& e) {
    const std::string& code = e.code();
    if (code == "NoFeasibleConfig") return kExitInfeasible;
    if (code == "BackendUnavailable" || code == "AuthRejected" || code == "ProviderError" ||
        code == "CacheMiss" || code == "CacheCorrupt")
        return kExitBackend;
    if (code == "VerdictParseError") return kExitParse;
    return kExitValidation;
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value ? value : fallback;
}

struct BackendArgs {
    std::string kind = "mock";
    std::string endpoint;
    std::string cache;
    std::string flip;  // comma-separated epsilons for the mock
    std::uint64_t seed = 0;
    bool resume = false;
};

struct ConfigArgs {
    std::string views;
    std::string frames = "all";
    std::string strategy = "whole_trajectory";
    std::string template_id = "whole_zero_shot";
    std::string model = "mock";
    int resolution = 0;  // 0 = native
    std::string pricing;
    std::string templates_file;
    std::string config_file;
    double budget_ceiling = 0.0;  // 0 = none
};

void add_config_flags(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.config_file, "Evaluation config JSON file");
    cmd->add_option("--views", args.views, "Comma-separated camera views (default: all)");
    cmd->add_option("--frames", args.frames, "Frame policy: all | stride:K | keyframes:K");
    cmd->add_option("--strategy", args.strategy,
                    "whole_trajectory | per_subgoal | per_subgoal_windowed");
    cmd->add_option("--template", args.template_id, "Prompt template id");
    cmd->add_option("--model", args.model, "Model id sent to the backend");
    cmd->add_option("--resolution", args.resolution, "Longest-edge downscale in pixels");
    cmd->add_option("--pricing", args.pricing, "Pricing JSON file");
    cmd->add_option("--templates", args.templates_file, "Custom prompt templates JSON file");
}

void add_backend_flags(CLI::App* cmd, BackendArgs& args) {
    cmd->add_option("--backend", args.kind, "http | mock | replay")
        ->check(CLI::IsMember({"http", "mock", "replay"}));
    cmd->add_option("--endpoint", args.endpoint, "Chat-completions endpoint URL");
    cmd->add_option("--cache", args.cache, "Verdict cache file (replay/record)");
    cmd->add_option("--flip", args.flip, "Mock flip probabilities, comma-separated");
    cmd->add_option("--seed", args.seed, "Mock judge seed");
    cmd->add_flag("--resume", args.resume, "Serve previously cached verdicts, record the rest");
}

EvalConfig build_config(const ConfigArgs& args) {
    if (!args.config_file.empty()) {
        std::ifstream in(args.config_file);
        if (!in)
            throw FileMissingError(args.config_file);
        nlohmann::ordered_json doc;
        try {
            doc = nlohmann::ordered_json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedDocumentError(args.config_file + ": " + e.what());
        }
        EvalConfig config;
        config.views = doc.value("views", std::vector<std::string>{});
        config.frame_policy = FramePolicy::parse(doc.value("frame_policy", std::string("all")));
        config.strategy = parse_strategy(doc.value("strategy", std::string("whole_trajectory")));
        config.template_id = doc.value("template_id", std::string("whole_zero_shot"));
        config.model_id = doc.value("model_id", std::string("mock"));
        if (doc.contains("resolution") && !doc["resolution"].is_null())
            config.resolution = doc["resolution"].get<int>();
        return config;
    }
    EvalConfig config;
    config.views = split_csv(args.views);
    config.frame_policy = FramePolicy::parse(args.frames);
    config.strategy = parse_strategy(args.strategy);
    config.template_id = args.template_id;
    config.model_id = args.model;
    if (args.resolution > 0) config.resolution = args.resolution;
    return config;
}

std::vector<double> parse_flip(const std::string& text, std::size_t n) {
    if (text.empty()) return std::vector<double>(n, 0.0);
    std::vector<double> out;
    for (const auto& item : split_csv(text)) out.push_back(std::stod(item));
    if (out.size() == 1 && n > 1) out.assign(n, out[0]);
    return out;
}

std::unique_ptr<JudgeBackend> build_backend(const BackendArgs& args, const EvalConfig& config,
                                            std::size_t n, const fs::path& out_dir) {
    std::unique_ptr<JudgeBackend> backend;
    if (args.kind == "mock") {
        MockJudgeSpec spec;
        spec.flip_probabilities = parse_flip(args.flip, n);
        spec.seed = args.seed;
        backend = mock_judge(spec);
    } else if (args.kind == "http") {
        HttpBackendOptions options;
        options.endpoint = args.endpoint.empty() ? env_or("STEPEVAL_ENDPOINT", "")
                                                 : args.endpoint;
        if (options.endpoint.empty())
            throw BackendUnavailableError("no endpoint (use --endpoint or STEPEVAL_ENDPOINT)");
        options.model_id = config.model_id;
        options.api_key = env_or("STEPEVAL_API_KEY", "");
        options.resolution = config.resolution;
        backend = http_backend(options);
    } else {  // replay
        fs::path cache = args.cache.empty() ? out_dir / "cache.jsonl" : fs::path(args.cache);
        return replay_backend(cache, ReplayMode::Replay);
    }

    if (args.resume || args.kind == "http") {
        fs::path cache = args.cache.empty() ? out_dir / "cache.jsonl" : fs::path(args.cache);
        backend = replay_backend(cache, ReplayMode::Record, std::move(backend));
    }
    return backend;
}

std::vector<PromptTemplate> load_extra_templates(const ConfigArgs& args) {
    if (args.templates_file.empty()) return {};
    return load_templates(args.templates_file);
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& rubric_path, const std::string& manifest_path) {
    auto rubric = load_rubric(rubric_path);
    auto trajectories = load_manifest(manifest_path, rubric);

    std::size_t frames = 0, labeled = 0;
    std::set<std::string> views;
    for (const auto& traj : trajectories) {
        frames += traj.frames.size();
        if (traj.ground_truth) ++labeled;
        for (const auto& frame : traj.frames)
            for (const auto& [view, ref] : frame.images) views.insert(view);
    }
    std::string view_list;
    for (const auto& v : views) {
        if (!view_list.empty()) view_list += ",";
        view_list += v;
    }
    std::cout << "task=" << rubric.task_name << " n=" << rubric.size() << " N="
              << trajectories.size() << " frames=" << frames << " labeled=" << labeled
              << " views=" << view_list << "\n";
    return 0;
}

int cmd_run(const std::string& rubric_path, const std::string& manifest_path,
            const ConfigArgs& config_args, const BackendArgs& backend_args,
            const std::string& out_dir, int parallel, const std::string& policy_name) {
    auto rubric = load_rubric(rubric_path);
    auto trajectories = load_manifest(manifest_path, rubric);
    auto config = build_config(config_args);
    if (!config_args.pricing.empty()) config.cost_model = load_pricing(config_args.pricing);
    auto extras = load_extra_templates(config_args);

    fs::path out(out_dir);
    fs::create_directories(out);
    auto backend = build_backend(backend_args, config, rubric.size(), out);

    auto verdicts = evaluate_batch(*backend, config, rubric, trajectories, extras, parallel);
    auto report = build_report(rubric, config, verdicts, trajectories);

    std::ofstream(out / "report.json") << report_to_json(report);
    const std::string markdown = render_markdown(report);
    std::ofstream(out / "report.md") << markdown;
    if (!policy_name.empty())
        std::ofstream(out / "leaderboard.jsonl") << export_leaderboard(report, policy_name);

    // Headline is the markdown's first body line.
    std::istringstream lines(markdown);
    std::string line;
    std::getline(lines, line);  // title
    std::getline(lines, line);  // blank
    std::getline(lines, line);
    std::cout << line << "\n";
    std::cout << "report: " << (out / "report.json").string() << "\n";
    return 0;
}

int cmd_estimate(const std::string& rubric_path, const std::string& manifest_path,
                 const ConfigArgs& config_args, const std::string& space_path) {
    auto rubric = load_rubric(rubric_path);
    auto trajectories = load_manifest(manifest_path, rubric);
    if (trajectories.empty())
        throw EmptyInputError("manifest has no trajectories");
    const auto& sample = trajectories.front();
    CostModel pricing =
        config_args.pricing.empty() ? CostModel{} : load_pricing(config_args.pricing);
    auto extras = load_extra_templates(config_args);

    std::vector<EvalConfig> configs;
    if (!space_path.empty()) {
        configs = enumerate_configs(load_config_space(space_path, pricing));
    } else {
        auto config = build_config(config_args);
        config.cost_model = pricing;
        configs.push_back(std::move(config));
    }

    std::cout << "config_id          strategy              views  per_trajectory  batch_total\n";
    for (const auto& config : configs) {
        const double per_traj = project_budget(pricing, config, rubric, sample, extras);
        std::printf("%s  %-20s  %-5zu  %14.6f  %12.6f\n", config.config_id().c_str(),
                    strategy_name(config.strategy).c_str(),
                    config.views.empty() ? std::size_t(0) : config.views.size(), per_traj,
                    per_traj * double(trajectories.size()));
    }
    return 0;
}

int cmd_optimize(const std::string& rubric_path, const std::string& manifest_path,
                 const std::string& space_path, const ConfigArgs& config_args,
                 const BackendArgs& backend_args, const std::string& budget_text,
                 const std::string& out_dir, int parallel) {
    auto rubric = load_rubric(rubric_path);
    auto trajectories = load_manifest(manifest_path, rubric);
    for (const auto& traj : trajectories)
        if (!traj.ground_truth)
            throw MissingGroundTruthError(traj.id);

    CostModel pricing =
        config_args.pricing.empty() ? CostModel{} : load_pricing(config_args.pricing);
    auto space = load_config_space(space_path, pricing);
    auto configs = enumerate_configs(space);
    auto extras = load_extra_templates(config_args);

    fs::path out(out_dir);
    fs::create_directories(out);

    std::vector<ConfigResult> results;
    for (const auto& config : configs) {
        auto backend = build_backend(backend_args, config, rubric.size(), out);
        results.push_back(
            evaluate_config(config, *backend, rubric, trajectories, extras, parallel));
    }

    nlohmann::ordered_json results_doc = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        results_doc.push_back({{"config_id", r.config.config_id()},
                               {"strategy", strategy_name(r.config.strategy)},
                               {"template_id", r.config.template_id},
                               {"model_id", r.config.model_id},
                               {"task_accuracy", r.task_accuracy},
                               {"per_subgoal_accuracy", r.per_subgoal_accuracy},
                               {"mean_cost", r.mean_cost},
                               {"mean_latency_seconds", r.mean_latency_seconds}});
    }
    std::ofstream(out / "config_results.json") << results_doc.dump(2) << "\n";

    auto frontier = pareto_frontier(results);
    std::cout << "Pareto frontier (" << frontier.size() << " of " << results.size()
              << " configs):\n";
    std::cout << "config_id          A_task   mean_cost\n";
    for (const auto& r : frontier)
        std::printf("%s  %.4f  %10.6f\n", r.config.config_id().c_str(), r.task_accuracy,
                    r.mean_cost);

    double budget = budget_text == "inf" ? std::numeric_limits<double>::infinity()
                                         : std::stod(budget_text);
    auto best = best_under_budget(results, budget);
    std::cout << "selected: " << best.config.config_id() << " A_task=" << best.task_accuracy
              << " mean_cost=" << best.mean_cost << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subgoal-level evaluation of recorded robot-manipulation trajectories"};
    app.require_subcommand(1);

    std::string rubric_path, manifest_path, out_dir = "stepeval_out", space_path;
    std::string budget = "inf", policy_name;
    int parallel = 4;
    ConfigArgs config_args;
    BackendArgs backend_args;

    auto* validate = app.add_subcommand("validate", "Cross-validate rubric and trajectories");
    validate->add_option("--rubric", rubric_path)->required();
    validate->add_option("--manifest", manifest_path)->required();

    auto* run = app.add_subcommand("run", "Judge every trajectory and write reports");
    run->add_option("--rubric", rubric_path)->required();
    run->add_option("--manifest", manifest_path)->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--parallel", parallel, "Concurrent trajectory evaluations");
    run->add_option("--policy-name", policy_name, "Also write a leaderboard export line");
    add_config_flags(run, config_args);
    add_backend_flags(run, backend_args);

    auto* estimate = app.add_subcommand("estimate", "Project per-trajectory cost, no calls");
    estimate->add_option("--rubric", rubric_path)->required();
    estimate->add_option("--manifest", manifest_path)->required();
    estimate->add_option("--space", space_path, "Config-space JSON (one row per config)");
    add_config_flags(estimate, config_args);

    auto* optimize = app.add_subcommand("optimize", "Search configs, print Pareto frontier");
    optimize->add_option("--rubric", rubric_path)->required();
    optimize->add_option("--manifest", manifest_path)->required();
    optimize->add_option("--space", space_path)->required();
    optimize->add_option("--budget", budget, "Per-trajectory budget, or 'inf'");
    optimize->add_option("--out", out_dir, "Output directory");
    optimize->add_option("--parallel", parallel);
    add_config_flags(optimize, config_args);
    add_backend_flags(optimize, backend_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(rubric_path, manifest_path);
        if (run->parsed())
            return cmd_run(rubric_path, manifest_path, config_args, backend_args, out_dir,
                           parallel, policy_name);
        if (estimate->parsed())
            return cmd_estimate(rubric_path, manifest_path, config_args, space_path);
        if (optimize->parsed())
            return cmd_optimize(rubric_path, manifest_path, space_path, config_args,
                                backend_args, budget, out_dir, parallel);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
