#include "stepeval/cost.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "stepeval/errors.hpp"
#include "stepeval/optimizer.hpp"

namespace stepeval {

using nlohmann::ordered_json;

CostModel load_pricing(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw FileMissingError(path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }
    CostModel model;
    try {
        model.currency_code = doc.value("currency", "USD");
        model.alpha_per_1k_tokens = doc.at("alpha_per_1k_tokens").get<double>();
        model.beta_per_image = doc.at("beta_per_image").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }
    if (model.alpha_per_1k_tokens < 0 || model.beta_per_image < 0)
        throw MalformedDocumentError(path.string() + ": negative pricing");
    return model;
}

double trajectory_cost(const CostModel& model, long long tokens, long long images) {
    return model.alpha_per_1k_tokens * double(tokens) / 1000.0 +
           model.beta_per_image * double(images);
}

long long estimate_tokens(const std::string& text) {
    return (long long)((text.size() + 3) / 4);
}

long long estimate_tokens(const RenderedPrompt& prompt) {
    return estimate_tokens(prompt.text);
}

BatchCostSummary batch_cost_summary(const std::vector<CostRecord>& records) {
    if (records.empty())
        throw EmptyInputError("no cost records");
    BatchCostSummary summary;
    summary.count = records.size();
    for (const auto& r : records) {
        summary.total_cost += r.cost;
        summary.total_latency_seconds += r.latency_seconds;
    }
    summary.mean_cost = summary.total_cost / double(summary.count);
    summary.mean_latency_seconds = summary.total_latency_seconds / double(summary.count);
    return summary;
}

double project_budget(const CostModel& model, const EvalConfig& config,
                      const SubgoalRubric& rubric, const Trajectory& sample,
                      const std::vector<PromptTemplate>& extra_templates) {
    const auto tmpl = find_template(config.template_id, extra_templates);
    Trajectory prepared = config.views.empty() ? sample : select_views(sample, config.views);
    prepared = sample_frames(prepared, config.frame_policy);

    long long tokens = 0, images = 0;
    const int n = int(rubric.size());
    switch (config.strategy) {
        case PromptStrategy::WholeTrajectory: {
            auto prompt = render_whole_trajectory(tmpl, rubric, prepared);
            tokens = estimate_tokens(prompt);
            images = (long long)(prepared.image_count());
            break;
        }
        case PromptStrategy::PerSubgoal:
            for (int k = 1; k <= n; ++k) {
                auto prompt = render_per_subgoal(tmpl, rubric, k, prepared);
                tokens += estimate_tokens(prompt);
                images += (long long)(prepared.image_count());
            }
            break;
        case PromptStrategy::PerSubgoalWindowed:
            for (int k = 1; k <= n; ++k) {
                Trajectory window = subgoal_window(prepared, k, n);
                auto prompt = render_per_subgoal(tmpl, rubric, k, window);
                tokens += estimate_tokens(prompt);
                images += (long long)(window.image_count());
            }
            break;
    }
    return trajectory_cost(model, tokens, images);
}

std::string format_currency(double amount, const std::string& currency_code) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", amount);
    if (currency_code == "USD") return std::string("$") + buf;
    return std::string(buf) + " " + currency_code;
}

std::string format_duration(double seconds) {
    char buf[64];
    if (seconds < 60.0) {
        std::snprintf(buf, sizeof(buf), "%.1f s", seconds);
        return buf;
    }
    const double minutes = seconds / 60.0;
    const double rounded = std::round(minutes);
    if (std::fabs(minutes - rounded) < 1e-9) {
        long whole = long(rounded);
        std::snprintf(buf, sizeof(buf), "%ld minute%s", whole, whole == 1 ? "" : "s");
    } else {
        std::snprintf(buf, sizeof(buf), "%.1f minutes", minutes);
    }
    return buf;
}

}  // namespace stepeval
