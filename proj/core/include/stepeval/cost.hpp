#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stepeval/prompt.hpp"
#include "stepeval/rubric.hpp"
#include "stepeval/trajectory.hpp"

namespace stepeval {

struct EvalConfig;  // optimizer.hpp

// Provider pricing: alpha per 1,000 prompt tokens, beta per image.
struct CostModel {
    double alpha_per_1k_tokens = 0.0;
    double beta_per_image = 0.0;
    std::string currency_code = "USD";
};

CostModel load_pricing(const std::filesystem::path& path);

enum class TokenSource { Measured, Estimated };

struct CostRecord {
    std::string trajectory_id;
    long long tokens = 0;          // prompt tokens
    long long completion_tokens = 0;  // recorded but excluded from cost
    long long images = 0;
    double cost = 0.0;
    double latency_seconds = 0.0;
    TokenSource token_source = TokenSource::Estimated;
};

struct BatchCostSummary {
    double total_cost = 0.0;
    double mean_cost = 0.0;
    double total_latency_seconds = 0.0;
    double mean_latency_seconds = 0.0;
    std::size_t count = 0;
};

// alpha * tokens / 1000 + beta * images.
double trajectory_cost(const CostModel& model, long long tokens, long long images);

// ceil(bytes/4); fallback when a provider omits usage counts and for
// pre-call budget projection.
long long estimate_tokens(const RenderedPrompt& prompt);
long long estimate_tokens(const std::string& text);

BatchCostSummary batch_cost_summary(const std::vector<CostRecord>& records);

// Renders the config's prompts against a sample trajectory and projects the
// per-trajectory cost under its call pattern. No backend calls.
double project_budget(const CostModel& model, const EvalConfig& config,
                      const SubgoalRubric& rubric, const Trajectory& sample,
                      const std::vector<PromptTemplate>& extra_templates = {});

// "$5.00"-style rendering with two decimals.
std::string format_currency(double amount, const std::string& currency_code = "USD");

// "42.0 s" below a minute, whole minutes as "3 minutes", otherwise one decimal.
std::string format_duration(double seconds);

}  // namespace stepeval
