#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stepeval/cost.hpp"
#include "stepeval/judge.hpp"
#include "stepeval/metrics.hpp"
#include "stepeval/optimizer.hpp"
#include "stepeval/rubric.hpp"

namespace stepeval {

inline constexpr const char* kToolVersion = "0.1.0";

struct EvalReport {
    SubgoalRubric rubric;
    EvalConfig config;
    SuccessSummary predicted_summary;
    std::optional<SuccessSummary> ground_truth_summary;
    std::optional<DiagnosticsSummary> diagnostics;
    std::vector<CostRecord> cost_records;
    BatchCostSummary cost_summary;
    std::vector<Verdict> verdicts;
    std::size_t excluded_from_diagnostics = 0;
    std::string created_at;  // ISO-8601 UTC
    std::string tool_version = kToolVersion;
};

// Joins verdicts with their trajectories, computes the predicted success
// summary, the labeled-subset diagnostics, and the cost summary.
EvalReport build_report(const SubgoalRubric& rubric, const EvalConfig& config,
                        const std::vector<Verdict>& verdicts,
                        const std::vector<Trajectory>& trajectories);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

std::string render_markdown(const EvalReport& report);

// Newline-delimited JSON, one self-contained record per (policy, task);
// deterministic (created_at excluded).
std::string export_leaderboard(const EvalReport& report, const std::string& policy_name);

}  // namespace stepeval
