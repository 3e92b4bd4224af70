#include "stepeval/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "stepeval/errors.hpp"

namespace stepeval {

using nlohmann::ordered_json;

namespace {

std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
    return buf;
}

std::string decimal4(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

std::string views_label(const std::vector<std::string>& views) {
    if (views.empty()) return "all-view";
    if (views.size() == 1) return "single-view (" + views[0] + ")";
    std::string label;
    for (std::size_t i = 0; i < views.size(); ++i) {
        if (i) label += "+";
        label += views[i];
    }
    return label;
}

ordered_json summary_to_json(const SuccessSummary& s) {
    ordered_json doc;
    doc["per_subgoal_sr"] = s.per_subgoal_sr;
    doc["overall_sr"] = s.overall_sr;
    doc["trajectory_count"] = s.trajectory_count;
    doc["per_subgoal_successes"] = s.per_subgoal_successes;
    doc["overall_successes"] = s.overall_successes;
    return doc;
}

SuccessSummary summary_from_json(const ordered_json& doc) {
    SuccessSummary s;
    s.per_subgoal_sr = doc.at("per_subgoal_sr").get<std::vector<double>>();
    s.overall_sr = doc.at("overall_sr").get<double>();
    s.trajectory_count = doc.at("trajectory_count").get<std::size_t>();
    s.per_subgoal_successes = doc.at("per_subgoal_successes").get<std::vector<std::size_t>>();
    s.overall_successes = doc.at("overall_successes").get<std::size_t>();
    return s;
}

ordered_json config_to_json(const EvalConfig& c) {
    ordered_json doc;
    doc["config_id"] = c.config_id();
    doc["views"] = c.views;
    doc["frame_policy"] = c.frame_policy.describe();
    doc["strategy"] = strategy_name(c.strategy);
    doc["template_id"] = c.template_id;
    doc["model_id"] = c.model_id;
    doc["resolution"] = c.resolution ? ordered_json(*c.resolution) : ordered_json(nullptr);
    doc["cost_model"] = {{"currency", c.cost_model.currency_code},
                         {"alpha_per_1k_tokens", c.cost_model.alpha_per_1k_tokens},
                         {"beta_per_image", c.cost_model.beta_per_image}};
    return doc;
}

EvalConfig config_from_json(const ordered_json& doc) {
    EvalConfig c;
    c.views = doc.at("views").get<std::vector<std::string>>();
    c.frame_policy = FramePolicy::parse(doc.at("frame_policy").get<std::string>());
    c.strategy = parse_strategy(doc.at("strategy").get<std::string>());
    c.template_id = doc.at("template_id").get<std::string>();
    c.model_id = doc.at("model_id").get<std::string>();
    if (!doc.at("resolution").is_null()) c.resolution = doc["resolution"].get<int>();
    const auto& cm = doc.at("cost_model");
    c.cost_model.currency_code = cm.at("currency").get<std::string>();
    c.cost_model.alpha_per_1k_tokens = cm.at("alpha_per_1k_tokens").get<double>();
    c.cost_model.beta_per_image = cm.at("beta_per_image").get<double>();
    return c;
}

}  // namespace

EvalReport build_report(const SubgoalRubric& rubric, const EvalConfig& config,
                        const std::vector<Verdict>& verdicts,
                        const std::vector<Trajectory>& trajectories) {
    if (verdicts.empty())
        throw EmptyInputError("no verdicts");

    std::unordered_map<std::string, const Trajectory*> by_id;
    for (const auto& traj : trajectories) by_id.emplace(traj.id, &traj);

    EvalReport report;
    report.rubric = rubric;
    report.config = config;
    report.verdicts = verdicts;
    // Keyed aggregation: results must not depend on completion order.
    std::sort(report.verdicts.begin(), report.verdicts.end(),
              [](const Verdict& a, const Verdict& b) {
                  return a.trajectory_id < b.trajectory_id;
              });

    std::vector<BitVector> predicted_all;
    std::vector<BitVector> predicted_labeled, truth_labeled;
    for (const auto& verdict : report.verdicts) {
        auto it = by_id.find(verdict.trajectory_id);
        if (it == by_id.end())
            throw UnresolvedTrajectoryError(verdict.trajectory_id);
        predicted_all.push_back(verdict.predictions);
        if (it->second->ground_truth) {
            predicted_labeled.push_back(verdict.predictions);
            truth_labeled.push_back(*it->second->ground_truth);
        }

        CostRecord record;
        record.trajectory_id = verdict.trajectory_id;
        record.tokens = verdict.prompt_tokens;
        record.completion_tokens = verdict.completion_tokens;
        record.images = verdict.image_count;
        record.cost = trajectory_cost(config.cost_model, verdict.prompt_tokens,
                                      verdict.image_count);
        record.latency_seconds = verdict.latency_seconds;
        record.token_source =
            verdict.tokens_measured ? TokenSource::Measured : TokenSource::Estimated;
        report.cost_records.push_back(std::move(record));
    }

    report.predicted_summary = success_summary(predicted_all, rubric.size());
    report.excluded_from_diagnostics = report.verdicts.size() - predicted_labeled.size();
    if (!predicted_labeled.empty()) {
        report.ground_truth_summary = success_summary(truth_labeled, rubric.size());
        report.diagnostics = diagnostics_summary(predicted_labeled, truth_labeled);
    }
    report.cost_summary = batch_cost_summary(report.cost_records);
    report.created_at = utc_now_iso8601();
    return report;
}

std::string report_to_json(const EvalReport& report) {
    ordered_json doc;
    doc["tool_version"] = report.tool_version;
    doc["created_at"] = report.created_at;
    doc["task_name"] = report.rubric.task_name;
    doc["rubric"] = ordered_json::array();
    for (const auto& sg : report.rubric.subgoals)
        doc["rubric"].push_back({{"name", sg.name}, {"description", sg.description}});
    doc["config"] = config_to_json(report.config);
    doc["predicted_summary"] = summary_to_json(report.predicted_summary);
    doc["ground_truth_summary"] = report.ground_truth_summary
                                      ? summary_to_json(*report.ground_truth_summary)
                                      : ordered_json(nullptr);
    if (report.diagnostics) {
        ordered_json diag;
        diag["per_subgoal_accuracy"] = report.diagnostics->per_subgoal_accuracy;
        diag["task_eval_accuracy"] = report.diagnostics->task_eval_accuracy;
        diag["trajectory_count"] = report.diagnostics->trajectory_count;
        diag["confusions"] = ordered_json::array();
        for (const auto& m : report.diagnostics->confusions)
            diag["confusions"].push_back(
                {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}});
        doc["diagnostics"] = std::move(diag);
    } else {
        doc["diagnostics"] = nullptr;
    }
    doc["excluded_from_diagnostics"] = report.excluded_from_diagnostics;
    doc["cost_summary"] = {{"total_cost", report.cost_summary.total_cost},
                           {"mean_cost", report.cost_summary.mean_cost},
                           {"total_latency_seconds", report.cost_summary.total_latency_seconds},
                           {"mean_latency_seconds", report.cost_summary.mean_latency_seconds},
                           {"count", report.cost_summary.count}};
    doc["cost_records"] = ordered_json::array();
    for (const auto& r : report.cost_records) {
        doc["cost_records"].push_back(
            {{"trajectory_id", r.trajectory_id},
             {"tokens", r.tokens},
             {"completion_tokens", r.completion_tokens},
             {"images", r.images},
             {"cost", r.cost},
             {"latency_seconds", r.latency_seconds},
             {"token_source", r.token_source == TokenSource::Measured ? "measured" : "estimated"}});
    }
    doc["verdicts"] = ordered_json::array();
    for (const auto& v : report.verdicts) {
        ordered_json vd;
        vd["trajectory_id"] = v.trajectory_id;
        vd["predictions"] = ordered_json::array();
        for (auto bit : v.predictions) vd["predictions"].push_back(int(bit));
        vd["raw_replies"] = v.raw_replies;
        vd["prompt_tokens"] = v.prompt_tokens;
        vd["completion_tokens"] = v.completion_tokens;
        vd["tokens_measured"] = v.tokens_measured;
        vd["image_count"] = v.image_count;
        vd["latency_seconds"] = v.latency_seconds;
        vd["backend_id"] = v.backend_id;
        doc["verdicts"].push_back(std::move(vd));
    }
    return doc.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocumentError(e.what());
    }

    EvalReport report;
    report.tool_version = doc.at("tool_version").get<std::string>();
    report.created_at = doc.at("created_at").get<std::string>();
    report.rubric.task_name = doc.at("task_name").get<std::string>();
    int index = 1;
    for (const auto& entry : doc.at("rubric")) {
        Subgoal sg;
        sg.index = index++;
        sg.name = entry.at("name").get<std::string>();
        sg.description = entry.at("description").get<std::string>();
        report.rubric.subgoals.push_back(std::move(sg));
    }
    report.config = config_from_json(doc.at("config"));
    report.predicted_summary = summary_from_json(doc.at("predicted_summary"));
    if (!doc.at("ground_truth_summary").is_null())
        report.ground_truth_summary = summary_from_json(doc["ground_truth_summary"]);
    if (!doc.at("diagnostics").is_null()) {
        DiagnosticsSummary diag;
        const auto& dd = doc["diagnostics"];
        diag.per_subgoal_accuracy = dd.at("per_subgoal_accuracy").get<std::vector<double>>();
        diag.task_eval_accuracy = dd.at("task_eval_accuracy").get<double>();
        diag.trajectory_count = dd.at("trajectory_count").get<std::size_t>();
        for (const auto& m : dd.at("confusions")) {
            ConfusionMatrix cm;
            cm.tp = m.at("tp").get<std::size_t>();
            cm.fp = m.at("fp").get<std::size_t>();
            cm.fn = m.at("fn").get<std::size_t>();
            cm.tn = m.at("tn").get<std::size_t>();
            diag.confusions.push_back(cm);
        }
        report.diagnostics = std::move(diag);
    }
    report.excluded_from_diagnostics = doc.at("excluded_from_diagnostics").get<std::size_t>();
    const auto& cs = doc.at("cost_summary");
    report.cost_summary.total_cost = cs.at("total_cost").get<double>();
    report.cost_summary.mean_cost = cs.at("mean_cost").get<double>();
    report.cost_summary.total_latency_seconds = cs.at("total_latency_seconds").get<double>();
    report.cost_summary.mean_latency_seconds = cs.at("mean_latency_seconds").get<double>();
    report.cost_summary.count = cs.at("count").get<std::size_t>();
    for (const auto& r : doc.at("cost_records")) {
        CostRecord record;
        record.trajectory_id = r.at("trajectory_id").get<std::string>();
        record.tokens = r.at("tokens").get<long long>();
        record.completion_tokens = r.at("completion_tokens").get<long long>();
        record.images = r.at("images").get<long long>();
        record.cost = r.at("cost").get<double>();
        record.latency_seconds = r.at("latency_seconds").get<double>();
        record.token_source = r.at("token_source").get<std::string>() == "measured"
                                  ? TokenSource::Measured
                                  : TokenSource::Estimated;
        report.cost_records.push_back(std::move(record));
    }
    for (const auto& vd : doc.at("verdicts")) {
        Verdict v;
        v.trajectory_id = vd.at("trajectory_id").get<std::string>();
        for (const auto& bit : vd.at("predictions"))
            v.predictions.push_back(bit.get<int>() ? 1 : 0);
        v.raw_replies = vd.at("raw_replies").get<std::vector<std::string>>();
        v.prompt_tokens = vd.at("prompt_tokens").get<long long>();
        v.completion_tokens = vd.at("completion_tokens").get<long long>();
        v.tokens_measured = vd.at("tokens_measured").get<bool>();
        v.image_count = vd.at("image_count").get<long long>();
        v.latency_seconds = vd.at("latency_seconds").get<double>();
        v.backend_id = vd.at("backend_id").get<std::string>();
        report.verdicts.push_back(std::move(v));
    }
    return report;
}

std::string render_markdown(const EvalReport& report) {
    std::ostringstream out;
    const auto& summary = report.predicted_summary;
    const std::size_t n = report.rubric.size();

    out << "# Evaluation report: " << report.rubric.task_name << "\n\n";

    // Headline
    out << "Using model " << report.config.model_id << " with "
        << views_label(report.config.views) << " input, evaluating "
        << summary.trajectory_count << " trajectories cost "
        << format_currency(report.cost_summary.total_cost,
                           report.config.cost_model.currency_code)
        << " and took " << format_duration(report.cost_summary.total_latency_seconds);
    if (report.diagnostics) {
        double mean_acc = 0.0;
        for (double a : report.diagnostics->per_subgoal_accuracy) mean_acc += a;
        mean_acc /= double(report.diagnostics->per_subgoal_accuracy.size());
        out << ", achieving " << percent(mean_acc) << " subgoal classification accuracy";
    }
    out << ".\n\n";

    out << "## Per-subgoal success rates (predicted)\n\n";
    out << "| # | Subgoal | Successes | N | SR |\n|---|---|---|---|---|\n";
    for (std::size_t k = 0; k < n; ++k) {
        out << "| " << (k + 1) << " | " << report.rubric.subgoals[k].name << " | "
            << summary.per_subgoal_successes[k] << " | " << summary.trajectory_count
            << " | " << decimal4(summary.per_subgoal_sr[k]) << " |\n";
    }
    out << "\nOverall task SR: " << summary.overall_successes << "/"
        << summary.trajectory_count << " = " << decimal4(summary.overall_sr) << "\n";

    if (report.ground_truth_summary) {
        const auto& gt = *report.ground_truth_summary;
        out << "\n## Per-subgoal success rates (ground truth, labeled subset)\n\n";
        out << "| # | Subgoal | Successes | N | SR |\n|---|---|---|---|---|\n";
        for (std::size_t k = 0; k < n; ++k) {
            out << "| " << (k + 1) << " | " << report.rubric.subgoals[k].name << " | "
                << gt.per_subgoal_successes[k] << " | " << gt.trajectory_count << " | "
                << decimal4(gt.per_subgoal_sr[k]) << " |\n";
        }
        out << "\nOverall task SR (ground truth): " << gt.overall_successes << "/"
            << gt.trajectory_count << " = " << decimal4(gt.overall_sr) << "\n";
    }

    if (report.diagnostics) {
        const auto& diag = *report.diagnostics;
        out << "\n## Judge accuracy diagnostics\n\n";
        out << "Task evaluation accuracy: " << decimal4(diag.task_eval_accuracy) << " over "
            << diag.trajectory_count << " labeled trajectories";
        if (report.excluded_from_diagnostics > 0)
            out << " (" << report.excluded_from_diagnostics << " unlabeled excluded)";
        out << "\n\n";
        out << "| # | Subgoal | Accuracy | TP | FP | FN | TN |\n|---|---|---|---|---|---|---|\n";
        for (std::size_t k = 0; k < n; ++k) {
            const auto& m = diag.confusions[k];
            out << "| " << (k + 1) << " | " << report.rubric.subgoals[k].name << " | "
                << decimal4(diag.per_subgoal_accuracy[k]) << " | " << m.tp << " | " << m.fp
                << " | " << m.fn << " | " << m.tn << " |\n";
        }
    } else if (report.excluded_from_diagnostics > 0) {
        out << "\nDiagnostics skipped: no ground-truth labels ("
            << report.excluded_from_diagnostics << " trajectories unlabeled).\n";
    }

    out << "\n## Cost\n\n";
    out << "| Total cost | Mean cost | Total time | Mean time | N |\n|---|---|---|---|---|\n";
    out << "| "
        << format_currency(report.cost_summary.total_cost,
                           report.config.cost_model.currency_code)
        << " | "
        << format_currency(report.cost_summary.mean_cost,
                           report.config.cost_model.currency_code)
        << " | " << format_duration(report.cost_summary.total_latency_seconds) << " | "
        << format_duration(report.cost_summary.mean_latency_seconds) << " | "
        << report.cost_summary.count << " |\n";

    out << "\nConfig " << report.config.config_id() << ", " << report.tool_version << ", "
        << report.created_at << "\n";
    return out.str();
}

std::string export_leaderboard(const EvalReport& report, const std::string& policy_name) {
    ordered_json record;
    record["policy_name"] = policy_name;
    record["task_name"] = report.rubric.task_name;
    record["n"] = report.rubric.size();
    record["per_subgoal_sr"] = report.predicted_summary.per_subgoal_sr;
    record["overall_sr"] = report.predicted_summary.overall_sr;
    record["N"] = report.predicted_summary.trajectory_count;
    record["model_id"] = report.config.model_id;
    record["config_id"] = report.config.config_id();
    record["tool_version"] = report.tool_version;
    return record.dump() + "\n";
}

}  // namespace stepeval
