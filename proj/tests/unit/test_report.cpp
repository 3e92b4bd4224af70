#include <doctest.h>

#include "stepeval/errors.hpp"
#include "stepeval/judge.hpp"
#include "stepeval/report.hpp"
#include "stepeval/runner.hpp"
#include "support/fixtures.hpp"

using namespace stepeval;

namespace {

struct PancakeFixture {
    SubgoalRubric rubric = fixtures::simple_rubric(3, "Pancake");
    std::vector<Trajectory> trajectories;
    std::vector<Verdict> verdicts;
    EvalConfig config;

    PancakeFixture() {
        config.model_id = "mock";
        config.template_id = "whole_zero_shot";
        for (int i = 0; i < 100; ++i) {
            BitVector y{1, 1, std::uint8_t(i < 17 ? 1 : 0)};
            char id[16];
            std::snprintf(id, sizeof(id), "t%03d", i);
            trajectories.push_back(fixtures::synthetic_trajectory(id, 3, {"front"}, y));
        }
        auto backend = mock_judge({{0, 0, 0}, 9, 10, 0.5});
        verdicts = evaluate_batch(*backend, config, rubric, trajectories, {}, 4);
    }
};

}  // namespace

TEST_CASE("build_report reconstructs the pancake pattern") {
    PancakeFixture fx;
    auto report = build_report(fx.rubric, fx.config, fx.verdicts, fx.trajectories);

    CHECK(report.predicted_summary.per_subgoal_sr == std::vector<double>{1.0, 1.0, 0.17});
    CHECK(report.predicted_summary.overall_sr == 0.17);
    CHECK(report.predicted_summary.trajectory_count == 100);
    REQUIRE(report.diagnostics.has_value());
    CHECK(report.diagnostics->task_eval_accuracy == 1.0);
    CHECK(report.excluded_from_diagnostics == 0);
    CHECK(report.cost_summary.count == 100);
}

TEST_CASE("diagnostics absent without ground truth") {
    auto rubric = fixtures::simple_rubric(2);
    std::vector<Trajectory> trajectories = {
        fixtures::synthetic_trajectory("a", 2, {"front"}),
        fixtures::synthetic_trajectory("b", 2, {"front"}),
    };
    std::vector<Verdict> verdicts;
    for (const auto& traj : trajectories) {
        Verdict v;
        v.trajectory_id = traj.id;
        v.predictions = {1, 0};
        v.image_count = 2;
        verdicts.push_back(v);
    }
    EvalConfig config;
    auto report = build_report(rubric, config, verdicts, trajectories);
    CHECK(!report.diagnostics.has_value());
    CHECK(!report.ground_truth_summary.has_value());
    CHECK(report.excluded_from_diagnostics == 2);
}

TEST_CASE("unknown verdict trajectory id is rejected") {
    auto rubric = fixtures::simple_rubric(1);
    Verdict orphan;
    orphan.trajectory_id = "ghost";
    orphan.predictions = {1};
    orphan.image_count = 1;
    CHECK_THROWS_AS(build_report(rubric, EvalConfig{}, {orphan}, {}),
                    UnresolvedTrajectoryError);
    CHECK_THROWS_AS(build_report(rubric, EvalConfig{}, {}, {}), EmptyInputError);
}

TEST_CASE("JSON report round-trips") {
    PancakeFixture fx;
    auto report = build_report(fx.rubric, fx.config, fx.verdicts, fx.trajectories);

    auto text = report_to_json(report);
    auto parsed = report_from_json(text);
    CHECK(report_to_json(parsed) == text);

    CHECK(parsed.rubric.task_name == report.rubric.task_name);
    CHECK(parsed.predicted_summary.per_subgoal_sr == report.predicted_summary.per_subgoal_sr);
    CHECK(parsed.diagnostics->task_eval_accuracy == report.diagnostics->task_eval_accuracy);
    CHECK(parsed.verdicts.size() == report.verdicts.size());
    CHECK(parsed.cost_records.size() == report.cost_records.size());
    CHECK(parsed.created_at == report.created_at);
}

TEST_CASE("markdown headline carries model, N, cost, time, accuracy") {
    PancakeFixture fx;
    auto report = build_report(fx.rubric, fx.config, fx.verdicts, fx.trajectories);
    // pin the illustrative totals: $5.00 over 3 minutes, 100% accuracy here
    for (auto& record : report.cost_records) {
        record.cost = 0.05;
        record.latency_seconds = 1.8;
    }
    report.cost_summary = batch_cost_summary(report.cost_records);

    auto markdown = render_markdown(report);
    CHECK(markdown.find("100 trajectories") != std::string::npos);
    CHECK(markdown.find("$5.00") != std::string::npos);
    CHECK(markdown.find("3 minutes") != std::string::npos);
    CHECK(markdown.find("100.00% subgoal classification accuracy") != std::string::npos);

    SUBCASE("every markdown rate also appears in the JSON report") {
        auto json_text = report_to_json(report);
        CHECK(json_text.find("0.17") != std::string::npos);
    }
    SUBCASE("headline omits accuracy without diagnostics") {
        report.diagnostics.reset();
        auto no_diag = render_markdown(report);
        CHECK(no_diag.find("classification accuracy") == std::string::npos);
    }
}

TEST_CASE("leaderboard export is deterministic and timestamp-free") {
    PancakeFixture fx;
    auto report = build_report(fx.rubric, fx.config, fx.verdicts, fx.trajectories);

    auto first = export_leaderboard(report, "P1");
    auto again = export_leaderboard(report, "P1");
    CHECK(first == again);
    CHECK(first.find(report.created_at) == std::string::npos);

    auto doc = nlohmann::json::parse(first);
    CHECK(doc.at("policy_name") == "P1");
    CHECK(doc.at("task_name") == "Pancake");
    CHECK(doc.at("n") == 3);
    CHECK(doc.at("per_subgoal_sr") == std::vector<double>{1.0, 1.0, 0.17});
    CHECK(doc.at("overall_sr") == 0.17);
    CHECK(doc.at("N") == 100);
    CHECK(doc.at("config_id") == report.config.config_id());
}

TEST_CASE("leaderboard export preserves unicode task names") {
    auto rubric = fixtures::simple_rubric(1, "Café ☕ task");
    auto traj = fixtures::synthetic_trajectory("a", 1, {"front"}, BitVector{1});
    Verdict v;
    v.trajectory_id = "a";
    v.predictions = {1};
    v.image_count = 1;
    auto report = build_report(rubric, EvalConfig{}, {v}, {traj});
    auto line = export_leaderboard(report, "P");
    CHECK(nlohmann::json::parse(line).at("task_name") == "Café ☕ task");
}
