#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "stepeval/errors.hpp"
#include "stepeval/judge.hpp"
#include "stepeval/optimizer.hpp"
#include "support/fixtures.hpp"

using namespace stepeval;

namespace {

ConfigResult make_result(double accuracy, double cost, const std::string& model = "m") {
    ConfigResult r;
    r.config.model_id = model;
    r.task_accuracy = accuracy;
    r.mean_cost = cost;
    return r;
}

// O(n^2) dominance oracle, independent of the library implementation.
std::set<std::string> brute_force_frontier_ids(const std::vector<ConfigResult>& results) {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < results.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < results.size() && !dominated; ++j) {
            if (i == j) continue;
            dominated = results[j].task_accuracy >= results[i].task_accuracy &&
                        results[j].mean_cost <= results[i].mean_cost &&
                        (results[j].task_accuracy > results[i].task_accuracy ||
                         results[j].mean_cost < results[i].mean_cost);
        }
        if (!dominated) ids.insert(results[i].config.config_id());
    }
    return ids;
}

std::vector<Trajectory> labeled_set(std::size_t count, std::size_t n) {
    std::vector<Trajectory> out;
    std::mt19937 rng(31);
    for (std::size_t i = 0; i < count; ++i) {
        BitVector y(n);
        for (auto& bit : y) bit = std::uint8_t(rng() % 2);
        out.push_back(fixtures::synthetic_trajectory("t" + std::to_string(i), 3, {"front"}, y));
    }
    return out;
}

}  // namespace

TEST_CASE("enumerate_configs is the deduplicated Cartesian product") {
    ConfigSpace space;
    space.views = {{"front"}, {"front", "wrist"}};
    space.frame_policies = {FramePolicy::all(), FramePolicy::stride(2)};
    space.strategies = {PromptStrategy::WholeTrajectory};
    space.template_ids = {"whole_zero_shot", "whole_few_shot"};
    space.model_ids = {"m1"};
    space.resolutions = {std::nullopt};

    auto configs = enumerate_configs(space);
    CHECK(configs.size() == 8);
    for (std::size_t i = 1; i < configs.size(); ++i)
        CHECK(configs[i - 1].config_id() < configs[i].config_id());

    SUBCASE("single candidate per axis gives one config") {
        space.views = {{"front"}};
        space.frame_policies = {FramePolicy::all()};
        space.template_ids = {"whole_zero_shot"};
        CHECK(enumerate_configs(space).size() == 1);
    }
    SUBCASE("repeated axis entries are deduplicated") {
        space.model_ids = {"m1", "m1"};
        CHECK(enumerate_configs(space).size() == 8);
    }
    SUBCASE("empty axis") {
        space.model_ids = {};
        CHECK_THROWS_AS(enumerate_configs(space), EmptyAxisError);
    }
}

TEST_CASE("evaluate_config with noiseless and fully flipped mocks") {
    auto rubric = fixtures::simple_rubric(2);
    auto trajectories = labeled_set(50, 2);
    EvalConfig config;
    config.template_id = "whole_zero_shot";

    SUBCASE("zero noise gives perfect accuracy") {
        auto backend = mock_judge({{0, 0}, 1, 10, 0.0});
        auto result = evaluate_config(config, *backend, rubric, trajectories);
        CHECK(result.task_accuracy == 1.0);
        CHECK(result.per_subgoal_accuracy == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("full flip gives zero accuracy") {
        auto backend = mock_judge({{1, 1}, 1, 10, 0.0});
        auto result = evaluate_config(config, *backend, rubric, trajectories);
        CHECK(result.task_accuracy == 0.0);
    }
    SUBCASE("one noisy subgoal drives task accuracy") {
        auto big = labeled_set(10000, 2);
        auto backend = mock_judge({{0.2, 0.0}, 77, 10, 0.0});
        auto result = evaluate_config(config, *backend, rubric, big, {}, 8);
        CHECK(result.per_subgoal_accuracy[0] == doctest::Approx(0.8).epsilon(0.025));
        CHECK(result.per_subgoal_accuracy[1] == 1.0);
        CHECK(result.task_accuracy == result.per_subgoal_accuracy[0]);
    }
    SUBCASE("unlabeled trajectory is rejected") {
        auto unlabeled = trajectories;
        unlabeled.push_back(fixtures::synthetic_trajectory("u", 2, {"front"}));
        auto backend = mock_judge({{0, 0}, 1, 10, 0.0});
        CHECK_THROWS_AS(evaluate_config(config, *backend, rubric, unlabeled),
                        MissingGroundTruthError);
    }
}

TEST_CASE("pareto_frontier worked example") {
    auto results = std::vector<ConfigResult>{
        make_result(0.90, 0.05, "a"),
        make_result(0.80, 0.01, "b"),
        make_result(0.85, 0.06, "c"),
    };
    auto frontier = pareto_frontier(results);
    REQUIRE(frontier.size() == 2);
    CHECK(frontier[0].task_accuracy == 0.80);
    CHECK(frontier[0].mean_cost == 0.01);
    CHECK(frontier[1].task_accuracy == 0.90);
    CHECK(frontier[1].mean_cost == 0.05);

    SUBCASE("single result is its own frontier") {
        CHECK(pareto_frontier({make_result(0.5, 1.0)}).size() == 1);
    }
    SUBCASE("equal points are both retained") {
        auto twins = std::vector<ConfigResult>{make_result(0.7, 0.02, "x"),
                                               make_result(0.7, 0.02, "y")};
        auto out = pareto_frontier(twins);
        REQUIRE(out.size() == 2);
        CHECK(out[0].config.config_id() <= out[1].config.config_id());
    }
}

TEST_CASE("pareto_frontier matches brute force on random sets") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ConfigResult> results;
        const std::size_t size = 1 + rng() % 100;
        for (std::size_t i = 0; i < size; ++i) {
            results.push_back(make_result(double(rng() % 101) / 100.0,
                                          double(rng() % 101) / 1000.0,
                                          "model" + std::to_string(i)));
        }
        auto frontier = pareto_frontier(results);
        std::set<std::string> frontier_ids;
        for (const auto& r : frontier) frontier_ids.insert(r.config.config_id());
        CHECK(frontier_ids == brute_force_frontier_ids(results));
    }
}

TEST_CASE("best_under_budget") {
    auto results = std::vector<ConfigResult>{
        make_result(0.90, 0.05, "a"),
        make_result(0.80, 0.01, "b"),
        make_result(0.85, 0.06, "c"),
    };
    CHECK(best_under_budget(results, 0.02).task_accuracy == 0.80);
    CHECK(best_under_budget(results, 0.05).task_accuracy == 0.90);  // boundary inclusive
    CHECK_THROWS_AS(best_under_budget(results, 0.005), NoFeasibleConfigError);
    CHECK(best_under_budget(results, std::numeric_limits<double>::infinity()).task_accuracy ==
          0.90);

    SUBCASE("budget monotonicity") {
        double previous = 0.0;
        for (double budget = 0.01; budget < 0.10; budget += 0.002) {
            auto best = best_under_budget(results, budget);
            CHECK(best.task_accuracy >= previous);
            previous = best.task_accuracy;
        }
    }
}

TEST_CASE("prompt_variant_search ranks by task accuracy, deterministic ties") {
    auto rubric = fixtures::simple_rubric(2);
    auto trajectories = labeled_set(30, 2);
    EvalConfig base;
    base.template_id = "whole_zero_shot";

    // A mock whose accuracy is perfect regardless of template: equal scores,
    // ranked by config_id.
    auto variants = builtin_templates();
    variants.erase(std::remove_if(variants.begin(), variants.end(),
                                  [](const PromptTemplate& t) {
                                      return !t.whole_trajectory_compatible();
                                  }),
                   variants.end());
    REQUIRE(variants.size() == 2);

    auto backend = mock_judge({{0, 0}, 3, 10, 0.0});
    auto ranked = prompt_variant_search(base, variants, *backend, rubric, trajectories);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].second == 1.0);
    CHECK(ranked[1].second == 1.0);

    SUBCASE("single variant") {
        auto one = prompt_variant_search(base, {variants[0]}, *backend, rubric, trajectories);
        REQUIRE(one.size() == 1);
        CHECK(one[0].first.id == variants[0].id);
    }
    SUBCASE("empty variants") {
        CHECK_THROWS_AS(prompt_variant_search(base, {}, *backend, rubric, trajectories),
                        EmptyInputError);
    }
}

namespace {

// Answers correctly only when the prompt carries a sentinel phrase;
// otherwise answers all zeros.
class SentinelBackend final : public JudgeBackend {
public:
    explicit SentinelBackend(std::string sentinel) : sentinel_(std::move(sentinel)) {}

    JudgeReply judge_call(const JudgeRequest& request) override {
        JudgeReply reply;
        const bool correct = request.prompt_text.find(sentinel_) != std::string::npos;
        const auto& truth = *request.ground_truth;
        reply.text = "ANSWER:";
        for (auto bit : truth) reply.text += correct && bit ? " 1" : " 0";
        if (correct) {
            reply.text = "ANSWER:";
            for (auto bit : truth) reply.text += bit ? " 1" : " 0";
        }
        return reply;
    }
    std::string backend_id() const override { return "sentinel"; }

private:
    std::string sentinel_;
};

}  // namespace

TEST_CASE("prompt_variant_search prefers the variant the judge understands") {
    auto rubric = fixtures::simple_rubric(2);
    auto trajectories = labeled_set(20, 2);

    PromptTemplate plain;
    plain.id = "variant_plain";
    plain.body = "Task {task_name}.\n{subgoal_list}\n{answer_instruction}";

    PromptTemplate hinted = plain;
    hinted.id = "variant_hinted";
    hinted.body = "Task {task_name}. MAGIC-HINT\n{subgoal_list}\n{answer_instruction}";

    EvalConfig base;
    SentinelBackend backend("MAGIC-HINT");
    auto ranked = prompt_variant_search(base, {plain, hinted}, backend, rubric, trajectories);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].first.id == "variant_hinted");
    CHECK(ranked[0].second == 1.0);
    CHECK(ranked[1].second < 1.0);
}
