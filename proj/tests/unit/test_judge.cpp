#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "stepeval/errors.hpp"
#include "stepeval/judge.hpp"
#include "stepeval/runner.hpp"
#include "support/fixtures.hpp"

using namespace stepeval;

namespace {

EvalConfig mock_config(PromptStrategy strategy = PromptStrategy::WholeTrajectory) {
    EvalConfig config;
    config.strategy = strategy;
    config.template_id = strategy == PromptStrategy::WholeTrajectory
                             ? "whole_zero_shot"
                             : "per_subgoal_zero_shot";
    config.model_id = "mock";
    return config;
}

// Renders a bit vector the way a cooperative model reply would.
std::string render_answer(const BitVector& bits, const std::string& preamble = "") {
    std::string text = preamble + "ANSWER:";
    for (auto b : bits) text += b ? " 1" : " 0";
    return text;
}

class CountingBackend final : public JudgeBackend {
public:
    JudgeReply judge_call(const JudgeRequest& request) override {
        ++calls;
        JudgeReply reply;
        reply.text = request.subgoal_scope ? "ANSWER: 1"
                                           : render_answer(BitVector(
                                                 std::size_t(request.subgoal_count), 1));
        return reply;
    }
    std::string backend_id() const override { return "counting"; }
    int calls = 0;
};

}  // namespace

TEST_CASE("parse_verdict grammar") {
    CHECK(parse_verdict("...reasoning...\nANSWER: 1 0 1 1", 4) == BitVector{1, 0, 1, 1});
    CHECK(parse_verdict("ANSWER: [true, false]", 2) == BitVector{1, 0});
    CHECK(parse_verdict("answer: Yes no YES", 3) == BitVector{1, 0, 1});
    CHECK(parse_verdict("ANSWER: 0 0\nmore thoughts\nANSWER: 1 1", 2) == BitVector{1, 1});

    CHECK_THROWS_AS(parse_verdict("ANSWER: 1 0", 4), VerdictParseError);
    CHECK_THROWS_AS(parse_verdict("the robot succeeded at everything", 3), VerdictParseError);
    CHECK_THROWS_AS(parse_verdict("ANSWER: 1 maybe 0", 3), VerdictParseError);

    try {
        parse_verdict("no marker here", 2);
        FAIL("expected throw");
    } catch (const VerdictParseError& e) {
        CHECK(e.kind() == VerdictParseError::Kind::NoAnswerMarker);
    }
    try {
        parse_verdict("ANSWER: 1", 2);
        FAIL("expected throw");
    } catch (const VerdictParseError& e) {
        CHECK(e.kind() == VerdictParseError::Kind::LengthMismatch);
    }
    try {
        parse_verdict("ANSWER: 1 2", 2);
        FAIL("expected throw");
    } catch (const VerdictParseError& e) {
        CHECK(e.kind() == VerdictParseError::Kind::NonBinaryToken);
    }
}

TEST_CASE("verdict grammar round-trip, all vectors up to n=8") {
    for (int n = 1; n <= 8; ++n) {
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            BitVector bits;
            for (int k = 0; k < n; ++k) bits.push_back((mask >> k) & 1);
            CHECK(parse_verdict(render_answer(bits, "chain of thought...\n"), n) == bits);
        }
    }
}

TEST_CASE("judge_trajectory call pattern and zero-noise mock") {
    auto rubric = fixtures::transfer_water_rubric();
    auto traj = fixtures::synthetic_trajectory("t1", 4, {"front"}, BitVector{1, 0, 1, 1});

    SUBCASE("zero-noise mock reproduces ground truth") {
        auto backend = mock_judge({{0, 0, 0, 0}, 42, 100, 0.0});
        auto verdict = judge_trajectory(*backend, mock_config(), rubric, traj);
        CHECK(verdict.predictions == BitVector{1, 0, 1, 1});
        CHECK(verdict.trajectory_id == "t1");
        CHECK(verdict.image_count == 4);
        CHECK(verdict.raw_replies.size() == 1);
    }
    SUBCASE("per_subgoal issues n calls") {
        CountingBackend backend;
        auto verdict =
            judge_trajectory(backend, mock_config(PromptStrategy::PerSubgoal), rubric, traj);
        CHECK(backend.calls == 4);
        CHECK(verdict.predictions.size() == 4);
        CHECK(verdict.raw_replies.size() == 4);
    }
    SUBCASE("whole_trajectory issues 1 call") {
        CountingBackend backend;
        judge_trajectory(backend, mock_config(), rubric, traj);
        CHECK(backend.calls == 1);
    }
    SUBCASE("windowed strategy uses subgoal windows") {
        CountingBackend backend;
        auto verdict = judge_trajectory(
            backend, mock_config(PromptStrategy::PerSubgoalWindowed), rubric, traj);
        CHECK(backend.calls == 4);
        // m=4, n=4: each window is one span frame plus up to two context frames
        CHECK(verdict.image_count < 4 * 4);
    }
    SUBCASE("full-flip mock complements ground truth") {
        auto backend = mock_judge({{1, 1, 1, 1}, 42, 100, 0.0});
        auto verdict = judge_trajectory(*backend, mock_config(), rubric, traj);
        CHECK(verdict.predictions == BitVector{0, 1, 0, 0});
    }
    SUBCASE("mock requires ground truth") {
        auto backend = mock_judge({{0, 0, 0, 0}, 42, 100, 0.0});
        auto unlabeled = fixtures::synthetic_trajectory("t2", 3, {"front"});
        CHECK_THROWS_AS(judge_trajectory(*backend, mock_config(), rubric, unlabeled),
                        MissingGroundTruthError);
    }
}

TEST_CASE("budget ceiling blocks before any call") {
    auto rubric = fixtures::transfer_water_rubric();
    auto traj = fixtures::synthetic_trajectory("t1", 4, {"front"}, BitVector{1, 1, 1, 1});

    auto config = mock_config();
    config.cost_model = {0.01, 0.002, "USD"};
    config.cost_ceiling = 1e-9;
    CountingBackend backend;
    CHECK_THROWS_AS(judge_trajectory(backend, config, rubric, traj), BudgetExceededError);
    CHECK(backend.calls == 0);
}

TEST_CASE("mock determinism is independent of evaluation order and concurrency") {
    auto rubric = fixtures::simple_rubric(3);
    std::vector<Trajectory> trajectories;
    for (int i = 0; i < 40; ++i) {
        trajectories.push_back(fixtures::synthetic_trajectory(
            "traj" + std::to_string(i), 3, {"front"},
            BitVector{std::uint8_t(i % 2), 1, std::uint8_t((i / 2) % 2)}));
    }

    auto run = [&](int parallel, bool reversed) {
        auto backend = mock_judge({{0.4, 0.1, 0.7}, 99, 10, 0.0});
        auto inputs = trajectories;
        if (reversed) std::reverse(inputs.begin(), inputs.end());
        auto verdicts =
            evaluate_batch(*backend, mock_config(), rubric, inputs, {}, parallel);
        std::map<std::string, BitVector> by_id;
        for (const auto& v : verdicts) by_id[v.trajectory_id] = v.predictions;
        return by_id;
    };

    auto base = run(1, false);
    CHECK(run(8, false) == base);
    CHECK(run(4, true) == base);
}

TEST_CASE("mock calibration: agreement converges to 1 - epsilon") {
    auto rubric = fixtures::simple_rubric(1);
    const int N = 10000;
    auto backend = mock_judge({{0.3}, 1234, 10, 0.0});
    auto config = mock_config();

    int agreements = 0;
    for (int i = 0; i < N; ++i) {
        auto traj = fixtures::synthetic_trajectory("t" + std::to_string(i), 1, {"front"},
                                                   BitVector{std::uint8_t(i % 2)});
        auto verdict = judge_trajectory(*backend, config, rubric, traj);
        agreements += verdict.predictions[0] == (*traj.ground_truth)[0] ? 1 : 0;
    }
    const double rate = double(agreements) / N;
    // 3 sigma of Binomial(10000, 0.7) is ~0.0137
    CHECK(rate > 0.68);
    CHECK(rate < 0.72);
}

TEST_CASE("replay backend record/replay contract") {
    auto dir = fixtures::scratch_dir("replay");
    auto rubric = fixtures::simple_rubric(2);
    auto manifest = fixtures::write_manifest(
        dir, 2, {{"a", BitVector{1, 0}}, {"b", BitVector{0, 1}}}, 2, {"front"});
    auto trajectories = load_manifest(manifest, rubric);
    auto config = mock_config();
    const auto cache = dir / "cache.jsonl";

    std::vector<Verdict> recorded;
    {
        auto backend =
            replay_backend(cache, ReplayMode::Record, mock_judge({{0.5, 0.5}, 7, 10, 0.0}));
        recorded = evaluate_batch(*backend, config, rubric, trajectories, {}, 1);
    }

    SUBCASE("replay serves identical verdicts with zero live calls") {
        auto backend = replay_backend(cache, ReplayMode::Replay);
        auto replayed = evaluate_batch(*backend, config, rubric, trajectories, {}, 1);
        REQUIRE(replayed.size() == recorded.size());
        for (std::size_t i = 0; i < recorded.size(); ++i) {
            CHECK(replayed[i].predictions == recorded[i].predictions);
            CHECK(replayed[i].raw_replies == recorded[i].raw_replies);
            CHECK(replayed[i].prompt_tokens == recorded[i].prompt_tokens);
        }
    }
    SUBCASE("altered prompt text misses the cache") {
        auto backend = replay_backend(cache, ReplayMode::Replay);
        auto altered = config;
        altered.template_id = "whole_few_shot";
        CHECK_THROWS_AS(
            judge_trajectory(*backend, altered, rubric, trajectories[0]),
            CacheMissError);
    }
    SUBCASE("re-recording identical inputs adds no cache entries") {
        auto size_before = fixtures::fs::file_size(cache);
        auto backend =
            replay_backend(cache, ReplayMode::Record, mock_judge({{0.5, 0.5}, 7, 10, 0.0}));
        evaluate_batch(*backend, config, rubric, trajectories, {}, 1);
        CHECK(fixtures::fs::file_size(cache) == size_before);
    }
    SUBCASE("corrupt cache is rejected") {
        std::ofstream(cache, std::ios::app) << "{broken\n";
        CHECK_THROWS_AS(replay_backend(cache, ReplayMode::Replay), CacheCorruptError);
    }
}
