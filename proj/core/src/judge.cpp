#include "stepeval/judge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stepeval/cost.hpp"
#include "stepeval/digest.hpp"
#include "stepeval/errors.hpp"

namespace stepeval {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Verdict grammar
// ---------------------------------------------------------------------------

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

// Position just past the last case-insensitive "answer:" in the reply.
std::optional<std::size_t> last_answer_marker(const std::string& reply) {
    const std::string lowered = to_lower(reply);
    const std::string marker = "answer:";
    std::size_t found = std::string::npos;
    std::size_t pos = 0;
    while ((pos = lowered.find(marker, pos)) != std::string::npos) {
        found = pos + marker.size();
        pos += marker.size();
    }
    if (found == std::string::npos) return std::nullopt;
    return found;
}

}  // namespace

BitVector parse_verdict(const std::string& reply, int expected_n) {
    auto start = last_answer_marker(reply);
    if (!start)
        throw VerdictParseError(VerdictParseError::Kind::NoAnswerMarker, reply);

    // Tokens run to the end of the marker's line.
    std::size_t end = reply.find('\n', *start);
    if (end == std::string::npos) end = reply.size();
    std::string line = reply.substr(*start, end - *start);
    for (char& c : line) {
        if (c == '[' || c == ']' || c == '(' || c == ')' || c == ',') c = ' ';
    }

    BitVector bits;
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
        const std::string t = to_lower(token);
        if (t == "1" || t == "true" || t == "yes") {
            bits.push_back(1);
        } else if (t == "0" || t == "false" || t == "no") {
            bits.push_back(0);
        } else {
            throw VerdictParseError(VerdictParseError::Kind::NonBinaryToken, reply);
        }
    }
    if (int(bits.size()) != expected_n)
        throw VerdictParseError(VerdictParseError::Kind::LengthMismatch, reply);
    return bits;
}

// ---------------------------------------------------------------------------
// judge_trajectory
// ---------------------------------------------------------------------------

namespace {

std::vector<ImageRef> flatten_images(const Trajectory& traj) {
    std::vector<ImageRef> out;
    for (const auto& frame : traj.frames)
        for (const auto& [view, ref] : frame.images) out.push_back(ref);
    return out;
}

struct PlannedCall {
    RenderedPrompt prompt;
    std::vector<ImageRef> images;
    std::optional<int> scope;
};

std::vector<PlannedCall> plan_calls(const EvalConfig& config, const SubgoalRubric& rubric,
                                    const Trajectory& trajectory,
                                    const std::vector<PromptTemplate>& extra_templates) {
    const auto tmpl = find_template(config.template_id, extra_templates);
    Trajectory prepared = config.views.empty() ? trajectory
                                               : select_views(trajectory, config.views);
    prepared = sample_frames(prepared, config.frame_policy);

    const int n = int(rubric.size());
    std::vector<PlannedCall> calls;
    switch (config.strategy) {
        case PromptStrategy::WholeTrajectory:
            calls.push_back({render_whole_trajectory(tmpl, rubric, prepared),
                             flatten_images(prepared), std::nullopt});
            break;
        case PromptStrategy::PerSubgoal:
            for (int k = 1; k <= n; ++k) {
                calls.push_back({render_per_subgoal(tmpl, rubric, k, prepared),
                                 flatten_images(prepared), k});
            }
            break;
        case PromptStrategy::PerSubgoalWindowed:
            for (int k = 1; k <= n; ++k) {
                Trajectory window = subgoal_window(prepared, k, n);
                calls.push_back({render_per_subgoal(tmpl, rubric, k, window),
                                 flatten_images(window), k});
            }
            break;
    }
    return calls;
}

}  // namespace

Verdict judge_trajectory(JudgeBackend& backend, const EvalConfig& config,
                         const SubgoalRubric& rubric, const Trajectory& trajectory,
                         const std::vector<PromptTemplate>& extra_templates) {
    if (trajectory.frames.empty())
        throw EmptyInputError("trajectory " + trajectory.id + " has no frames");

    const int n = int(rubric.size());
    auto calls = plan_calls(config, rubric, trajectory, extra_templates);

    if (config.cost_ceiling) {
        long long proj_tokens = 0, proj_images = 0;
        for (const auto& call : calls) {
            proj_tokens += estimate_tokens(call.prompt);
            proj_images += (long long)(call.images.size());
        }
        double projected = trajectory_cost(config.cost_model, proj_tokens, proj_images);
        if (projected > *config.cost_ceiling)
            throw BudgetExceededError("projected " + std::to_string(projected) +
                                      " exceeds ceiling " +
                                      std::to_string(*config.cost_ceiling));
    }

    Verdict verdict;
    verdict.trajectory_id = trajectory.id;
    verdict.backend_id = backend.backend_id();
    verdict.predictions.assign(std::size_t(n), 0);
    verdict.tokens_measured = true;

    for (const auto& call : calls) {
        JudgeRequest request;
        request.prompt_text = call.prompt.text;
        request.images = call.images;
        request.trajectory_id = trajectory.id;
        request.subgoal_scope = call.scope;
        request.subgoal_count = n;
        request.ground_truth = trajectory.ground_truth;
        request.model_id = config.model_id;
        request.resolution = config.resolution;

        JudgeReply reply = backend.judge_call(request);
        verdict.raw_replies.push_back(reply.text);
        verdict.latency_seconds += reply.latency_seconds;
        verdict.image_count += (long long)(call.images.size());
        verdict.completion_tokens += reply.completion_tokens;
        if (reply.tokens_measured) {
            verdict.prompt_tokens += reply.prompt_tokens;
        } else {
            verdict.prompt_tokens += estimate_tokens(call.prompt);
            verdict.tokens_measured = false;
        }

        if (call.scope) {
            BitVector bit = parse_verdict(reply.text, 1);
            verdict.predictions[std::size_t(*call.scope) - 1] = bit[0];
        } else {
            verdict.predictions = parse_verdict(reply.text, n);
        }
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

namespace {

class MockBackend final : public JudgeBackend {
public:
    explicit MockBackend(MockJudgeSpec spec) : spec_(std::move(spec)) {}

    JudgeReply judge_call(const JudgeRequest& request) override {
        if (!request.ground_truth)
            throw MissingGroundTruthError(request.trajectory_id);
        const auto& truth = *request.ground_truth;
        if (spec_.flip_probabilities.size() != truth.size())
            throw LengthMismatchError(truth.size(), spec_.flip_probabilities.size());

        std::string answer = "ANSWER:";
        if (request.subgoal_scope) {
            answer += ' ';
            answer += char('0' + predict(request.trajectory_id, *request.subgoal_scope,
                                         truth[std::size_t(*request.subgoal_scope) - 1]));
        } else {
            for (std::size_t k = 0; k < truth.size(); ++k) {
                answer += ' ';
                answer += char('0' + predict(request.trajectory_id, int(k) + 1, truth[k]));
            }
        }

        JudgeReply reply;
        reply.text = answer;
        reply.prompt_tokens = estimate_tokens(request.prompt_text) +
                              spec_.synthetic_tokens_per_image * (long long)(request.images.size());
        reply.completion_tokens = estimate_tokens(reply.text);
        reply.tokens_measured = true;
        reply.latency_seconds = spec_.synthetic_latency_seconds;
        return reply;
    }

    std::string backend_id() const override { return "mock"; }

private:
    // Counter-based draw keyed by (seed, trajectory_id, k); no shared state,
    // so verdicts are independent of evaluation order.
    int predict(const std::string& trajectory_id, int k, int truth_bit) const {
        std::uint64_t h = fnv1a64(trajectory_id, spec_.seed ^ 0x9e3779b97f4a7c15ULL);
        h = mix64(mix64(h) ^ std::uint64_t(k));
        double u = double(h >> 11) * 0x1.0p-53;
        double eps = spec_.flip_probabilities[std::size_t(k) - 1];
        bool flip = u < eps;
        return flip ? 1 - truth_bit : truth_bit;
    }

    MockJudgeSpec spec_;
};

}  // namespace

std::unique_ptr<JudgeBackend> mock_judge(const MockJudgeSpec& spec) {
    return std::make_unique<MockBackend>(spec);
}

// ---------------------------------------------------------------------------
// Replay backend
// ---------------------------------------------------------------------------

std::string request_digest(const JudgeRequest& request) {
    std::uint64_t h = fnv1a64(request.prompt_text);
    for (const auto& image : request.images) {
        std::ifstream in(image.path, std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        h = fnv1a64(bytes.str(), h);
    }
    h = fnv1a64(request.model_id, h);
    return hex64(h);
}

namespace {

struct CachedReply {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

class ReplayBackend final : public JudgeBackend {
public:
    ReplayBackend(std::filesystem::path cache_path, ReplayMode mode,
                  std::unique_ptr<JudgeBackend> inner)
        : cache_path_(std::move(cache_path)), mode_(mode), inner_(std::move(inner)) {
        if (mode_ == ReplayMode::Record && !inner_)
            throw Error("BackendUnavailable", "record mode requires an inner backend");
        load_cache();
    }

    JudgeReply judge_call(const JudgeRequest& request) override {
        const std::string digest = request_digest(request);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(digest);
            if (it != cache_.end()) return to_reply(it->second);
        }
        if (mode_ == ReplayMode::Replay)
            throw CacheMissError(digest);

        JudgeReply live = inner_->judge_call(request);
        CachedReply entry{live.text, live.prompt_tokens, live.completion_tokens};
        std::lock_guard<std::mutex> lock(mutex_);
        if (cache_.emplace(digest, entry).second) append_entry(digest, entry);
        return live;
    }

    std::string backend_id() const override {
        return inner_ ? "replay(" + inner_->backend_id() + ")" : "replay";
    }

private:
    static JudgeReply to_reply(const CachedReply& entry) {
        JudgeReply reply;
        reply.text = entry.text;
        reply.prompt_tokens = entry.prompt_tokens;
        reply.completion_tokens = entry.completion_tokens;
        reply.tokens_measured = true;
        reply.latency_seconds = 0.0;  // cached replies report zero latency
        return reply;
    }

    void load_cache() {
        std::ifstream in(cache_path_);
        if (!in) return;  // absent cache is an empty cache
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                auto doc = ordered_json::parse(line);
                CachedReply entry;
                entry.text = doc.at("reply_text").get<std::string>();
                entry.prompt_tokens = doc.at("prompt_tokens").get<long long>();
                entry.completion_tokens = doc.at("completion_tokens").get<long long>();
                cache_.emplace(doc.at("digest").get<std::string>(), std::move(entry));
            } catch (const nlohmann::json::exception& e) {
                throw CacheCorruptError(cache_path_.string() + ":" +
                                        std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    void append_entry(const std::string& digest, const CachedReply& entry) {
        std::ofstream out(cache_path_, std::ios::app);
        ordered_json doc;
        doc["digest"] = digest;
        doc["reply_text"] = entry.text;
        doc["prompt_tokens"] = entry.prompt_tokens;
        doc["completion_tokens"] = entry.completion_tokens;
        out << doc.dump() << '\n';
    }

    std::filesystem::path cache_path_;
    ReplayMode mode_;
    std::unique_ptr<JudgeBackend> inner_;
    std::unordered_map<std::string, CachedReply> cache_;
    std::mutex mutex_;
};

}  // namespace

std::unique_ptr<JudgeBackend> replay_backend(const std::filesystem::path& cache_path,
                                             ReplayMode mode,
                                             std::unique_ptr<JudgeBackend> inner) {
    return std::make_unique<ReplayBackend>(cache_path, mode, std::move(inner));
}

}  // namespace stepeval
