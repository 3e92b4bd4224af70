#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stepeval/optimizer.hpp"
#include "stepeval/prompt.hpp"
#include "stepeval/rubric.hpp"
#include "stepeval/trajectory.hpp"

namespace stepeval {

// One judge invocation. Backends read what they need: the HTTP backend uses
// prompt text and image refs; the mock uses trajectory metadata.
struct JudgeRequest {
    std::string prompt_text;
    std::vector<ImageRef> images;
    std::string trajectory_id;
    std::optional<int> subgoal_scope;  // nullopt = all subgoals
    int subgoal_count = 0;
    std::optional<BitVector> ground_truth;
    std::string model_id;
    std::optional<int> resolution;
};

struct JudgeReply {
    std::string text;
    long long prompt_tokens = 0;  // 0 = provider gave no usage; estimate downstream
    long long completion_tokens = 0;
    bool tokens_measured = false;
    double latency_seconds = 0.0;
};

class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual JudgeReply judge_call(const JudgeRequest& request) = 0;
    virtual std::string backend_id() const = 0;
};

struct Verdict {
    std::string trajectory_id;
    BitVector predictions;
    std::vector<std::string> raw_replies;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    bool tokens_measured = false;
    long long image_count = 0;
    double latency_seconds = 0.0;
    std::string backend_id;
};

// Extracts the verdict from a reply: the last line starting with "ANSWER:"
// must carry exactly expected_n binary tokens (0/1/true/false/yes/no,
// case-insensitive, optionally bracketed or comma-separated).
BitVector parse_verdict(const std::string& reply, int expected_n);

// Runs the config's call pattern over one trajectory: one call for
// whole_trajectory, n calls for the per-subgoal strategies.
Verdict judge_trajectory(JudgeBackend& backend, const EvalConfig& config,
                         const SubgoalRubric& rubric, const Trajectory& trajectory,
                         const std::vector<PromptTemplate>& extra_templates = {});

// -- mock backend ------------------------------------------------------------

// Seeded error model: prediction k equals ground truth k with probability
// 1 - flip_probabilities[k]. Counter-based generator keyed by
// (seed, trajectory_id, k); verdicts are independent of evaluation order.
struct MockJudgeSpec {
    std::vector<double> flip_probabilities;
    std::uint64_t seed = 0;
    long long synthetic_tokens_per_image = 100;
    double synthetic_latency_seconds = 0.0;
};

std::unique_ptr<JudgeBackend> mock_judge(const MockJudgeSpec& spec);

// -- replay backend ----------------------------------------------------------

enum class ReplayMode { Record, Replay };

// Record mode forwards to `inner` on cache miss and persists the reply
// (append-only JSON lines keyed by request digest); hits are served from the
// cache, so interrupted runs resume without repeating live calls. Replay
// mode serves only cached replies and raises CacheMiss otherwise.
std::unique_ptr<JudgeBackend> replay_backend(const std::filesystem::path& cache_path,
                                             ReplayMode mode,
                                             std::unique_ptr<JudgeBackend> inner = nullptr);

// Digest of (prompt text, image content digests, model id) used as the
// replay cache key.
std::string request_digest(const JudgeRequest& request);

// -- HTTP backend ------------------------------------------------------------

struct HttpBackendOptions {
    std::string endpoint;  // e.g. http://host:port/v1/chat/completions
    std::string model_id;
    std::string api_key;  // empty = unauthenticated
    std::optional<int> resolution;
    int max_retries = 3;
    double backoff_base_seconds = 1.0;  // 1s/2s/4s by default
    double requests_per_second = 0.0;   // 0 = unlimited
};

std::unique_ptr<JudgeBackend> http_backend(const HttpBackendOptions& options);

// Loads image bytes, downscaling to the longest edge when requested
// (aspect-preserving, never upscales), and re-encoding in the original
// media type. Exposed for tests.
std::string encode_image_base64(const ImageRef& ref, std::optional<int> resolution);

}  // namespace stepeval
