#include "stepeval/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "stepeval/errors.hpp"

namespace stepeval {

using nlohmann::ordered_json;

std::string FramePolicy::describe() const {
    switch (kind) {
        case Kind::All: return "all";
        case Kind::Stride: return "stride:" + std::to_string(stride_step);
        case Kind::Keyframes: return "keyframes:" + std::to_string(keyframe_count);
    }
    return "all";
}

FramePolicy FramePolicy::parse(const std::string& text) {
    if (text == "all")
        return FramePolicy::all();
    if (text.rfind("stride:", 0) == 0) {
        int step = std::stoi(text.substr(7));
        if (step < 1)
            throw MalformedDocumentError("frame policy stride step must be >= 1: " + text);
        return FramePolicy::stride(step);
    }
    if (text.rfind("keyframes:", 0) == 0) {
        int count = std::stoi(text.substr(10));
        if (count < 2)
            throw MalformedDocumentError("frame policy keyframe count must be >= 2: " + text);
        return FramePolicy::keyframes(count);
    }
    throw MalformedDocumentError("unknown frame policy: " + text);
}

std::vector<Trajectory> load_manifest(const std::filesystem::path& path,
                                      const SubgoalRubric& rubric) {
    std::ifstream in(path);
    if (!in)
        throw FileMissingError(path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }

    const auto base = path.parent_path();
    std::vector<Trajectory> trajectories;
    try {
        for (const auto& entry : doc.at("trajectories")) {
            Trajectory traj;
            traj.id = entry.at("id").get<std::string>();
            if (entry.contains("ground_truth") && !entry["ground_truth"].is_null()) {
                BitVector y;
                for (const auto& bit : entry["ground_truth"])
                    y.push_back(bit.get<int>() ? 1 : 0);
                if (y.size() != rubric.size())
                    throw GroundTruthMismatchError(traj.id);
                for (const auto& bit : entry["ground_truth"]) {
                    int v = bit.get<int>();
                    if (v != 0 && v != 1)
                        throw GroundTruthMismatchError(traj.id);
                }
                traj.ground_truth = std::move(y);
            }
            int last_timestep = -1;
            for (const auto& frame_doc : entry.at("frames")) {
                Frame frame;
                frame.timestep = frame_doc.at("timestep").get<int>();
                if (frame.timestep <= last_timestep)
                    throw MalformedDocumentError("trajectory " + traj.id +
                                                 ": timesteps not strictly increasing");
                last_timestep = frame.timestep;
                for (const auto& [view, img_doc] : frame_doc.at("images").items()) {
                    ImageRef ref;
                    ref.path = base / img_doc.at("path").get<std::string>();
                    ref.media_type = img_doc.at("media_type").get<std::string>();
                    if (!std::filesystem::exists(ref.path))
                        throw MissingImageError(ref.path.string());
                    frame.images.emplace(view, std::move(ref));
                }
                if (frame.images.empty())
                    throw MalformedDocumentError("trajectory " + traj.id + ": frame " +
                                                 std::to_string(frame.timestep) +
                                                 " has no views");
                traj.frames.push_back(std::move(frame));
            }
            if (traj.frames.empty())
                throw MalformedDocumentError("trajectory " + traj.id + ": no frames");
            trajectories.push_back(std::move(traj));
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedDocumentError(path.string() + ": " + e.what());
    }
    return trajectories;
}

Trajectory select_views(const Trajectory& trajectory, const std::vector<std::string>& views) {
    Trajectory out;
    out.id = trajectory.id;
    out.ground_truth = trajectory.ground_truth;
    for (const auto& frame : trajectory.frames) {
        Frame kept;
        kept.timestep = frame.timestep;
        for (const auto& view : views) {
            auto it = frame.images.find(view);
            if (it == frame.images.end())
                throw UnknownViewError(view, frame.timestep);
            kept.images.emplace(view, it->second);
        }
        out.frames.push_back(std::move(kept));
    }
    return out;
}

Trajectory sample_frames(const Trajectory& trajectory, const FramePolicy& policy) {
    const std::size_t m = trajectory.frames.size();
    std::vector<std::size_t> keep;
    switch (policy.kind) {
        case FramePolicy::Kind::All:
            for (std::size_t i = 0; i < m; ++i) keep.push_back(i);
            break;
        case FramePolicy::Kind::Stride: {
            const std::size_t step = std::max(1, policy.stride_step);
            for (std::size_t i = 0; i < m; i += step) keep.push_back(i);
            break;
        }
        case FramePolicy::Kind::Keyframes: {
            const int count = std::max(2, policy.keyframe_count);
            for (int i = 0; i < count; ++i) {
                double pos = m <= 1 ? 0.0
                                    : double(i) * double(m - 1) / double(count - 1);
                keep.push_back(std::size_t(std::llround(pos)));
            }
            break;
        }
    }
    // Endpoint frames always survive.
    if (m > 0) {
        if (keep.empty() || keep.front() != 0) keep.insert(keep.begin(), 0);
        if (keep.back() != m - 1) keep.push_back(m - 1);
    }
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());

    Trajectory out;
    out.id = trajectory.id;
    out.ground_truth = trajectory.ground_truth;
    for (auto i : keep) out.frames.push_back(trajectory.frames[i]);
    return out;
}

Trajectory subgoal_window(const Trajectory& trajectory, int k, int n) {
    const long m = long(trajectory.frames.size());
    if (n < 1 || k < 1 || k > n)
        throw IndexOutOfRangeError("k=" + std::to_string(k) + ", n=" + std::to_string(n));
    if (m < 1)
        throw IndexOutOfRangeError("empty trajectory");

    // 1-based span boundaries: ceil((k-1)*m/n)+1 .. ceil(k*m/n).
    auto ceil_div = [](long a, long b) { return (a + b - 1) / b; };
    long lo = ceil_div((long(k) - 1) * m, n) + 1;
    long hi = ceil_div(long(k) * m, n);
    lo = std::min(lo, m);
    hi = std::max(hi, lo);
    // One frame of context each side where available.
    lo = std::max(1L, lo - 1);
    hi = std::min(m, hi + 1);

    Trajectory out;
    out.id = trajectory.id;
    out.ground_truth = trajectory.ground_truth;
    for (long i = lo; i <= hi; ++i) out.frames.push_back(trajectory.frames[i - 1]);
    return out;
}

}  // namespace stepeval
