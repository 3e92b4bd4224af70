#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stepeval/rubric.hpp"

namespace stepeval {

// Reference to an image on disk. Bytes are read lazily; dimensions are
// populated when the file is first decoded.
struct ImageRef {
    std::filesystem::path path;
    std::string media_type;  // image/png or image/jpeg
    std::optional<int> width;
    std::optional<int> height;
};

struct Frame {
    int timestep = 0;
    std::map<std::string, ImageRef> images;  // view name -> image
};

struct Trajectory {
    std::string id;
    std::vector<Frame> frames;
    std::optional<BitVector> ground_truth;

    std::size_t frame_count() const { return frames.size(); }
    std::size_t image_count() const {
        std::size_t total = 0;
        for (const auto& f : frames) total += f.images.size();
        return total;
    }
};

struct FramePolicy {
    enum class Kind { All, Stride, Keyframes };
    Kind kind = Kind::All;
    int stride_step = 1;     // Stride: step >= 1
    int keyframe_count = 2;  // Keyframes: count >= 2

    static FramePolicy all() { return {Kind::All, 1, 2}; }
    static FramePolicy stride(int step) { return {Kind::Stride, step, 2}; }
    static FramePolicy keyframes(int count) { return {Kind::Keyframes, 1, count}; }

    std::string describe() const;
    static FramePolicy parse(const std::string& text);
};

// Loads trajectories from a JSON manifest; image paths are resolved relative
// to the manifest file and must exist. Ground-truth vectors are validated
// against the rubric when present.
std::vector<Trajectory> load_manifest(const std::filesystem::path& path,
                                      const SubgoalRubric& rubric);

// Keeps exactly the requested views in every frame.
Trajectory select_views(const Trajectory& trajectory, const std::vector<std::string>& views);

// Subsamples frames per policy. The first and last input frame always
// survive; output is non-empty and order-preserving.
Trajectory sample_frames(const Trajectory& trajectory, const FramePolicy& policy);

// Contiguous frame window covering fractional span [(k-1)/n, k/n] of the
// timeline, padded by one frame of context on each side where available.
// Windows for k=1..n jointly cover all frames.
Trajectory subgoal_window(const Trajectory& trajectory, int k, int n);

}  // namespace stepeval
