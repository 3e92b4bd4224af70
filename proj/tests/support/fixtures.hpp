#pragma once

// Shared test fixtures: rubrics, synthetic trajectories, and on-disk
// manifests with tiny generated images.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "stepeval/rubric.hpp"
#include "stepeval/trajectory.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using stepeval::BitVector;
using stepeval::Frame;
using stepeval::ImageRef;
using stepeval::SubgoalRubric;
using stepeval::Trajectory;

inline SubgoalRubric transfer_water_rubric() {
    SubgoalRubric rubric;
    rubric.task_name = "Transfer Water";
    rubric.subgoals = {
        {1, "pick_up_cup", "pick up cup"},
        {2, "align_cup", "align cup over bowl"},
        {3, "pour_water", "pour water"},
        {4, "place_cup", "place cup down"},
    };
    return rubric;
}

inline SubgoalRubric simple_rubric(std::size_t n, const std::string& task = "Task") {
    SubgoalRubric rubric;
    rubric.task_name = task;
    for (std::size_t k = 1; k <= n; ++k) {
        rubric.subgoals.push_back({int(k), "sg" + std::to_string(k),
                                   "subgoal " + std::to_string(k) + " criterion"});
    }
    return rubric;
}

// In-memory trajectory; image paths need not exist (only the manifest
// loader checks existence).
inline Trajectory synthetic_trajectory(const std::string& id, int frames,
                                       const std::vector<std::string>& views = {"front"},
                                       std::optional<BitVector> ground_truth = std::nullopt) {
    Trajectory traj;
    traj.id = id;
    traj.ground_truth = std::move(ground_truth);
    for (int i = 0; i < frames; ++i) {
        Frame frame;
        frame.timestep = i;
        for (const auto& view : views) {
            ImageRef ref;
            ref.path = "/nonexistent/" + id + "_" + std::to_string(i) + "_" + view + ".png";
            ref.media_type = "image/png";
            frame.images.emplace(view, ref);
        }
        traj.frames.push_back(std::move(frame));
    }
    return traj;
}

// Unique scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    fs::path dir = fs::temp_directory_path() /
                   ("stepeval_test_" + tag + "_" + std::to_string(rng()));
    fs::create_directories(dir);
    return dir;
}

inline fs::path write_png(const fs::path& path, int width = 8, int height = 8,
                          int shade = 128) {
    cv::Mat image(height, width, CV_8UC3, cv::Scalar(shade, shade / 2, 255 - shade));
    cv::imwrite(path.string(), image);
    return path;
}

// Writes a manifest plus its images; every trajectory gets `frames` frames
// in the given views. Returns the manifest path.
inline fs::path write_manifest(const fs::path& dir, std::size_t n_subgoals,
                               const std::vector<std::pair<std::string, std::optional<BitVector>>>& trajectories,
                               int frames = 3,
                               const std::vector<std::string>& views = {"front", "wrist"},
                               int image_px = 8) {
    nlohmann::ordered_json doc;
    doc["trajectories"] = nlohmann::ordered_json::array();
    for (const auto& [id, gt] : trajectories) {
        nlohmann::ordered_json traj;
        traj["id"] = id;
        if (gt) {
            traj["ground_truth"] = nlohmann::ordered_json::array();
            for (auto bit : *gt) traj["ground_truth"].push_back(int(bit));
        } else {
            traj["ground_truth"] = nullptr;
        }
        traj["frames"] = nlohmann::ordered_json::array();
        for (int i = 0; i < frames; ++i) {
            nlohmann::ordered_json frame;
            frame["timestep"] = i;
            for (const auto& view : views) {
                const std::string name = id + "_" + std::to_string(i) + "_" + view + ".png";
                write_png(dir / name, image_px, image_px, 20 * (i + 1));
                frame["images"][view] = {{"path", name}, {"media_type", "image/png"}};
            }
            traj["frames"].push_back(std::move(frame));
        }
        doc["trajectories"].push_back(std::move(traj));
    }
    (void)n_subgoals;
    fs::path manifest = dir / "manifest.json";
    std::ofstream(manifest) << doc.dump(2);
    return manifest;
}

inline fs::path write_rubric_file(const fs::path& dir, const SubgoalRubric& rubric) {
    nlohmann::ordered_json doc;
    doc["task_name"] = rubric.task_name;
    doc["subgoals"] = nlohmann::ordered_json::array();
    for (const auto& sg : rubric.subgoals)
        doc["subgoals"].push_back({{"name", sg.name}, {"description", sg.description}});
    fs::path path = dir / "rubric.json";
    std::ofstream(path) << doc.dump(2);
    return path;
}

}  // namespace fixtures
