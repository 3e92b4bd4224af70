#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stepeval {

using BitVector = std::vector<std::uint8_t>;  // entries are 0 or 1

// Outcome vectors are capped at one machine word's worth of subgoals.
inline constexpr std::size_t kMaxSubgoals = 64;

struct Subgoal {
    int index = 0;  // 1-based position in the rubric
    std::string name;
    std::string description;
};

// Ordered subgoal decomposition of a task. Immutable after load.
struct SubgoalRubric {
    std::string task_name;
    std::vector<Subgoal> subgoals;

    std::size_t size() const { return subgoals.size(); }
};

SubgoalRubric load_rubric(const std::filesystem::path& path);
void save_rubric(const SubgoalRubric& rubric, const std::filesystem::path& path);

// Throws InvalidRubricError naming the offending field.
void validate_rubric(const SubgoalRubric& rubric);

// Returns y unchanged when it has length n and binary entries.
BitVector validate_outcome_vector(const SubgoalRubric& rubric, const BitVector& y);

}  // namespace stepeval
