#pragma once

#include <vector>

#include "stepeval/judge.hpp"
#include "stepeval/optimizer.hpp"
#include "stepeval/rubric.hpp"
#include "stepeval/trajectory.hpp"

namespace stepeval {

// Judges a batch of trajectories, up to `parallel` at a time. Output order
// matches input order regardless of completion order.
std::vector<Verdict> evaluate_batch(JudgeBackend& backend, const EvalConfig& config,
                                    const SubgoalRubric& rubric,
                                    const std::vector<Trajectory>& trajectories,
                                    const std::vector<PromptTemplate>& extra_templates = {},
                                    int parallel = 4);

}  // namespace stepeval
