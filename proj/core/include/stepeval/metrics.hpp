#pragma once

#include <vector>

#include "stepeval/rubric.hpp"

namespace stepeval {

struct SuccessSummary {
    std::vector<double> per_subgoal_sr;  // length n
    double overall_sr = 0.0;             // fraction of all-ones vectors
    std::size_t trajectory_count = 0;
    std::vector<std::size_t> per_subgoal_successes;  // raw counts
    std::size_t overall_successes = 0;
};

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    double accuracy() const { return double(tp + tn) / double(total()); }
};

struct DiagnosticsSummary {
    std::vector<double> per_subgoal_accuracy;  // A_k
    double task_eval_accuracy = 0.0;           // A_task
    std::vector<ConfusionMatrix> confusions;
    std::size_t trajectory_count = 0;
};

SuccessSummary success_summary(const std::vector<BitVector>& vectors, std::size_t n);

std::vector<double> per_subgoal_accuracy(const std::vector<BitVector>& predicted,
                                         const std::vector<BitVector>& truth);

double task_eval_accuracy(const std::vector<BitVector>& predicted,
                          const std::vector<BitVector>& truth);

std::vector<ConfusionMatrix> confusion_matrices(const std::vector<BitVector>& predicted,
                                                const std::vector<BitVector>& truth);

DiagnosticsSummary diagnostics_summary(const std::vector<BitVector>& predicted,
                                       const std::vector<BitVector>& truth);

}  // namespace stepeval
