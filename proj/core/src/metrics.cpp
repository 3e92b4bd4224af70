#include "stepeval/metrics.hpp"

#include <algorithm>

#include "stepeval/errors.hpp"

namespace stepeval {

namespace {

void check_paired(const std::vector<BitVector>& predicted, const std::vector<BitVector>& truth) {
    if (predicted.empty())
        throw EmptyInputError("no prediction vectors");
    if (predicted.size() != truth.size())
        throw LengthMismatchError(truth.size(), predicted.size());
    const std::size_t n = predicted.front().size();
    for (std::size_t j = 0; j < predicted.size(); ++j) {
        if (predicted[j].size() != n)
            throw LengthMismatchError(n, predicted[j].size());
        if (truth[j].size() != n)
            throw LengthMismatchError(n, truth[j].size());
    }
}

}  // namespace

SuccessSummary success_summary(const std::vector<BitVector>& vectors, std::size_t n) {
    if (vectors.empty())
        throw EmptyInputError("no outcome vectors");

    SuccessSummary summary;
    summary.trajectory_count = vectors.size();
    summary.per_subgoal_successes.assign(n, 0);
    for (const auto& y : vectors) {
        if (y.size() != n)
            throw LengthMismatchError(n, y.size());
        bool all_ones = true;
        for (std::size_t k = 0; k < n; ++k) {
            summary.per_subgoal_successes[k] += y[k];
            all_ones = all_ones && y[k] == 1;
        }
        summary.overall_successes += all_ones ? 1 : 0;
    }
    const double N = double(vectors.size());
    summary.per_subgoal_sr.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        summary.per_subgoal_sr[k] = double(summary.per_subgoal_successes[k]) / N;
    summary.overall_sr = double(summary.overall_successes) / N;
    return summary;
}

std::vector<double> per_subgoal_accuracy(const std::vector<BitVector>& predicted,
                                         const std::vector<BitVector>& truth) {
    check_paired(predicted, truth);
    const std::size_t n = predicted.front().size();
    const double N = double(predicted.size());
    std::vector<double> accuracy(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t agreements = 0;
        for (std::size_t j = 0; j < predicted.size(); ++j)
            agreements += predicted[j][k] == truth[j][k] ? 1 : 0;
        accuracy[k] = double(agreements) / N;
    }
    return accuracy;
}

double task_eval_accuracy(const std::vector<BitVector>& predicted,
                          const std::vector<BitVector>& truth) {
    check_paired(predicted, truth);
    std::size_t exact = 0;
    for (std::size_t j = 0; j < predicted.size(); ++j)
        exact += predicted[j] == truth[j] ? 1 : 0;
    return double(exact) / double(predicted.size());
}

std::vector<ConfusionMatrix> confusion_matrices(const std::vector<BitVector>& predicted,
                                                const std::vector<BitVector>& truth) {
    check_paired(predicted, truth);
    const std::size_t n = predicted.front().size();
    std::vector<ConfusionMatrix> matrices(n);
    for (std::size_t j = 0; j < predicted.size(); ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            auto& m = matrices[k];
            const int yhat = predicted[j][k], y = truth[j][k];
            if (yhat == 1 && y == 1) ++m.tp;
            else if (yhat == 1 && y == 0) ++m.fp;
            else if (yhat == 0 && y == 1) ++m.fn;
            else ++m.tn;
        }
    }
    return matrices;
}

DiagnosticsSummary diagnostics_summary(const std::vector<BitVector>& predicted,
                                       const std::vector<BitVector>& truth) {
    DiagnosticsSummary diag;
    diag.per_subgoal_accuracy = per_subgoal_accuracy(predicted, truth);
    diag.task_eval_accuracy = task_eval_accuracy(predicted, truth);
    diag.confusions = confusion_matrices(predicted, truth);
    diag.trajectory_count = predicted.size();
    return diag;
}

}  // namespace stepeval
