#include "stepeval/runner.hpp"

#include <atomic>
#include <exception>
#include <thread>

namespace stepeval {

std::vector<Verdict> evaluate_batch(JudgeBackend& backend, const EvalConfig& config,
                                    const SubgoalRubric& rubric,
                                    const std::vector<Trajectory>& trajectories,
                                    const std::vector<PromptTemplate>& extra_templates,
                                    int parallel) {
    std::vector<Verdict> verdicts(trajectories.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= trajectories.size()) return;
            try {
                verdicts[i] =
                    judge_trajectory(backend, config, rubric, trajectories[i], extra_templates);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int workers = std::max(1, std::min<int>(parallel, int(trajectories.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
    }
    if (failure) std::rethrow_exception(failure);
    return verdicts;
}

}  // namespace stepeval
