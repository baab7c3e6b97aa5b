#ifndef GTBO_OBJECTIVE_HPP
#define GTBO_OBJECTIVE_HPP

#include <functional>
#include <optional>
#include <vector>

namespace gtbo {

// One black-box evaluation. `truth` is the noise-free value when the caller
// happens to know it (synthetic benchmarks); it never feeds back into the
// algorithm and exists only for regret reporting.
struct EvalOutcome {
    double y = 0.0;
    std::optional<double> truth;
};

using Objective = std::function<EvalOutcome(const std::vector<double>&)>;

// Where in the pipeline an evaluation was spent.
enum class Phase { ProbeDefault, ProbeBin, GtTest, Bo, Random };

const char* phase_name(Phase p);

// One row of the evaluation log, in spend order. `iteration` counts within
// the phase: 0 for probes, the test index for GT, the step index for BO.
struct EvalRecord {
    Phase phase = Phase::ProbeDefault;
    int iteration = 0;
    std::vector<double> point;
    double y = 0.0;
    std::optional<double> truth;
};

using Recorder = std::function<void(const EvalRecord&)>;

}  // namespace gtbo

#endif  // GTBO_OBJECTIVE_HPP
