#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gtbo/config.hpp"
#include "gtbo/objective.hpp"

namespace gtbo {

// One evaluation as it lands in trace.csv. Points are recorded by hash
// rather than coordinates, so traces stay small at D=100 and can still
// be diffed and checked for replay identity.
struct TraceRow {
    int iteration = 0;  // 1-based, global across phases
    Phase phase = Phase::Bo;
    std::uint64_t point_hash = 0;
    double y = 0.0;
    std::optional<double> f_true;
    double incumbent_y = 0.0;
    std::optional<double> incumbent_f;

    bool operator==(const TraceRow&) const = default;
};

// FNV-1a over the raw coordinate bytes, so any bit change in any
// coordinate changes the hash.
std::uint64_t point_hash(const std::vector<double>& x);

// Folds a stream of evaluations into trace rows, tracking the running
// noisy incumbent and the true value it had when it was recorded.
class TraceBuilder {
public:
    void add(Phase phase, const std::vector<double>& point, double y,
             const std::optional<double>& truth);

    // Adapter for the evaluation-stream callback of the GT and BO loops.
    Recorder recorder();

    const std::vector<TraceRow>& rows() const { return rows_; }

private:
    std::vector<TraceRow> rows_;
    double incumbent_y_ = 0.0;
    std::optional<double> incumbent_f_;
};

// Uniform-random baseline over the unit box at the same budget.
void random_search(const Objective& f, int dim, int budget, Rng& rng, const Recorder& recorder);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

void write_marginals_csv(const std::filesystem::path& path,
                         const std::vector<std::vector<double>>& history);
void write_active_count_csv(const std::filesystem::path& path,
                            const std::vector<std::vector<double>>& history, double eta);

struct SweepCell {
    double value = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> correct;  // correctly classified fraction per test
    std::optional<int> converged_at;
};

// Rows are padded to `pad_to` tests per cell by carrying the final
// value, so curves from cells that converged early stay comparable.
void write_sweep_csv(const std::filesystem::path& path, const std::string& axis,
                     const std::vector<SweepCell>& cells, int pad_to);

// Fraction of dimensions on the right side of the classification bands:
// truly inactive below 0.01, truly active above 0.9.
double classification_fraction(const std::vector<double>& marginals,
                               const std::vector<int>& true_active);

struct RunOutcome {
    int exit_code = 0;
    std::vector<TraceRow> trace;
    nlohmann::ordered_json summary;
};

// Executes the configured mode and writes artifacts into
// cfg.output_dir: trace.csv and summary.json always, marginals.csv and
// active_count.csv when a GT phase ran, sweep.csv in sweep mode. A
// failure mid-run still writes what was gathered and reports nonzero.
RunOutcome run_experiment(const RunConfig& cfg);

}  // namespace gtbo
