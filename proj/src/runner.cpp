#include "gtbo/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "gtbo/common.hpp"
#include "gtbo/orchestrator.hpp"
#include "gtbo/testbed.hpp"

namespace gtbo {

namespace {

using nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt17(*v) : ""; }

std::string fmt_hash(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Phase phase_from_name(const std::string& s) {
    if (s == "probe_default") return Phase::ProbeDefault;
    if (s == "probe_bin") return Phase::ProbeBin;
    if (s == "gt_test") return Phase::GtTest;
    if (s == "bo") return Phase::Bo;
    if (s == "random") return Phase::Random;
    throw std::runtime_error("unknown phase '" + s + "' in trace");
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const char* what) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw std::runtime_error(std::string("bad ") + what + " field '" + s + "' in trace");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

double wall_seconds(std::chrono::steady_clock::time_point a,
                    std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

}  // namespace

std::uint64_t point_hash(const std::vector<double>& x) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : x) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (bits >> (8 * byte)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

void TraceBuilder::add(Phase phase, const std::vector<double>& point, double y,
                       const std::optional<double>& truth) {
    if (rows_.empty() || y < incumbent_y_) incumbent_y_ = y;
    if (truth && (!incumbent_f_ || *truth < *incumbent_f_)) incumbent_f_ = *truth;
    TraceRow row;
    row.iteration = static_cast<int>(rows_.size()) + 1;
    row.phase = phase;
    row.point_hash = point_hash(point);
    row.y = y;
    row.f_true = truth;
    row.incumbent_y = incumbent_y_;
    row.incumbent_f = incumbent_f_;
    rows_.push_back(std::move(row));
}

Recorder TraceBuilder::recorder() {
    return [this](const EvalRecord& r) { add(r.phase, r.point, r.y, r.truth); };
}

void random_search(const Objective& f, int dim, int budget, Rng& rng, const Recorder& recorder) {
    if (dim < 1) throw std::invalid_argument("random_search: dim must be positive");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int b = 0; b < budget; ++b) {
        std::vector<double> x(dim);
        for (double& xi : x) xi = unit(rng);
        EvalOutcome out = f(x);
        if (recorder) recorder(EvalRecord{Phase::Random, b, x, out.y, out.truth});
    }
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
    std::ofstream out = open_out(path);
    out << "# gtbo-trace v1\n";
    out << "iteration,phase,point_hash,y,f_true,inc_y,inc_f\n";
    for (const TraceRow& r : rows) {
        out << r.iteration << ',' << phase_name(r.phase) << ',' << fmt_hash(r.point_hash) << ','
            << fmt17(r.y) << ',' << fmt_opt(r.f_true) << ',' << fmt17(r.incumbent_y) << ','
            << fmt_opt(r.incumbent_f) << '\n';
    }
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "# gtbo-trace v1")
        throw std::runtime_error(path.string() + ": missing 'gtbo-trace v1' header");
    if (!std::getline(in, line) || line != "iteration,phase,point_hash,y,f_true,inc_y,inc_f")
        throw std::runtime_error(path.string() + ": unexpected trace columns");

    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f = split_csv(line);
        if (f.size() != 7)
            throw std::runtime_error(path.string() + ": expected 7 fields, got " +
                                     std::to_string(f.size()));
        TraceRow r;
        r.iteration = static_cast<int>(parse_double(f[0], "iteration"));
        r.phase = phase_from_name(f[1]);
        errno = 0;
        char* end = nullptr;
        r.point_hash = std::strtoull(f[2].c_str(), &end, 16);
        if (end != f[2].c_str() + f[2].size() || f[2].empty())
            throw std::runtime_error("bad point_hash field '" + f[2] + "' in trace");
        r.y = parse_double(f[3], "y");
        if (!f[4].empty()) r.f_true = parse_double(f[4], "f_true");
        r.incumbent_y = parse_double(f[5], "inc_y");
        if (!f[6].empty()) r.incumbent_f = parse_double(f[6], "inc_f");
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_marginals_csv(const std::filesystem::path& path,
                         const std::vector<std::vector<double>>& history) {
    std::ofstream out = open_out(path);
    out << "# gtbo-marginals v1\n";
    out << "iteration";
    size_t dim = history.empty() ? 0 : history.front().size();
    for (size_t j = 0; j < dim; ++j) out << ",m" << j;
    out << '\n';
    for (size_t t = 0; t < history.size(); ++t) {
        out << (t + 1);
        for (double m : history[t]) out << ',' << fmt17(m);
        out << '\n';
    }
}

void write_active_count_csv(const std::filesystem::path& path,
                            const std::vector<std::vector<double>>& history, double eta) {
    std::ofstream out = open_out(path);
    out << "# gtbo-active-count v1\n";
    out << "iteration,active_count\n";
    for (size_t t = 0; t < history.size(); ++t) {
        int count = 0;
        for (double m : history[t])
            if (m >= eta) ++count;
        out << (t + 1) << ',' << count << '\n';
    }
}

double classification_fraction(const std::vector<double>& marginals,
                               const std::vector<int>& true_active) {
    std::vector<char> active(marginals.size(), 0);
    for (int d : true_active) {
        if (d < 0 || d >= static_cast<int>(marginals.size()))
            throw std::invalid_argument("classification_fraction: active index out of range");
        active[d] = 1;
    }
    int correct = 0;
    for (size_t j = 0; j < marginals.size(); ++j) {
        if (active[j] ? marginals[j] > 0.9 : marginals[j] < 0.01) ++correct;
    }
    return marginals.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(marginals.size());
}

void write_sweep_csv(const std::filesystem::path& path, const std::string& axis,
                     const std::vector<SweepCell>& cells, int pad_to) {
    std::ofstream out = open_out(path);
    out << "# gtbo-sweep v1\n";
    out << "axis,value,seed,iteration,correct_fraction\n";
    for (const SweepCell& cell : cells) {
        for (int t = 0; t < pad_to; ++t) {
            double v = cell.correct.empty()
                           ? 0.0
                           : cell.correct[std::min<size_t>(t, cell.correct.size() - 1)];
            out << axis << ',' << fmt17(cell.value) << ',' << cell.seed << ',' << (t + 1) << ','
                << fmt17(v) << '\n';
        }
    }
}

namespace {

ordered_json prior_json(const LengthscalePrior& p) {
    return ordered_json{{"mu", p.mu}, {"sigma", p.sigma}};
}

ordered_json config_echo(const RunConfig& cfg) {
    ordered_json j;
    j["benchmark"] = {{"name", to_string(cfg.bench_name)},
                      {"ambient_dim", cfg.ambient_dim},
                      {"noise_std", cfg.noise_std},
                      {"active_dims", cfg.active_dims},
                      {"levy_active_count", cfg.levy_active_count},
                      {"randomize_placement", cfg.randomize_placement}};
    j["gt"] = {{"max_tests", cfg.gt.max_tests},
               {"particles", cfg.gt.particles},
               {"prior_q", cfg.gt.prior_q},
               {"eta", cfg.gt.eta},
               {"c_lower", cfg.gt.c_lower},
               {"c_upper", cfg.gt.c_upper},
               {"batch_size", cfg.gt.batch_size},
               {"n_def", cfg.gt.n_def},
               {"seed_groups", cfg.gt.selection.n_seed_groups},
               {"max_group_size", cfg.gt.selection.max_group_size},
               {"mc_samples", cfg.gt.selection.mc_samples},
               {"mc_samples_final", cfg.gt.selection.mc_samples_final},
               {"near_optimal_fraction", cfg.gt.selection.near_optimal_fraction},
               {"ess_threshold_fraction", cfg.gt.smc.ess_threshold_fraction},
               {"gibbs_sweeps", cfg.gt.smc.gibbs_sweeps},
               {"move_dims_per_sweep", cfg.gt.smc.move_dims_per_sweep}};
    j["bo"] = {{"budget", cfg.bo.budget},
               {"profile", cfg.profile},
               {"acq_restarts", cfg.bo.acq_restarts},
               {"acq_raw_samples", cfg.bo.acq_raw_samples},
               {"dedup_tolerance", cfg.bo.dedup_tolerance},
               {"first_fit_restarts", cfg.bo.first_fit_restarts},
               {"first_fit_iters", cfg.bo.first_fit_iters},
               {"refit_iters", cfg.bo.refit_iters},
               {"active_prior", prior_json(cfg.bo.active_prior)},
               {"inactive_prior", prior_json(cfg.bo.inactive_prior)}};
    j["seed"] = cfg.seed;
    j["out"] = cfg.output_dir;
    j["mode"] = cfg.mode;
    j["sweep"] = {{"axis", cfg.sweep.axis},
                  {"values", cfg.sweep.values},
                  {"seeds", cfg.sweep.seeds}};
    return j;
}

ordered_json benchmark_echo(const BenchmarkSpec& spec) {
    return ordered_json{{"name", to_string(spec.name)},
                        {"ambient_dim", spec.ambient_dim},
                        {"noise_std", spec.noise_std},
                        {"active_dims", spec.active_dims},
                        {"global_minimum", global_minimum(spec)}};
    }

ordered_json gt_summary(const GtResult& gt) {
    ordered_json j;
    j["gamma"] = gt.active_dims;
    std::vector<int> flagged;
    for (size_t i = 0; i < gt.active_dims.size(); ++i)
        if (gt.active_dims[i]) flagged.push_back(static_cast<int>(i));
    j["active_dims"] = flagged;
    if (gt.converged_at)
        j["converged_at"] = *gt.converged_at;
    else
        j["converged_at"] = nullptr;
    j["tests"] = gt.observations.size();
    j["evaluations"] = gt.evaluations_used;
    j["noise_var"] = gt.noise_model.noise_var;
    j["signal_var"] = gt.noise_model.signal_var;
    j["default_estimate"] = gt.probe.default_estimate;
    j["warnings"] = gt.warnings;
    j["wallclock_seconds"] = gt.wallclock_seconds;
    return j;
}

void append_final_metrics(ordered_json& summary, const std::vector<TraceRow>& rows,
                          const std::optional<double>& global_min) {
    summary["evaluations_total"] = rows.size();
    ordered_json inc_y = ordered_json::array();
    ordered_json regret = ordered_json::array();
    for (const TraceRow& r : rows) {
        inc_y.push_back(r.incumbent_y);
        if (global_min && r.incumbent_f)
            regret.push_back(*r.incumbent_f - *global_min);
        else
            regret.push_back(nullptr);
    }
    ordered_json fin;
    if (rows.empty()) {
        fin["incumbent_y"] = nullptr;
        fin["incumbent_f"] = nullptr;
        fin["true_regret"] = nullptr;
    } else {
        const TraceRow& last = rows.back();
        fin["incumbent_y"] = last.incumbent_y;
        fin["incumbent_f"] = last.incumbent_f ? ordered_json(*last.incumbent_f) : ordered_json();
        fin["true_regret"] = (global_min && last.incumbent_f)
                                 ? ordered_json(*last.incumbent_f - *global_min)
                                 : ordered_json();
    }
    summary["final"] = fin;
    summary["incumbent_y_series"] = inc_y;
    summary["true_regret_series"] = regret;
}

struct CellResult {
    SweepCell cell;
    int evaluations = 0;
};

// Applies one sweep-axis value to a copy of the base config.
RunConfig cell_config(const RunConfig& base, const std::string& axis, double value,
                      std::uint64_t seed) {
    RunConfig c = base;
    c.seed = seed;
    if (axis == "noise_std") {
        c.noise_std = value;
    } else if (axis == "ambient_dim") {
        c.ambient_dim = static_cast<int>(value);
    } else {
        c.levy_active_count = static_cast<int>(value);
    }
    return c;
}

CellResult run_sweep_cell(const RunConfig& cell_cfg) {
    BenchmarkSpec spec = cell_cfg.make_spec();
    Rng noise_rng = make_substream(cell_cfg.seed, 3);
    Objective obj = [&spec, &noise_rng](const std::vector<double>& x) {
        Observation o = evaluate(spec, x, noise_rng);
        return EvalOutcome{o.noisy_value, o.true_value};
    };
    Rng run_rng = make_substream(cell_cfg.seed, 2);
    GtResult gt = run_group_testing(obj, spec.default_point, cell_cfg.gt, run_rng);

    CellResult out;
    out.cell.seed = cell_cfg.seed;
    out.cell.converged_at = gt.converged_at;
    out.cell.correct.reserve(gt.marginals_history.size());
    for (const std::vector<double>& m : gt.marginals_history)
        out.cell.correct.push_back(classification_fraction(m, spec.active_dims));
    out.evaluations = gt.evaluations_used;
    return out;
}

}  // namespace

RunOutcome run_experiment(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);

    RunOutcome out;
    ordered_json& summary = out.summary;
    summary["schema"] = "gtbo-summary v1";
    summary["mode"] = cfg.mode;
    summary["seed"] = cfg.seed;
    summary["config"] = config_echo(cfg);

    TraceBuilder trace;
    Recorder rec = trace.recorder();
    std::optional<double> global_min;

    try {
        if (cfg.mode == "sweep") {
            std::vector<RunConfig> cell_cfgs;
            for (double v : cfg.sweep.values)
                for (std::uint64_t s : cfg.sweep.seeds) cell_cfgs.push_back(cell_config(cfg, cfg.sweep.axis, v, s));
            std::vector<CellResult> results(cell_cfgs.size());
            parallel_for(cell_cfgs.size(), [&](size_t lo, size_t hi) {
                for (size_t i = lo; i < hi; ++i) results[i] = run_sweep_cell(cell_cfgs[i]);
            });

            std::vector<SweepCell> cells;
            ordered_json cell_rows = ordered_json::array();
            size_t idx = 0;
            for (size_t vi = 0; vi < cfg.sweep.values.size(); ++vi) {
                for (size_t si = 0; si < cfg.sweep.seeds.size(); ++si, ++idx) {
                    CellResult& r = results[idx];
                    r.cell.value = cfg.sweep.values[vi];
                    cells.push_back(r.cell);
                    ordered_json cj;
                    cj["value"] = r.cell.value;
                    cj["seed"] = r.cell.seed;
                    cj["tests"] = r.cell.correct.size();
                    cj["evaluations"] = r.evaluations;
                    cj["converged_at"] =
                        r.cell.converged_at ? ordered_json(*r.cell.converged_at) : ordered_json();
                    cj["final_correct"] = r.cell.correct.empty() ? 0.0 : r.cell.correct.back();
                    cell_rows.push_back(std::move(cj));
                }
            }
            write_sweep_csv(dir / "sweep.csv", cfg.sweep.axis, cells, cfg.gt.max_tests);
            summary["sweep"] = {{"axis", cfg.sweep.axis}, {"cells", std::move(cell_rows)}};
        } else {
            BenchmarkSpec spec = cfg.make_spec();
            summary["benchmark"] = benchmark_echo(spec);
            global_min = global_minimum(spec);

            Rng noise_rng = make_substream(cfg.seed, 3);
            Objective obj = [&spec, &noise_rng](const std::vector<double>& x) {
                Observation o = evaluate(spec, x, noise_rng);
                return EvalOutcome{o.noisy_value, o.true_value};
            };
            Rng run_rng = make_substream(cfg.seed, 2);

            if (cfg.mode == "random_search") {
                auto t0 = std::chrono::steady_clock::now();
                random_search(obj, spec.ambient_dim, cfg.bo.budget, run_rng, rec);
                summary["random_search"] = {
                    {"evaluations", trace.rows().size()},
                    {"wallclock_seconds",
                     wall_seconds(t0, std::chrono::steady_clock::now())}};
            } else {
                GtResult gt = run_group_testing(obj, spec.default_point, cfg.gt, run_rng, rec);
                summary["gt"] = gt_summary(gt);
                write_marginals_csv(dir / "marginals.csv", gt.marginals_history);
                write_active_count_csv(dir / "active_count.csv", gt.marginals_history, cfg.gt.eta);

                if (cfg.mode == "full") {
                    size_t gt_rows = trace.rows().size();
                    auto t0 = std::chrono::steady_clock::now();
                    run_bo(obj, gt, cfg.bo, run_rng, rec);
                    summary["bo"] = {{"evaluations", trace.rows().size() - gt_rows},
                                     {"wallclock_seconds",
                                      wall_seconds(t0, std::chrono::steady_clock::now())}};
                }
            }
        }
    } catch (const std::exception& e) {
        summary["error"] = e.what();
        out.exit_code = 1;
    }

    out.trace = trace.rows();
    append_final_metrics(summary, out.trace, global_min);
    write_trace_csv(dir / "trace.csv", out.trace);
    {
        std::ofstream js = open_out(dir / "summary.json");
        js << summary.dump(2) << '\n';
    }
    return out;
}

}  // namespace gtbo
