#include "gtbo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "gtbo/common.hpp"

namespace gtbo {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Removes a trailing comment, ignoring '#' inside quoted strings.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

bool is_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

void check_key(const std::string& key, int line) {
    if (key.empty()) fail(line, "empty key");
    if (key.front() == '.' || key.back() == '.' || key.find("..") != std::string::npos)
        fail(line, "malformed key '" + key + "'");
    for (char c : key)
        if (!is_key_char(c)) fail(line, "invalid character in key '" + key + "'");
}

struct Cursor {
    const std::string& text;
    size_t pos = 0;
    int line;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void skip_ws() {
        while (!done() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }
};

TomlValue parse_value(Cursor& c);

TomlValue parse_string(Cursor& c) {
    TomlValue v;
    v.kind = TomlValue::Kind::string;
    v.line = c.line;
    ++c.pos;  // opening quote
    while (true) {
        if (c.done()) fail(c.line, "unterminated string");
        char ch = c.text[c.pos++];
        if (ch == '"') break;
        if (ch == '\\') {
            if (c.done()) fail(c.line, "unterminated string");
            char esc = c.text[c.pos++];
            switch (esc) {
                case '"': v.s += '"'; break;
                case '\\': v.s += '\\'; break;
                case 'n': v.s += '\n'; break;
                case 't': v.s += '\t'; break;
                case 'r': v.s += '\r'; break;
                default: fail(c.line, std::string("unsupported escape '\\") + esc + "'");
            }
        } else {
            v.s += ch;
        }
    }
    return v;
}

TomlValue parse_array(Cursor& c) {
    TomlValue v;
    v.kind = TomlValue::Kind::array;
    v.line = c.line;
    ++c.pos;  // '['
    c.skip_ws();
    if (!c.done() && c.peek() == ']') {
        ++c.pos;
        return v;
    }
    while (true) {
        v.items.push_back(parse_value(c));
        c.skip_ws();
        if (c.done()) fail(c.line, "unterminated array");
        char ch = c.text[c.pos++];
        if (ch == ']') break;
        if (ch != ',') fail(c.line, "expected ',' or ']' in array");
        c.skip_ws();
        // allow a trailing comma before the closing bracket
        if (!c.done() && c.peek() == ']') {
            ++c.pos;
            break;
        }
    }
    return v;
}

TomlValue parse_scalar(Cursor& c) {
    size_t start = c.pos;
    while (!c.done()) {
        char ch = c.peek();
        if (ch == ',' || ch == ']' || ch == ' ' || ch == '\t') break;
        ++c.pos;
    }
    std::string tok = c.text.substr(start, c.pos - start);
    if (tok.empty()) fail(c.line, "expected a value");

    TomlValue v;
    v.line = c.line;
    if (tok == "true" || tok == "false") {
        v.kind = TomlValue::Kind::boolean;
        v.b = (tok == "true");
        return v;
    }

    bool integer_shaped = true;
    size_t p = (tok[0] == '+' || tok[0] == '-') ? 1 : 0;
    if (p == tok.size()) integer_shaped = false;
    for (size_t i = p; i < tok.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(tok[i]))) integer_shaped = false;
    if (integer_shaped) {
        errno = 0;
        char* end = nullptr;
        long long iv = std::strtoll(tok.c_str(), &end, 10);
        if (errno == ERANGE) fail(c.line, "integer out of range: '" + tok + "'");
        v.kind = TomlValue::Kind::integer;
        v.i = iv;
        return v;
    }

    errno = 0;
    char* end = nullptr;
    double dv = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || tok.empty())
        fail(c.line, "cannot parse value '" + tok + "'");
    v.kind = TomlValue::Kind::real;
    v.d = dv;
    return v;
}

TomlValue parse_value(Cursor& c) {
    c.skip_ws();
    if (c.done()) fail(c.line, "expected a value");
    char ch = c.peek();
    if (ch == '"') return parse_string(c);
    if (ch == '[') return parse_array(c);
    return parse_scalar(c);
}

TomlValue parse_value_string(const std::string& text, int line) {
    Cursor c{text, 0, line};
    TomlValue v = parse_value(c);
    c.skip_ws();
    if (!c.done()) fail(line, "trailing characters after value: '" + text.substr(c.pos) + "'");
    return v;
}

}  // namespace

const char* TomlValue::kind_name() const {
    switch (kind) {
        case Kind::boolean: return "boolean";
        case Kind::integer: return "integer";
        case Kind::real: return "float";
        case Kind::string: return "string";
        case Kind::array: return "array";
    }
    return "?";
}

TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::string prefix;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header");
            std::string name = trim(s.substr(1, s.size() - 2));
            check_key(name, line);
            prefix = name;
            continue;
        }

        size_t eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected 'key = value'");
        std::string key = trim(s.substr(0, eq));
        check_key(key, line);
        std::string full = prefix.empty() ? key : prefix + "." + key;
        if (table.count(full)) fail(line, "duplicate key '" + full + "'");

        TomlValue v = parse_value_string(trim(s.substr(eq + 1)), line);
        table.emplace(full, std::move(v));
    }
    return table;
}

TomlTable parse_override(const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    std::string key = trim(assignment.substr(0, eq));
    check_key(key, 0);
    TomlTable t;
    t.emplace(key, parse_value_string(trim(assignment.substr(eq + 1)), 0));
    return t;
}

void merge_into(TomlTable& base, const TomlTable& layer) {
    for (const auto& [k, v] : layer) base[k] = v;
}

TomlTable preset_table(const std::string& name) {
    if (name == "desk") {
        TomlTable t;
        t.emplace("benchmark.ambient_dim", parse_value_string("100", 0));
        t.emplace("gt.particles", parse_value_string("2000", 0));
        t.emplace("gt.max_tests", parse_value_string("150", 0));
        t.emplace("bo.budget", parse_value_string("100", 0));
        return t;
    }
    throw ConfigError("unknown preset '" + name + "'");
}

namespace {

// Typed read-out of a merged table. Every key touched is remembered so
// leftovers can be reported as unknown.
class View {
public:
    explicit View(const TomlTable& t) : table_(t) {}

    const TomlValue* find(const std::string& key) {
        auto it = table_.find(key);
        if (it == table_.end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    long long get_int(const std::string& key, long long def) {
        const TomlValue* v = find(key);
        if (!v) return def;
        if (v->kind != TomlValue::Kind::integer) type_error(key, *v, "an integer");
        return v->i;
    }

    double get_real(const std::string& key, double def) {
        const TomlValue* v = find(key);
        if (!v) return def;
        if (v->kind == TomlValue::Kind::integer) return static_cast<double>(v->i);
        if (v->kind != TomlValue::Kind::real) type_error(key, *v, "a number");
        return v->d;
    }

    bool get_bool(const std::string& key, bool def) {
        const TomlValue* v = find(key);
        if (!v) return def;
        if (v->kind != TomlValue::Kind::boolean) type_error(key, *v, "a boolean");
        return v->b;
    }

    std::string get_str(const std::string& key, const std::string& def) {
        const TomlValue* v = find(key);
        if (!v) return def;
        if (v->kind != TomlValue::Kind::string) type_error(key, *v, "a string");
        return v->s;
    }

    std::vector<long long> get_int_array(const std::string& key) {
        const TomlValue* v = find(key);
        std::vector<long long> out;
        if (!v) return out;
        if (v->kind != TomlValue::Kind::array) type_error(key, *v, "an array");
        for (const TomlValue& e : v->items) {
            if (e.kind != TomlValue::Kind::integer) type_error(key, e, "an array of integers");
            out.push_back(e.i);
        }
        return out;
    }

    std::vector<double> get_real_array(const std::string& key) {
        const TomlValue* v = find(key);
        std::vector<double> out;
        if (!v) return out;
        if (v->kind != TomlValue::Kind::array) type_error(key, *v, "an array");
        for (const TomlValue& e : v->items) {
            if (e.kind == TomlValue::Kind::integer)
                out.push_back(static_cast<double>(e.i));
            else if (e.kind == TomlValue::Kind::real)
                out.push_back(e.d);
            else
                type_error(key, e, "an array of numbers");
        }
        return out;
    }

    void finish() const {
        for (const auto& [k, v] : table_) {
            if (!used_.count(k)) {
                std::string where = v.line > 0 ? " (line " + std::to_string(v.line) + ")" : "";
                throw ConfigError("unknown config key '" + k + "'" + where);
            }
        }
    }

private:
    [[noreturn]] static void type_error(const std::string& key, const TomlValue& v,
                                        const std::string& want) {
        std::string where = v.line > 0 ? " (line " + std::to_string(v.line) + ")" : "";
        throw ConfigError("'" + key + "' expects " + want + ", got " + v.kind_name() + where);
    }

    const TomlTable& table_;
    std::set<std::string> used_;
};

int checked_int(const std::string& key, long long v) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError("'" + key + "' out of range");
    return static_cast<int>(v);
}

}  // namespace

RunConfig resolve_config(const TomlTable& merged) {
    View view(merged);
    RunConfig cfg;

    std::string bench = view.get_str("benchmark.name", "levy4");
    try {
        cfg.bench_name = benchmark_name_from_string(bench);
    } catch (const std::invalid_argument&) {
        throw ConfigError("'benchmark.name' has no benchmark called '" + bench + "'");
    }
    cfg.ambient_dim = checked_int("benchmark.ambient_dim",
                                  view.get_int("benchmark.ambient_dim", cfg.ambient_dim));
    cfg.noise_std = view.get_real("benchmark.noise_std", cfg.noise_std);
    for (long long v : view.get_int_array("benchmark.active_dims"))
        cfg.active_dims.push_back(checked_int("benchmark.active_dims", v));
    cfg.levy_active_count = checked_int(
        "benchmark.levy_active_count", view.get_int("benchmark.levy_active_count", 0));
    cfg.randomize_placement = view.get_bool("benchmark.randomize_placement", true);

    cfg.gt.max_tests = checked_int("gt.max_tests", view.get_int("gt.max_tests", cfg.gt.max_tests));
    cfg.gt.particles = checked_int("gt.particles", view.get_int("gt.particles", cfg.gt.particles));
    cfg.gt.prior_q = view.get_real("gt.prior_q", cfg.gt.prior_q);
    cfg.gt.eta = view.get_real("gt.eta", cfg.gt.eta);
    cfg.gt.c_lower = view.get_real("gt.c_lower", cfg.gt.c_lower);
    cfg.gt.c_upper = view.get_real("gt.c_upper", cfg.gt.c_upper);
    cfg.gt.batch_size = checked_int("gt.batch_size", view.get_int("gt.batch_size", cfg.gt.batch_size));
    cfg.gt.n_def = checked_int("gt.n_def", view.get_int("gt.n_def", cfg.gt.n_def));
    cfg.gt.selection.batch_size = cfg.gt.batch_size;
    cfg.gt.selection.n_seed_groups = checked_int(
        "gt.seed_groups", view.get_int("gt.seed_groups", cfg.gt.selection.n_seed_groups));
    cfg.gt.selection.max_group_size = checked_int(
        "gt.max_group_size", view.get_int("gt.max_group_size", cfg.gt.selection.max_group_size));
    cfg.gt.selection.mc_samples =
        checked_int("gt.mc_samples", view.get_int("gt.mc_samples", cfg.gt.selection.mc_samples));
    cfg.gt.selection.mc_samples_final = checked_int(
        "gt.mc_samples_final", view.get_int("gt.mc_samples_final", cfg.gt.selection.mc_samples_final));
    cfg.gt.selection.near_optimal_fraction =
        view.get_real("gt.near_optimal_fraction", cfg.gt.selection.near_optimal_fraction);
    cfg.gt.smc.ess_threshold_fraction =
        view.get_real("gt.ess_threshold_fraction", cfg.gt.smc.ess_threshold_fraction);
    cfg.gt.smc.gibbs_sweeps =
        checked_int("gt.gibbs_sweeps", view.get_int("gt.gibbs_sweeps", cfg.gt.smc.gibbs_sweeps));
    cfg.gt.smc.move_dims_per_sweep = checked_int(
        "gt.move_dims_per_sweep", view.get_int("gt.move_dims_per_sweep", cfg.gt.smc.move_dims_per_sweep));

    cfg.bo.budget = checked_int("bo.budget", view.get_int("bo.budget", cfg.bo.budget));
    cfg.bo.acq_restarts =
        checked_int("bo.acq_restarts", view.get_int("bo.acq_restarts", cfg.bo.acq_restarts));
    cfg.bo.acq_raw_samples =
        checked_int("bo.acq_raw_samples", view.get_int("bo.acq_raw_samples", cfg.bo.acq_raw_samples));
    cfg.bo.dedup_tolerance = view.get_real("bo.dedup_tolerance", cfg.bo.dedup_tolerance);
    cfg.bo.first_fit_restarts = checked_int(
        "bo.first_fit_restarts", view.get_int("bo.first_fit_restarts", cfg.bo.first_fit_restarts));
    cfg.bo.first_fit_iters =
        checked_int("bo.first_fit_iters", view.get_int("bo.first_fit_iters", cfg.bo.first_fit_iters));
    cfg.bo.refit_iters =
        checked_int("bo.refit_iters", view.get_int("bo.refit_iters", cfg.bo.refit_iters));
    cfg.profile = view.get_str("bo.profile", cfg.profile);

    long long seed = view.get_int("seed", static_cast<long long>(cfg.seed));
    if (seed < 0) throw ConfigError("'seed' must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.output_dir = view.get_str("out", cfg.output_dir);
    cfg.mode = view.get_str("mode", cfg.mode);

    cfg.sweep.axis = view.get_str("sweep.axis", cfg.sweep.axis);
    cfg.sweep.values = view.get_real_array("sweep.values");
    for (long long s : view.get_int_array("sweep.seeds")) {
        if (s < 0) throw ConfigError("'sweep.seeds' must be non-negative");
        cfg.sweep.seeds.push_back(static_cast<std::uint64_t>(s));
    }

    view.finish();

    if (cfg.profile == "synthetic") {
        cfg.bo.active_prior = {0.0, 1.0};
        cfg.bo.inactive_prior = {7.0, 1.0};
    } else if (cfg.profile == "real_world") {
        cfg.bo.active_prior = {0.0, 1.0};
        cfg.bo.inactive_prior = {3.0, 1.0};
    } else {
        throw ConfigError("'bo.profile' must be \"synthetic\" or \"real_world\", got \"" +
                          cfg.profile + "\"");
    }

    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (ambient_dim < 1) throw ConfigError("'benchmark.ambient_dim' must be positive");
    if (mode != "full" && mode != "gt_only" && mode != "random_search" && mode != "sweep")
        throw ConfigError("'mode' must be one of full, gt_only, random_search, sweep; got \"" +
                          mode + "\"");
    for (int d : active_dims)
        if (d < 0 || d >= ambient_dim)
            throw ConfigError("'benchmark.active_dims' entry " + std::to_string(d) +
                              " outside [0, " + std::to_string(ambient_dim) + ")");
    if (bench_name == BenchmarkName::levy && active_dims.empty() && levy_active_count < 1)
        throw ConfigError("'benchmark.levy_active_count' must be set for the levy benchmark");

    try {
        gt.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("gt: ") + e.what());
    }
    try {
        bo.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bo: ") + e.what());
    }

    if (mode == "sweep") {
        if (sweep.axis != "noise_std" && sweep.axis != "ambient_dim" &&
            sweep.axis != "active_dim_count")
            throw ConfigError(
                "'sweep.axis' must be one of noise_std, ambient_dim, active_dim_count; got \"" +
                sweep.axis + "\"");
        if (sweep.values.empty()) throw ConfigError("'sweep.values' must be non-empty in sweep mode");
        if (sweep.seeds.empty()) throw ConfigError("'sweep.seeds' must be non-empty in sweep mode");
        if (sweep.axis == "active_dim_count" && bench_name != BenchmarkName::levy)
            throw ConfigError(
                "'sweep.axis' = active_dim_count needs benchmark.name = \"levy\" (the only "
                "family with a free active count)");
        if (sweep.axis == "ambient_dim")
            for (double v : sweep.values)
                if (v < 1 || v != std::floor(v))
                    throw ConfigError("'sweep.values' must be positive integers for ambient_dim");
        if (sweep.axis == "active_dim_count")
            for (double v : sweep.values)
                if (v < 1 || v != std::floor(v))
                    throw ConfigError("'sweep.values' must be positive integers for active_dim_count");
    }
}

BenchmarkSpec RunConfig::make_spec() const {
    if (!active_dims.empty())
        return make_benchmark(bench_name, ambient_dim, noise_std, active_dims, levy_active_count);
    if (randomize_placement) {
        Rng placement = make_substream(seed, 0x9d);
        return make_benchmark_randomized(bench_name, ambient_dim, placement, noise_std,
                                         levy_active_count);
    }
    return make_benchmark(bench_name, ambient_dim, noise_std, {}, levy_active_count);
}

}  // namespace gtbo
