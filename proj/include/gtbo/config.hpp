#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtbo/bo.hpp"
#include "gtbo/orchestrator.hpp"
#include "gtbo/testbed.hpp"

namespace gtbo {

// Raised for anything wrong with a config: syntax, types, unknown keys,
// out-of-range values. The message carries the line number (for parse
// errors) or the dotted key path (for semantic ones).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A single TOML value. Only the subset needed for run configs is
// supported: booleans, integers, floats, quoted strings and flat arrays.
struct TomlValue {
    enum class Kind { boolean, integer, real, string, array };

    Kind kind = Kind::integer;
    bool b = false;
    long long i = 0;
    double d = 0.0;
    std::string s;
    std::vector<TomlValue> items;
    int line = 0;  // 1-based source line, 0 for synthetic values

    const char* kind_name() const;
};

// Flattened document: sections and dotted keys collapse to full paths,
// so `[gt]\nparticles = 5` and `gt.particles = 5` are the same entry.
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text);

// Parses a single `key = value` override (the --set argument form).
TomlTable parse_override(const std::string& assignment);

// Copies every entry of `layer` into `base`, replacing on collision.
void merge_into(TomlTable& base, const TomlTable& layer);

struct SweepConfig {
    std::string axis = "noise_std";  // noise_std | ambient_dim | active_dim_count
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;
};

// Fully resolved run description. Field names mirror the dotted config
// keys; resolve_config() fills it from a merged TomlTable and rejects
// unknown keys or type mismatches with the offending path.
struct RunConfig {
    BenchmarkName bench_name = BenchmarkName::levy4;
    int ambient_dim = 100;
    double noise_std = -1.0;        // negative: per-function default
    std::vector<int> active_dims;   // explicit placement; wins over randomize
    int levy_active_count = 0;
    bool randomize_placement = true;

    GtConfig gt;
    BoConfig bo;
    std::string profile = "synthetic";  // synthetic | real_world

    std::uint64_t seed = 1;
    std::string output_dir = "gtbo-out";
    std::string mode = "full";  // full | gt_only | random_search | sweep
    SweepConfig sweep;

    void validate() const;

    // Builds the benchmark this config describes. Placement of active
    // dimensions is drawn from a substream of `seed` unless the config
    // pins them explicitly.
    BenchmarkSpec make_spec() const;
};

// Named preset: a table merged between built-in defaults and the file.
// "desk" is the laptop-scale setup (D=100, 2000 particles, 150 tests,
// 100 BO evaluations).
TomlTable preset_table(const std::string& name);

RunConfig resolve_config(const TomlTable& merged);

}  // namespace gtbo
