#include <doctest.h>

#include <string>

#include "gtbo/config.hpp"

using namespace gtbo;

namespace {

std::string error_of(const std::string& toml) {
    try {
        parse_toml(toml);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string resolve_error(const TomlTable& t) {
    try {
        resolve_config(t);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("parses the supported toml subset") {
    const char* doc = R"(# header comment
seed = 42
mode = "gt_only"   # trailing comment
ratio = -0.5
flag = true
big = 1e6
name = "a # not a comment \"quoted\" \t"
empty_list = []
ints = [1, 2, 3,]
reals = [0.1, 2, 3.5]

[benchmark]
name = "branin2"
active_dims = [7, 9]

[gt.inner-style]
key_a = 1
)";
    TomlTable t = parse_toml(doc);
    CHECK(t.at("seed").kind == TomlValue::Kind::integer);
    CHECK(t.at("seed").i == 42);
    CHECK(t.at("mode").s == "gt_only");
    CHECK(t.at("ratio").d == -0.5);
    CHECK(t.at("flag").b == true);
    CHECK(t.at("big").d == 1e6);
    CHECK(t.at("name").s == "a # not a comment \"quoted\" \t");
    CHECK(t.at("empty_list").items.empty());
    CHECK(t.at("ints").items.size() == 3);
    CHECK(t.at("ints").items[2].i == 3);
    CHECK(t.at("reals").items[1].kind == TomlValue::Kind::integer);
    CHECK(t.at("benchmark.name").s == "branin2");
    CHECK(t.at("benchmark.active_dims").items[1].i == 9);
    CHECK(t.at("gt.inner-style.key_a").i == 1);
    CHECK(t.at("benchmark.name").line == 13);
}

TEST_CASE("syntax errors carry line numbers") {
    CHECK(error_of("a = 1\nb = 2\nnot a kv pair\n").find("line 3") != std::string::npos);
    CHECK(error_of("x = \"open\n").find("line 1") != std::string::npos);
    CHECK(error_of("x = \"bad \\q escape\"\n").find("escape") != std::string::npos);
    CHECK(error_of("\n[sec\nx = 1\n").find("line 2") != std::string::npos);
    CHECK(error_of("x = [1, 2\n").find("unterminated array") != std::string::npos);
    CHECK(error_of("a = 1\na = 2\n").find("duplicate key 'a'") != std::string::npos);
    CHECK(error_of("x = 1 extra\n").find("trailing") != std::string::npos);
    CHECK(error_of(".bad = 1\n").find("malformed key") != std::string::npos);
    CHECK(error_of("x = 12zz\n").find("cannot parse value") != std::string::npos);
    CHECK(error_of("x = 99999999999999999999\n").find("out of range") != std::string::npos);
}

TEST_CASE("override strings parse like file entries") {
    TomlTable t = parse_override("gt.particles=500");
    CHECK(t.at("gt.particles").i == 500);
    t = parse_override("mode = \"sweep\"");
    CHECK(t.at("mode").s == "sweep");
    t = parse_override("sweep.values=[0.1,1.0]");
    CHECK(t.at("sweep.values").items.size() == 2);
    CHECK_THROWS_AS(parse_override("no_equals"), ConfigError);
}

TEST_CASE("layer precedence is preset then file then overrides") {
    TomlTable merged = preset_table("desk");
    merge_into(merged, parse_toml("[gt]\nparticles = 777\n"));
    merge_into(merged, parse_override("bo.budget=11"));
    RunConfig cfg = resolve_config(merged);
    CHECK(cfg.ambient_dim == 100);       // preset survives
    CHECK(cfg.gt.max_tests == 150);      // preset survives
    CHECK(cfg.gt.particles == 777);      // file beats preset
    CHECK(cfg.bo.budget == 11);          // override beats preset
    CHECK_THROWS_AS(preset_table("nope"), ConfigError);
}

TEST_CASE("defaults resolve without any input") {
    RunConfig cfg = resolve_config(TomlTable{});
    CHECK(cfg.bench_name == BenchmarkName::levy4);
    CHECK(cfg.ambient_dim == 100);
    CHECK(cfg.noise_std == -1.0);
    CHECK(cfg.mode == "full");
    CHECK(cfg.seed == 1);
    CHECK(cfg.profile == "synthetic");
    CHECK(cfg.bo.inactive_prior.mu == 7.0);
    CHECK(cfg.bo.active_prior.mu == 0.0);
    CHECK(cfg.gt.selection.batch_size == cfg.gt.batch_size);
}

TEST_CASE("unknown keys and type mismatches name the path") {
    std::string e = resolve_error(parse_toml("gt.partcles = 5\n"));
    CHECK(e.find("unknown config key 'gt.partcles'") != std::string::npos);
    CHECK(e.find("line 1") != std::string::npos);

    e = resolve_error(parse_toml("gt.particles = \"many\"\n"));
    CHECK(e.find("'gt.particles'") != std::string::npos);
    CHECK(e.find("integer") != std::string::npos);

    e = resolve_error(parse_toml("benchmark.active_dims = [1, \"x\"]\n"));
    CHECK(e.find("'benchmark.active_dims'") != std::string::npos);

    e = resolve_error(parse_toml("benchmark.name = \"rosenbrock\"\n"));
    CHECK(e.find("rosenbrock") != std::string::npos);
}

TEST_CASE("semantic validation rejects bad values with the path") {
    CHECK(resolve_error(parse_toml("mode = \"fast\"\n")).find("'mode'") != std::string::npos);
    CHECK(resolve_error(parse_toml("bo.profile = \"other\"\n")).find("'bo.profile'") !=
          std::string::npos);
    CHECK(resolve_error(parse_toml("seed = -3\n")).find("'seed'") != std::string::npos);
    CHECK(resolve_error(parse_toml("gt.particles = 0\n")).find("gt:") != std::string::npos);
    CHECK(resolve_error(parse_toml("bo.budget = -1\n")).find("bo:") != std::string::npos);
    CHECK(resolve_error(parse_toml("benchmark.ambient_dim = 10\nbenchmark.active_dims = [10]\n"))
              .find("active_dims") != std::string::npos);

    CHECK(resolve_error(parse_toml("mode = \"sweep\"\n")).find("sweep.values") !=
          std::string::npos);
    CHECK(resolve_error(parse_toml("mode = \"sweep\"\nsweep.values = [0.1]\n"))
              .find("sweep.seeds") != std::string::npos);
    CHECK(resolve_error(
              parse_toml("mode = \"sweep\"\nsweep.axis = \"budget\"\nsweep.values = "
                         "[1]\nsweep.seeds = [1]\n"))
              .find("'sweep.axis'") != std::string::npos);
    // active_dim_count only makes sense for the variable-count levy family
    CHECK(resolve_error(parse_toml("mode = \"sweep\"\nsweep.axis = "
                                   "\"active_dim_count\"\nsweep.values = [2]\nsweep.seeds = "
                                   "[1]\n"))
              .find("levy") != std::string::npos);
    CHECK(resolve_error(parse_toml("benchmark.name = \"levy\"\n"))
              .find("levy_active_count") != std::string::npos);
}

TEST_CASE("profile picks the inactive lengthscale prior") {
    RunConfig synth = resolve_config(parse_toml("bo.profile = \"synthetic\"\n"));
    RunConfig real = resolve_config(parse_toml("bo.profile = \"real_world\"\n"));
    CHECK(synth.bo.inactive_prior.mu == 7.0);
    CHECK(real.bo.inactive_prior.mu == 3.0);
    CHECK(synth.bo.active_prior.mu == real.bo.active_prior.mu);
    CHECK(synth.bo.inactive_prior.sigma == 1.0);
}

TEST_CASE("make_spec honors explicit placement and randomizes deterministically") {
    TomlTable t = parse_toml(
        "benchmark.name = \"levy4\"\nbenchmark.ambient_dim = 30\nbenchmark.active_dims = [2, 5, "
        "11, 28]\n");
    RunConfig cfg = resolve_config(t);
    BenchmarkSpec spec = cfg.make_spec();
    CHECK(spec.active_dims == std::vector<int>{2, 5, 11, 28});

    RunConfig r1 = resolve_config(parse_toml("benchmark.ambient_dim = 50\nseed = 4\n"));
    RunConfig r2 = resolve_config(parse_toml("benchmark.ambient_dim = 50\nseed = 4\n"));
    RunConfig r3 = resolve_config(parse_toml("benchmark.ambient_dim = 50\nseed = 5\n"));
    BenchmarkSpec s1 = r1.make_spec();
    CHECK(s1.active_dims == r2.make_spec().active_dims);
    CHECK(s1.active_dims != r3.make_spec().active_dims);
    CHECK(s1.active_dims.size() == 4);
    for (int d : s1.active_dims) {
        CHECK(d >= 0);
        CHECK(d < 50);
    }

    RunConfig fixed = resolve_config(
        parse_toml("benchmark.ambient_dim = 50\nbenchmark.randomize_placement = false\n"));
    CHECK(fixed.make_spec().active_dims == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("noise_std default is per benchmark, override wins") {
    RunConfig def = resolve_config(parse_toml("benchmark.name = \"branin2\"\n"));
    CHECK(def.make_spec().noise_std == 0.5);
    RunConfig ovr =
        resolve_config(parse_toml("benchmark.name = \"branin2\"\nbenchmark.noise_std = 0.05\n"));
    CHECK(ovr.make_spec().noise_std == 0.05);
}

}  // TEST_SUITE
