#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gtbo/config.hpp"
#include "gtbo/runner.hpp"

namespace {

std::string quote_toml(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Group-testing driven Bayesian optimization"};
    app.require_subcommand(1);

    CLI::App* run = app.add_subcommand("run", "Execute a configured experiment");
    std::string config_path;
    std::vector<std::string> sets;
    std::string preset;
    std::string mode;
    std::string out_dir;
    long long seed = -1;
    run->add_option("config", config_path, "TOML config file");
    run->add_option("--set", sets, "Override one config key, key=value; repeatable");
    run->add_option("--preset", preset, "Apply a named preset before the file (desk)");
    run->add_option("--mode", mode, "full | gt_only | random_search | sweep");
    run->add_option("--seed", seed, "Run seed (non-negative)");
    run->add_option("--out", out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        // Later layers override earlier ones: preset, file, --set, flags.
        gtbo::TomlTable merged;
        if (!preset.empty()) gtbo::merge_into(merged, gtbo::preset_table(preset));
        if (!config_path.empty()) {
            std::ifstream in(config_path, std::ios::binary);
            if (!in) throw gtbo::ConfigError("cannot open config file '" + config_path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            try {
                gtbo::merge_into(merged, gtbo::parse_toml(ss.str()));
            } catch (const gtbo::ConfigError& e) {
                throw gtbo::ConfigError(config_path + ": " + e.what());
            }
        }
        for (const std::string& s : sets) gtbo::merge_into(merged, gtbo::parse_override(s));
        if (!mode.empty()) gtbo::merge_into(merged, gtbo::parse_override("mode=" + quote_toml(mode)));
        if (seed >= 0)
            gtbo::merge_into(merged, gtbo::parse_override("seed=" + std::to_string(seed)));
        if (!out_dir.empty())
            gtbo::merge_into(merged, gtbo::parse_override("out=" + quote_toml(out_dir)));

        gtbo::RunConfig cfg = gtbo::resolve_config(merged);
        gtbo::RunOutcome outcome = gtbo::run_experiment(cfg);
        if (outcome.exit_code != 0) {
            std::cerr << "run failed: " << outcome.summary.value("error", std::string("unknown"))
                      << "\n";
        } else {
            std::cout << "wrote " << cfg.output_dir << " (" << outcome.trace.size()
                      << " evaluations)\n";
        }
        return outcome.exit_code;
    } catch (const gtbo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
