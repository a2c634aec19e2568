// Command-line runner: baseline / attack / defense experiments over seeds.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lisec/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"RPL routing-table falsification experiments with PUF License defense"};

    std::string scenario_path, arms, seeds, mobility, trace = "off", encrypted, out_dir = "out";
    std::optional<unsigned> attackers;
    std::vector<std::string> overrides;
    unsigned jobs = 0;
    bool quiet = false;

    app.add_option("--scenario", scenario_path, "key=value scenario file")->check(CLI::ExistingFile);
    app.add_option("--arms", arms, "comma list of baseline,attack,defense,defense_encrypted");
    app.add_option("--seeds", seeds, "seed count N (1..N) or comma list");
    app.add_option("--attackers", attackers, "number of RTF attackers");
    app.add_option("--mobility", mobility, "on|off")->check(CLI::IsMember({"on", "off"}));
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--trace", trace, "on|off: write trace-<arm>-<seed>.log")->check(CLI::IsMember({"on", "off"}));
    app.add_option("--encrypted", encrypted, "on|off: defense arm carries the encrypted License")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--set", overrides, "extra key=value override (repeatable)");
    app.add_option("--jobs", jobs, "parallel runs (0 = all cores)");
    app.add_flag("-q,--quiet", quiet, "no summary on stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        // Precedence: defaults < scenario file < --set < dedicated flags.
        lisec::Scenario s;
        if (!scenario_path.empty()) s = lisec::load_scenario(scenario_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw lisec::ConfigError(kv, "--set expects key=value");
            lisec::apply_setting(s, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!arms.empty()) lisec::apply_setting(s, "arms", arms);
        if (!seeds.empty()) lisec::apply_setting(s, "seeds", seeds);
        if (attackers) lisec::apply_setting(s, "n_attackers", std::to_string(*attackers));
        if (!mobility.empty()) lisec::apply_setting(s, "mobility", mobility);
        if (!encrypted.empty()) lisec::apply_setting(s, "encrypted", encrypted);
        lisec::validate(s);
        for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';

        lisec::RunOptions opt;
        opt.out_dir = out_dir;
        opt.trace = trace == "on";
        opt.jobs = jobs;
        opt.seed_base = lisec::seed_base_from_env();

        const auto rep = lisec::run_experiment(s, opt);
        if (!quiet) {
            std::ostringstream summary;
            lisec::write_summary_csv(summary, rep, s);
            std::cout << summary.str();
        }
    } catch (const lisec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
