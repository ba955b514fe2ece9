// SPDX-License-Identifier: Apache-2.0
#include "rcc/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace
{

struct Flags
{
    std::string config;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> jobs;
    std::optional<int> stop_after;
    bool quiet = false;
};

rcc::ExperimentConfig make_config(const Flags& f, rcc::ExperimentKind kind)
{
    rcc::ExperimentConfig cfg = f.config.empty() ? rcc::ExperimentConfig{} : rcc::load_experiment_config(f.config);
    cfg.kind = kind;
    if (f.trials)
        cfg.trials = *f.trials;
    if (f.seed)
        cfg.seed = *f.seed;
    if (f.out)
        cfg.out_dir = *f.out;
    if (f.jobs)
        cfg.jobs = *f.jobs;
    if (f.stop_after)
        cfg.stop_after = *f.stop_after;
    cfg.quiet = f.quiet;
    cfg.validate();
    return cfg;
}

void report(const rcc::ExperimentResult& r)
{
    std::cout << "csv      " << r.csv_path << "\n"
              << "summary  " << r.summary_path << "\n"
              << "tasks    " << r.tasks_resumed << " resumed, " << r.tasks_run << " run, " << r.tasks_total
              << " total" << (r.complete ? "" : " (incomplete; rerun to resume)") << "\n";
    if (r.summary.contains("trends"))
        std::cout << "trends   " << r.summary["trends"].dump() << "\n";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Robust secure radar-communication coexistence: designs and experiments"};
    app.set_version_flag("--version", rcc::code_version());
    app.require_subcommand(1);

    Flags flags;
    auto add_flags = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "Key-value config file ([scenario] and [experiment])")
            ->check(CLI::ExistingFile);
        sub->add_option("--trials", flags.trials, "Monte Carlo trials per sweep point")->check(CLI::PositiveNumber);
        sub->add_option("--seed", flags.seed, "Base seed; trial seeds derive from it");
        sub->add_option("--out", flags.out, "Output directory");
        sub->add_option("--jobs", flags.jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--stop-after", flags.stop_after, "Run at most this many new tasks, then stop");
        sub->add_flag("--quiet", flags.quiet, "No progress lines");
    };

    auto* beam = app.add_subcommand("beampattern", "Designed beampatterns over a mismatch-threshold sweep");
    auto* power = app.add_subcommand("secrecy-power", "Robust and non-robust secrecy rate over BS power and CSI error");
    auto* trade = app.add_subcommand("tradeoff", "Secrecy rate against detection probability per INR cap");
    auto* single = app.add_subcommand("single", "One design with its certification report");
    auto* self = app.add_subcommand("selftest", "Quick end-to-end checks");
    for (auto* sub : {beam, power, trade, single})
        add_flags(sub);

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (self->parsed())
            return rcc::run_selftest(std::cout) == 0 ? 0 : 1;
        if (beam->parsed())
            report(rcc::run_beampattern_experiment(make_config(flags, rcc::ExperimentKind::beampattern)));
        else if (power->parsed())
            report(rcc::run_secrecy_vs_power(make_config(flags, rcc::ExperimentKind::secrecy_vs_power)));
        else if (trade->parsed())
            report(rcc::run_tradeoff_experiment(make_config(flags, rcc::ExperimentKind::secrecy_vs_detection)));
        else if (single->parsed())
        {
            const auto rep = rcc::run_single(make_config(flags, rcc::ExperimentKind::single), std::cout);
            return rep.verdict == "optimal" || rep.verdict == "over-constrained" ? 0 : 2;
        }
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
