#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isal/isal.hpp"

namespace fs = std::filesystem;
using namespace isal;

namespace {

enum Exit { kOk = 0, kConfig = 2, kInfeasible = 3, kNumeric = 4 };

// Writes all files or none.
void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    fs::create_directories(dir);
    std::vector<fs::path> done;
    try {
        for (const auto& [name, content] : files) {
            atomic_write(dir / name, content);
            done.push_back(dir / name);
        }
    } catch (...) {
        for (const auto& p : done) fs::remove(p);
        throw;
    }
}

std::vector<AllocationReport> run_schemes(const ScenarioConfig& cfg, SchemeSelection which) {
    const NetworkScene scene = cfg.scene();
    const ChannelParams params = cfg.params();
    const SchemeOptions opts = cfg.scheme_options();
    std::vector<AllocationReport> reports;
    const bool dual = scene.slot_count() == 2;
    if (which != SchemeSelection::Stepwise) {
        reports.push_back(dual ? run_integrated_dual_slot(scene, params, opts)
                               : run_integrated_single_slot(scene, params, opts));
    }
    if (which != SchemeSelection::Integrated) {
        reports.push_back(dual ? run_stepwise_dual_slot(scene, params, opts)
                               : run_stepwise_single_slot(scene, params, opts));
    }
    return reports;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const DegenerateGeometryError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const ModeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const NonIdentifiableError& e) {
        std::cerr << "non-identifiable: " << e.what() << "\n";
        return kInfeasible;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power allocation for integrated sensing and localization networks"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Optimize power allocation for a scenario file");
    std::string scenario_path;
    std::string scheme_name;
    double grid_step = 0.0;
    std::string out_dir;
    bool dump_fim = false;
    run->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    run->add_option("--scheme", scheme_name, "integrated|stepwise|both (overrides the file)");
    run->add_option("--grid-step", grid_step, "Energy lattice step in J (overrides the file)");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_flag("--dump-fim", dump_fim, "Also write fim_dump.txt");

    auto* fixtures = app.add_subcommand("fixtures", "Built-in scenario fixtures");
    fixtures->require_subcommand(1);
    auto* list = fixtures->add_subcommand("list", "List fixtures");
    auto* exp = fixtures->add_subcommand("export", "Write fixtures as scenario files");
    std::vector<std::string> export_names;
    std::string export_dir;
    std::string export_mode = "sync";
    exp->add_option("names", export_names, "Fixture names (default: all)");
    exp->add_option("--out", export_dir, "Output directory")->required();
    exp->add_option("--mode", export_mode, "sync|async")->check(CLI::IsMember({"sync", "async"}));

    auto* owr = app.add_subcommand("rlm-owr", "Monte-Carlo clock drift estimation");
    std::string owr_config;
    std::size_t seeds = 1;
    std::string owr_out;
    owr->add_option("--config", owr_config, "Scenario JSON with a clock section")->required();
    owr->add_option("--seeds", seeds, "Number of seeded exchanges")->check(CLI::PositiveNumber);
    owr->add_option("--out", owr_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfig;
    }

    if (*run) {
        return guarded([&] {
            ScenarioConfig cfg = parse_config(scenario_path);
            SchemeSelection which = cfg.scheme;
            if (!scheme_name.empty()) which = parse_scheme_selection(scheme_name, "--scheme");
            if (run->count("--grid-step")) {
                if (!(grid_step > 0.0)) throw ConfigError("--grid-step must be > 0");
                cfg.solver.grid_step = grid_step;
            }
            if (cfg.solver.grid_step > cfg.channel.E_total) {
                throw ConfigError("solver.grid_step must not exceed channel.E_total");
            }
            const auto reports = run_schemes(cfg, which);
            const NetworkScene scene = cfg.scene();
            std::vector<std::pair<std::string, std::string>> files = {{"trace.csv", trace_csv(reports)},
                                                                      {"summary.csv", summary_csv(reports, scene)}};
            if (dump_fim) files.emplace_back("fim_dump.txt", fim_dump_text(reports));
            write_outputs(out_dir, files);
            for (const auto& r : reports) {
                std::printf("%s best_speb=%s\n", to_string(r.scheme), fmt_number(r.best_objective).c_str());
            }
            return kOk;
        });
    }

    if (*list) {
        for (const auto& f : builtin_fixtures()) {
            std::printf("%-26s slots=%zu %-18s %s\n", f.name.c_str(), f.scene.slot_count(), to_string(f.regime),
                        f.note.c_str());
        }
        return kOk;
    }

    if (*exp) {
        return guarded([&] {
            const auto all = builtin_fixtures();
            std::vector<std::string> names = export_names;
            if (names.empty()) {
                for (const auto& f : all) names.push_back(f.name);
            }
            const SyncMode mode = export_mode == "async" ? SyncMode::Asynchronous : SyncMode::Synchronous;
            std::vector<std::pair<std::string, std::string>> files;
            for (const auto& name : names) {
                const auto& f = find_fixture(all, name);
                const auto cfg = config_from_scene(f.scene.with_mode(mode), f.name);
                files.emplace_back(name + ".json", export_config_json(cfg).dump(2) + "\n");
            }
            write_outputs(export_dir, files);
            return kOk;
        });
    }

    if (*owr) {
        return guarded([&] {
            const ScenarioConfig cfg = parse_config(owr_config);
            if (!cfg.clock) throw ConfigError("clock: section required for rlm-owr");
            const auto& c = *cfg.clock;
            c.clock.validate(c.drift_bound);
            const DriftStudy study = run_drift_study(c.clock, c.exchange, seeds, c.first_seed, c.drift_bound);
            write_outputs(owr_out, {{"drift.csv", drift_csv(study)}, {"drift_summary.csv", drift_summary_csv(study)}});
            std::printf("mean_k_tau=%s variance=%s analytic_rho2=%s\n", fmt_number(study.mean).c_str(),
                        fmt_number(study.variance).c_str(), fmt_number(study.analytic_variance).c_str());
            return kOk;
        });
    }
    return kOk;
}
