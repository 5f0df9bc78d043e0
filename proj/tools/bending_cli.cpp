// Command-line driver: bending {run|stationarity|diagnostics|interp-study}.

#include "cli_args.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace bending;

std::string cell_tag(const CellResult& c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "M%zu_%s_tau%g", c.M, std::string(to_string(c.constraint)).c_str(), c.tau);
    return buf;
}

int run_command(const cli::CliConfig& cfg) {
    const ExperimentTable table = run_experiment(cfg.spec);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string base = cfg.out_dir + "/" + cfg.spec.name;
    emit_csv(table, base + ".csv");
    for (const auto& c : table.cells) {
        if (c.snapshots.empty()) continue;
        const std::string path = base + "_" + cell_tag(c) + ".traj";
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
        write_trajectory(os, c.snapshots);
    }
    std::cout << "# h";
    for (const auto& col : table.columns) std::cout << ' ' << col.label << " eoc";
    std::cout << '\n' << format_csv(table);
    std::cout << "wrote " << base << ".csv (" << table.wall_seconds << " s)\n";
    int status = 0;
    for (const auto& c : table.cells)
        if (!c.ok()) {
            std::cerr << "cell " << cell_tag(c) << " failed: " << c.failure << '\n';
            status = 1;
        }
    return status;
}

int stationarity_command(const cli::CliConfig& cfg) {
    const auto& s = cfg.spec;
    const double tau = s.taus.empty() ? 0.1 : s.taus.front();
    for (std::size_t M : s.mesh_sizes) {
        const double v = stationarity_check(s.curve, s.constraints.front(), s.initializer, M, tau);
        std::printf("M=%zu constraint=%s initializer=%s |d_t Z^1|=%.6e\n", M, std::string(to_string(s.constraints.front())).c_str(),
                    std::string(to_string(s.initializer)).c_str(), v);
    }
    return 0;
}

int diagnostics_command(const cli::CliConfig& cfg) {
    const auto rows = run_diagnostics(cfg.spec.curve, cfg.spec.mesh_sizes, cfg.spec.constraints.front());
    const std::string text = format_diagnostics_csv(rows);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = cfg.out_dir + "/" + cfg.spec.curve + "_" + std::string(to_string(cfg.spec.constraints.front())) + "_diagnostics.csv";
    std::ofstream os(path);
    if (!os || !(os << text)) throw std::runtime_error("cannot write '" + path + "'");
    std::cout << text << "wrote " << path << '\n';
    return 0;
}

int interp_command(const cli::CliConfig& cfg) {
    const ExperimentTable table = interpolation_study(cfg.spec.mesh_sizes);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = cfg.out_dir + "/interp_study.csv";
    emit_csv(table, path);
    std::cout << "# h linf eoc l2 eoc h1 eoc h2 eoc\n" << format_csv(table) << "wrote " << path << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    cli::CliConfig cfg;
    try {
        cfg = cli::parse_args(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const cli::UsageError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    try {
        switch (cfg.subcommand) {
        case cli::Subcommand::Run: return run_command(cfg);
        case cli::Subcommand::Stationarity: return stationarity_command(cfg);
        case cli::Subcommand::Diagnostics: return diagnostics_command(cfg);
        default: return interp_command(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
