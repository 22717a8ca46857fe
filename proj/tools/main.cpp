#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "gridstrength/reports.hpp"
#include "gridstrength/simulator.hpp"
#include "gridstrength/strength.hpp"

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string case_path;
    int bus = 0;
    bool bus_set = false;
    double di_p = 1.0;
    double di_q = 0.0;
    double t_event = 1.0;
    double t_end = 5.0;
    double dt = 1e-3;
    std::string out_dir = ".";
    bool embed_zloads = false;
    bool emit_plot_data = false;
};

void write_artifact(const fs::path& dir, const std::string& name, const std::string& content) {
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw gs::Error("cannot write " + p.string());
    out << content;
    std::cout << "wrote " << p.string() << "\n";
}

gs::SystemCase load(const RunConfig& cfg) {
    gs::SystemCase c = gs::load_case(cfg.case_path);
    if (cfg.embed_zloads) c.flags.embed_zloads = true;
    return c;
}

gs::IndicatorTable indicator_sweep_rows(const gs::SystemCase& c, const RunConfig& cfg) {
    const gs::System base(c);
    std::vector<gs::BusIndicators> rows;
    rows.reserve(c.n());
    for (int k = 0; k < c.n(); ++k) {
        gs::System sys = base;
        const gs::Disturbance dist{c.buses[k].id, cfg.di_p, cfg.di_q};
        const gs::Snapshot snap = gs::solve_post_state(sys, dist);
        const gs::BlockSet blocks = gs::assemble_device_blocks(snap.devices, snap, snap.n());
        const gs::ZeqChain chain = gs::zeq_chain(sys.impedance_matrix(), blocks);
        const gs::StrengthResult sr = gs::strength_matrices(snap, chain);
        const auto ind = sr.indicators(k);
        rows.push_back({c.buses[k].id, ind[0], ind[1], ind[2]});
    }
    return gs::normalize_report(std::move(rows));
}

int run_powerflow(const RunConfig& cfg) {
    const gs::SystemCase c = load(cfg);
    const gs::PowerFlowSolution pf = gs::solve_powerflow(c);
    std::cout << gs::powerflow_table(c, pf);
    write_artifact(cfg.out_dir, "powerflow.csv", gs::powerflow_csv(c, pf));
    return 0;
}

int run_strength(const RunConfig& cfg) {
    const gs::SystemCase c = load(cfg);
    gs::System sys(c);
    const gs::Disturbance dist{cfg.bus, cfg.di_p, cfg.di_q};
    const gs::Snapshot snap = gs::solve_post_state(sys, dist);
    const gs::BlockSet blocks = gs::assemble_device_blocks(snap.devices, snap, snap.n());
    const gs::ZeqChain chain = gs::zeq_chain(sys.impedance_matrix(), blocks);
    const gs::StrengthResult sr = gs::strength_matrices(snap, chain);
    std::vector<gs::BusIndicators> rows;
    rows.reserve(c.n());
    for (int k = 0; k < c.n(); ++k) {
        const auto ind = sr.indicators(k);
        rows.push_back({c.buses[k].id, ind[0], ind[1], ind[2]});
    }
    const gs::IndicatorTable table = gs::normalize_report(std::move(rows));
    std::cout << indicator_table_text(table);
    write_artifact(cfg.out_dir, "strength_indicators.csv", gs::indicator_csv(table));
    write_artifact(cfg.out_dir, "strength_matrices.json", gs::matrices_json(c, sr, table));
    return 0;
}

void require_event_inside_horizon(const RunConfig& cfg) {
    if (!(cfg.t_end > cfg.t_event))
        throw gs::ParseError("t_end", "horizon must exceed the event time");
}

int run_simulate(const RunConfig& cfg) {
    const gs::SystemCase c = load(cfg);
    std::vector<gs::Event> events;
    if (cfg.bus_set) {
        require_event_inside_horizon(cfg);
        events.push_back({cfg.t_event, gs::Disturbance{cfg.bus, cfg.di_p, cfg.di_q}});
    }
    const gs::Trajectory traj = gs::simulate(c, events, cfg.t_end, cfg.dt);
    write_artifact(cfg.out_dir, "trajectory.csv", gs::trajectory_csv(c, traj));
    return 0;
}

int run_validate(const RunConfig& cfg) {
    const gs::SystemCase c = load(cfg);
    require_event_inside_horizon(cfg);
    const gs::Disturbance dist{cfg.bus, cfg.di_p, cfg.di_q};
    const gs::ValidationReport rep =
        gs::validate(c, dist, cfg.t_event, cfg.t_end, cfg.dt);
    std::cout << gs::validation_table(rep);
    write_artifact(cfg.out_dir, "validation.json", gs::validation_json(c, rep));
    if (cfg.emit_plot_data) {
        gs::System sys(c);
        const gs::Trajectory traj =
            gs::simulate(sys, {gs::Event{cfg.t_event, dist}}, cfg.t_end, cfg.dt);
        write_artifact(cfg.out_dir, "trajectory.csv", gs::trajectory_csv(c, traj));
    }
    return 0;
}

int run_report(const RunConfig& cfg) {
    const gs::SystemCase c = load(cfg);
    const gs::IndicatorTable table = indicator_sweep_rows(c, cfg);
    std::cout << indicator_table_text(table);
    write_artifact(cfg.out_dir, "strength_report.csv", gs::indicator_csv(table));
    return 0;
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw gs::ParseError(path, "cannot open config file");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw gs::ParseError(path, std::string("invalid JSON: ") + e.what());
    }
    if (doc.contains("case")) cfg.case_path = doc["case"].get<std::string>();
    if (doc.contains("bus")) {
        cfg.bus = doc["bus"].get<int>();
        cfg.bus_set = true;
    }
    if (doc.contains("di_p")) cfg.di_p = doc["di_p"].get<double>();
    if (doc.contains("di_q")) cfg.di_q = doc["di_q"].get<double>();
    if (doc.contains("t_event")) cfg.t_event = doc["t_event"].get<double>();
    if (doc.contains("t_end")) cfg.t_end = doc["t_end"].get<double>();
    if (doc.contains("dt")) cfg.dt = doc["dt"].get<double>();
    if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("embed_zloads")) cfg.embed_zloads = doc["embed_zloads"].get<bool>();
    if (doc.contains("emit_plot_data")) cfg.emit_plot_data = doc["emit_plot_data"].get<bool>();
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    if (const char* env = std::getenv("GRIDSTRENGTH_OUT_DIR")) cfg.out_dir = env;

    // the config file seeds defaults; explicit flags win
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_file(argv[i + 1], cfg);
            } catch (const gs::ParseError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
        }
    }

    CLI::App app{"Analytical strength indicators and time-domain validation for AC networks"};
    app.require_subcommand(1);
    std::string config_path;

    auto add_common = [&](CLI::App* sub, bool needs_bus, bool needs_case = true) {
        auto* copt = sub->add_option("--case", cfg.case_path, "case file (JSON)");
        if (needs_case && cfg.case_path.empty()) copt->required();
        sub->add_option("--out-dir", cfg.out_dir, "artifact directory");
        sub->add_flag("--embed-zloads", cfg.embed_zloads,
                      "fold constant-impedance loads into the network matrix");
        sub->add_option("--config", config_path, "JSON config with the same keys as the flags");
        auto* bopt = sub->add_option("--bus", cfg.bus, "disturbed bus id");
        if (needs_bus && !cfg.bus_set) bopt->required();
        sub->add_option("--dip", cfg.di_p, "active current draw, pu");
        sub->add_option("--diq", cfg.di_q, "reactive current draw, pu");
        return bopt;
    };

    auto* pf_cmd = app.add_subcommand("powerflow", "solve the steady state and export it");
    add_common(pf_cmd, false);

    auto* st_cmd = app.add_subcommand("strength", "indicator table for one disturbance snapshot");
    add_common(st_cmd, true);

    auto* si_cmd = app.add_subcommand("simulate", "time-domain run with an optional step event");
    auto* si_bus = add_common(si_cmd, false);
    si_cmd->add_option("--t-event", cfg.t_event, "event time, s");
    si_cmd->add_option("--t-end", cfg.t_end, "horizon, s");
    si_cmd->add_option("--dt", cfg.dt, "step, s");

    auto* va_cmd = app.add_subcommand("validate", "prediction vs simulation, Table-style report");
    add_common(va_cmd, true);
    va_cmd->add_option("--t-event", cfg.t_event, "event time, s");
    va_cmd->add_option("--t-end", cfg.t_end, "horizon, s");
    va_cmd->add_option("--dt", cfg.dt, "step, s");
    va_cmd->add_flag("--emit-plot-data", cfg.emit_plot_data, "also write the trajectory CSV");

    auto* re_cmd = app.add_subcommand("report", "per-bus disturbance sweep, normalized indicators");
    add_common(re_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // all usage mistakes share the parse exit code
    }
    if (si_bus->count() > 0) cfg.bus_set = true;

    try {
        if (pf_cmd->parsed()) return run_powerflow(cfg);
        if (st_cmd->parsed()) return run_strength(cfg);
        if (si_cmd->parsed()) return run_simulate(cfg);
        if (va_cmd->parsed()) return run_validate(cfg);
        if (re_cmd->parsed()) return run_report(cfg);
    } catch (const gs::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gs::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const gs::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const gs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
