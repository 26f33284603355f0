#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <rqc/amplitudes.hpp>
#include <rqc/dyson.hpp>
#include <rqc/kinematics.hpp>
#include <rqc/manifest.hpp>
#include <rqc/observables.hpp>
#include <rqc/oracle.hpp>
#include <rqc/sweep.hpp>

namespace fs = std::filesystem;
using namespace rqc;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    unsigned threads = default_threads();
    long long seed = 0;  // reserved; the pipeline is deterministic
};

SimulationConfig load_or_default(const GlobalArgs& g) {
    if (g.config_path.empty()) return SimulationConfig{};
    return load_config_file(g.config_path);
}

std::string fmt_complex(complexd z) {
    std::string s = format_double(z.real());
    s += (z.imag() < 0 ? " - " : " + ");
    s += format_double(std::abs(z.imag())) + "i";
    return s;
}

void print_state(const QubitDensity& rho, const char* name) {
    std::printf("%s:\n", name);
    std::printf("  [ %s , %s ]\n", fmt_complex(rho.m(0, 0)).c_str(),
                fmt_complex(rho.m(0, 1)).c_str());
    std::printf("  [ %s , %s ]\n", fmt_complex(rho.m(1, 0)).c_str(),
                fmt_complex(rho.m(1, 1)).c_str());
}

void print_bloch(const BlochRecord& b, const char* name) {
    std::printf("%s: r = (%s, %s, %s)", name, format_double(b.r.x()).c_str(),
                format_double(b.r.y()).c_str(), format_double(b.r.z()).c_str());
    std::printf("  theta = %s", b.theta ? format_double(*b.theta).c_str() : "undefined");
    std::printf("  phi = %s", b.phi ? format_double(*b.phi).c_str() : "undefined");
    std::printf("  purity = %s\n", format_double(b.purity).c_str());
}

int run_simulate(const GlobalArgs& g, const SimulationConfig& cfg) {
    auto vc = ValidatedConfig::validate(cfg);
    AssembleOptions opts;
    opts.threads = g.threads;
    ReducedState red = assemble(vc, opts);

    print_state(red.initial, "initial target state");
    print_state(red.final_state, "final target state");
    print_bloch(bloch(red.initial), "initial");
    print_bloch(bloch(red.final_state), "final");
    auto d = delta_angles(red.initial, red.final_state);
    std::printf("rotation: d_theta = %s  d_phi = %s\n", format_double(d.d_theta).c_str(),
                format_double(d.d_phi).c_str());
    std::printf(
        "diagnostics: |tr rho1| = %s  |tr rho2| = %s  hermiticity defect = %s\n",
        format_double(red.trace1_abs).c_str(), format_double(red.trace2_abs).c_str(),
        format_double(red.hermiticity_defect).c_str());
    std::printf("  min eigenvalue = %s  modes used = %d  mode delta = %s  quad error = %s\n",
                format_double(red.min_eigenvalue).c_str(), red.modes_used,
                format_double(red.mode_delta).c_str(),
                format_double(red.max_quad_error).c_str());
    return 0;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        if (!parse_double(item, v))
            throw ValidationError("cannot parse list entry '" + item + "'");
        out.push_back(v);
    }
    return out;
}

int run_sweep(const GlobalArgs& g, const SimulationConfig& cfg,
              const std::string& a_csv, double t_min, double t_max, int t_steps) {
    auto t0 = std::chrono::steady_clock::now();
    auto vc = ValidatedConfig::validate(cfg);
    auto records =
        curve_sweep(cfg, parse_list(a_csv), linspace(t_min, t_max, t_steps), g.threads);

    fs::create_directories(g.out_dir);
    std::string csv_path = (fs::path(g.out_dir) / "sweep.csv").string();
    {
        std::ofstream out(csv_path, std::ios::binary);
        write_csv(out, records, "manifest.json");
    }
    int warnings = 0;
    for (const auto& r : records)
        if (!r.flags.empty()) ++warnings;

    RunManifest man;
    man.command = "sweep";
    man.config_hash = hex64(vc.hash());
    man.threads = g.threads;
    man.outputs = {"sweep.csv"};
    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    man.write((fs::path(g.out_dir) / "manifest.json").string());
    std::printf("wrote %s (%zu rows, %d flagged)\n", csv_path.c_str(), records.size(),
                warnings);
    return 0;
}

int run_maximize(const GlobalArgs& g, const SimulationConfig& cfg, SweepSpec spec) {
    auto t0 = std::chrono::steady_clock::now();
    auto vc = ValidatedConfig::validate(cfg);
    auto records = maximize(cfg, spec, g.threads);

    fs::create_directories(g.out_dir);
    std::string csv_path = (fs::path(g.out_dir) / "maximize.csv").string();
    {
        std::ofstream out(csv_path, std::ios::binary);
        write_csv(out, records, "manifest.json");
    }
    RunManifest man;
    man.command = "maximize";
    man.config_hash = hex64(vc.hash());
    man.threads = g.threads;
    man.outputs = {"maximize.csv"};
    man.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    man.write((fs::path(g.out_dir) / "manifest.json").string());
    std::printf("wrote %s (%zu rows)\n", csv_path.c_str(), records.size());
    return 0;
}

int run_oracle_check(const GlobalArgs& g, const SimulationConfig& cfg,
                     const std::string& lambda_csv, int modes, int n_max) {
    SimulationConfig base = cfg;
    base.field.alpha = {0.5, 0.0};  // keeps the truncated space small
    TruncatedSpace space{modes, n_max};
    auto lams = parse_list(lambda_csv);
    auto report = residual_scaling(base, lams, space);

    std::ostringstream out;
    out << "oracle comparison (modes = " << modes << ", n_max = " << n_max << ")\n";
    for (const auto& p : report.points) {
        out << "  lambda = " << format_double(p.coupling)
            << "  trace_distance = " << format_double(p.distance)
            << "  exact_steps = " << p.exact.steps
            << "  step_delta = " << format_double(p.exact.step_delta)
            << "  truncation_delta = " << format_double(p.exact.truncation_delta)
            << "\n";
    }
    out << "fitted exponent: " << format_double(report.exponent) << "\n";
    std::fputs(out.str().c_str(), stdout);
    if (!g.out_dir.empty()) {
        fs::create_directories(g.out_dir);
        std::ofstream f((fs::path(g.out_dir) / "oracle_report.txt").string(),
                        std::ios::binary);
        f << out.str();
    }
    require_cubic_residual(report);
    return 0;
}

int run_convert_units(double a, double omega) {
    auto si = si_acceleration(a, omega);
    std::printf("a = %s (dimensionless), gap = %s rad/s\n", format_double(a).c_str(),
                format_double(omega).c_str());
    std::printf("  acceleration = %s m/s^2 = %s g\n",
                format_double(si.meters_per_s2).c_str(),
                format_double(si.multiples_of_g).c_str());
    return 0;
}

int run_dump_amplitudes(const GlobalArgs& g, const SimulationConfig& cfg, bool terms) {
    auto vc = ValidatedConfig::validate(cfg);
    double T = cfg.probe.motion.flight_time;
    auto table = build_table(vc, T, g.threads);

    fs::create_directories(g.out_dir);
    std::string path = (fs::path(g.out_dir) / "amplitudes.csv").string();
    {
        std::ofstream out(path, std::ios::binary);
        table.dump_csv(out);
    }
    std::printf("wrote %s (%zu entries, max quadrature error %s)\n", path.c_str(),
                table.size(), format_double(table.meta().max_error_bound).c_str());
    if (terms) {
        auto term_list = expand_terms(2, cfg.cavity.modes);
        std::string tpath = (fs::path(g.out_dir) / "terms.csv").string();
        std::ofstream out(tpath, std::ios::binary);
        dump_terms(out, term_list, table, vc);
        std::printf("wrote %s (%zu terms)\n", tpath.c_str(), term_list.size());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relativistic remote control of a cavity qubit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    app.add_option("--config", g.config_path, "key-value config file");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--threads", g.threads, "worker threads");
    app.add_option("--seed", g.seed, "reserved; outputs are deterministic");

    auto* simulate = app.add_subcommand("simulate", "evolve one configuration");
    double a_override = -1.0, t_override = -1.0;
    simulate->add_option("--a", a_override, "override probe acceleration");
    simulate->add_option("--T", t_override, "override probe flight time");

    auto* sweep_cmd = app.add_subcommand("sweep", "rotation curves over T per acceleration");
    std::string a_csv = "0,0.5,1,1.5,2,2.3";
    double t_min = 0.0, t_max = 1.5;
    int t_steps = 31;
    sweep_cmd->add_option("--a-values", a_csv, "comma-separated accelerations");
    sweep_cmd->add_option("--t-min", t_min);
    sweep_cmd->add_option("--t-max", t_max);
    sweep_cmd->add_option("--t-steps", t_steps);

    auto* maximize_cmd =
        app.add_subcommand("maximize", "optimal rotations over the trajectory box");
    SweepSpec spec;
    std::string objective = "dphi";
    maximize_cmd->add_option("--objective", objective, "dphi or dtheta");
    maximize_cmd->add_option("--a-min", spec.a_min);
    maximize_cmd->add_option("--a-max", spec.a_max);
    maximize_cmd->add_option("--a-steps", spec.a_steps);
    maximize_cmd->add_option("--t-min", spec.t_min);
    maximize_cmd->add_option("--t-max", spec.t_max);
    maximize_cmd->add_option("--t-steps", spec.t_steps);
    maximize_cmd->add_option("--theta-steps", spec.theta_steps);
    maximize_cmd->add_option("--phi-steps", spec.phi_steps);
    maximize_cmd->add_option("--refine-rounds", spec.refine_rounds);

    auto* oracle_cmd =
        app.add_subcommand("oracle-check", "compare against exact truncated evolution");
    std::string lambda_csv = "0.02,0.01,0.005";
    int oracle_modes = 2, n_max = 10;
    oracle_cmd->add_option("--lambdas", lambda_csv, "couplings to scan");
    oracle_cmd->add_option("--oracle-modes", oracle_modes);
    oracle_cmd->add_option("--n-max", n_max);

    auto* convert = app.add_subcommand("convert-units", "dimensionless acceleration to SI");
    double conv_a = 1.0, conv_omega = 1e9;
    convert->add_option("--a", conv_a, "dimensionless acceleration");
    convert->add_option("--omega", conv_omega, "detector gap in rad/s");

    auto* dump = app.add_subcommand("dump-amplitudes", "write the amplitude table as CSV");
    bool dump_term_list = false;
    dump->add_flag("--terms", dump_term_list, "also dump the generated term list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        SimulationConfig cfg = load_or_default(g);
        if (simulate->parsed()) {
            if (a_override >= 0.0) cfg.probe.motion.acceleration = a_override;
            if (t_override >= 0.0) cfg.probe.motion.flight_time = t_override;
            return run_simulate(g, cfg);
        }
        if (sweep_cmd->parsed()) return run_sweep(g, cfg, a_csv, t_min, t_max, t_steps);
        if (maximize_cmd->parsed()) {
            if (objective == "dphi") spec.objective = Objective::DeltaPhi;
            else if (objective == "dtheta") spec.objective = Objective::DeltaTheta;
            else throw ValidationError("--objective must be dphi or dtheta");
            return run_maximize(g, cfg, spec);
        }
        if (oracle_cmd->parsed())
            return run_oracle_check(g, cfg, lambda_csv, oracle_modes, n_max);
        if (convert->parsed()) return run_convert_units(conv_a, conv_omega);
        if (dump->parsed()) return run_dump_amplitudes(g, cfg, dump_term_list);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ConvergenceError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
