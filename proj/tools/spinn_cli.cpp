// Command-line front end: single coupling runs, FOM-only solves, parameter
// sweeps, and report exports from stored run artifacts.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinn/experiments.hpp"
#include "spinn/io.hpp"

namespace fs = std::filesystem;
using spinn::json;

namespace {

// ------------------------------------------------------------ config files

/** Defaults for a single coupling run; doubles as the schema (unknown keys
 *  in user configs are rejected against this list). */
json solve_config_defaults() {
    json c;
    c["schema_version"] = 1;
    c["pe"] = 10.0;
    c["n_d"] = 2;
    c["p_o"] = 0.2;
    c["solvers"] = json::array();  // per-subdomain "pinn"/"fom"; empty = all pinn
    c["dbc"] = "wdbc";
    c["data"] = false;
    c["alpha_r"] = 0.25;
    c["k"] = 1.0;
    c["seed"] = nullptr;  // null -> SCHWARZ_PINN_SEED env var -> 0
    c["m_global"] = 1024;
    c["epochs_per_iter"] = 1024;
    c["max_iters"] = 100;
    c["delta"] = 1e-3;
    c["tol_l2"] = 5e-3;
    c["adam_reset"] = false;
    c["mdbc_literal"] = false;
    c["linear_output"] = true;
    c["out_dir"] = ".";
    c["runid"] = "";  // empty -> derived from the physics fields
    c["snapshot_iters"] = json::array();
    c["emit_profile"] = false;
    c["emit_loss_history"] = false;
    c["emit_checkpoints"] = false;
    return c;
}

json sweep_config_defaults() {
    json c;
    c["schema_version"] = 1;
    c["pe_values"] = {10.0, 100.0};
    c["n_d_values"] = {2, 3, 4, 5};
    c["p_o_values"] = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
    c["dbc_modes"] = {"wdbc", "mdbc", "sdbc"};
    c["data_flags"] = {false, true};
    c["seeds_per_cell"] = 3;
    c["seed_base"] = nullptr;
    c["solvers"] = json::array();
    c["alpha_r"] = 0.25;
    c["m_global"] = 1024;
    c["epochs_per_iter"] = 1024;
    c["max_iters"] = 100;
    c["delta"] = 1e-3;
    c["tol_l2"] = 5e-3;
    c["adam_reset"] = false;
    return c;
}

/** Parse a --set value: JSON if it parses, else [a,b,c] as a string array,
 *  else a bare string. */
json parse_override_value(const std::string& raw) {
    json v = json::parse(raw, nullptr, false);
    if (!v.is_discarded()) return v;
    if (raw.size() >= 2 && raw.front() == '[' && raw.back() == ']') {
        json arr = json::array();
        std::string body = raw.substr(1, raw.size() - 2);
        std::size_t pos = 0;
        while (pos <= body.size() && !body.empty()) {
            std::size_t comma = body.find(',', pos);
            std::string tok = body.substr(pos, comma == std::string::npos
                                                   ? std::string::npos
                                                   : comma - pos);
            const auto a = tok.find_first_not_of(" \t");
            const auto b = tok.find_last_not_of(" \t");
            arr.push_back(a == std::string::npos ? "" : tok.substr(a, b - a + 1));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return arr;
    }
    return raw;
}

/** Load config file (optional), apply defaults for missing keys, reject
 *  unknown keys, apply --set overrides (which win), and check the schema
 *  version. */
json effective_config(const json& defaults, const std::string& path,
                      const std::vector<std::string>& overrides) {
    json cfg = defaults;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read config file: " + path);
        json user = json::parse(in);
        if (!user.is_object()) throw std::runtime_error("config root must be an object");
        if (!user.contains("schema_version"))
            throw std::runtime_error("config missing required field: schema_version");
        for (auto& [key, value] : user.items()) {
            if (!defaults.contains(key))
                throw std::runtime_error("unknown config key: " + key);
            cfg[key] = value;
        }
    }
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--set expects key=value, got: " + ov);
        const std::string key = ov.substr(0, eq);
        if (!defaults.contains(key)) throw std::runtime_error("unknown config key: " + key);
        cfg[key] = parse_override_value(ov.substr(eq + 1));
    }
    if (cfg["schema_version"] != 1)
        throw std::runtime_error("unsupported schema_version (expected 1)");
    return cfg;
}

std::uint64_t resolve_seed(const json& seed_field) {
    if (!seed_field.is_null()) return seed_field.get<std::uint64_t>();
    if (const char* env = std::getenv("SCHWARZ_PINN_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 0;
}

std::vector<bool> parse_solver_flags(const json& arr, int n_d) {
    std::vector<bool> flags;
    if (arr.empty()) return flags;
    if (static_cast<int>(arr.size()) != n_d)
        throw std::runtime_error("solvers list length must equal n_d");
    for (const auto& s : arr) {
        const std::string v = s.get<std::string>();
        if (v != "pinn" && v != "fom")
            throw std::runtime_error("solvers entries must be 'pinn' or 'fom', got: " + v);
        flags.push_back(v == "fom");
    }
    return flags;
}

// ----------------------------------------------------------------- solve

int cmd_solve(const std::string& config_path, const std::vector<std::string>& overrides) {
    json cfg;
    spinn::CouplingSetup setup;
    std::string out_dir, runid;
    try {
        cfg = effective_config(solve_config_defaults(), config_path, overrides);
        setup.spec = spinn::BvpSpec::from_peclet(cfg["pe"].get<double>());
        setup.n_d = cfg["n_d"].get<int>();
        setup.p_o = cfg["p_o"].get<double>();
        setup.fom_flags = parse_solver_flags(cfg["solvers"], setup.n_d);
        setup.mode = spinn::dbc_from_string(cfg["dbc"].get<std::string>());
        setup.use_data = cfg["data"].get<bool>();
        setup.alpha_r = cfg["alpha_r"].get<double>();
        setup.k = cfg["k"].get<double>();
        setup.seed = resolve_seed(cfg["seed"]);
        cfg["seed"] = setup.seed;  // echo the resolved value
        setup.m_global = cfg["m_global"].get<int>();
        setup.mdbc_literal = cfg["mdbc_literal"].get<bool>();
        setup.net.linear_output = cfg["linear_output"].get<bool>();
        setup.schwarz.epochs_per_iter = cfg["epochs_per_iter"].get<int>();
        setup.schwarz.max_iters = cfg["max_iters"].get<int>();
        setup.schwarz.delta = cfg["delta"].get<double>();
        setup.schwarz.tol_l2 = cfg["tol_l2"].get<double>();
        setup.schwarz.adam_reset = cfg["adam_reset"].get<bool>();
        out_dir = cfg["out_dir"].get<std::string>();
        runid = cfg["runid"].get<std::string>();
        if (runid.empty())
            runid = spinn::make_runid(cfg["pe"].get<double>(), setup.n_d, setup.p_o,
                                      setup.mode, setup.use_data, setup.seed);
        fs::create_directories(out_dir);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        spinn::SchwarzCoupling coupling = spinn::build_coupling(setup);
        std::set<int> snap_iters;
        for (const auto& v : cfg["snapshot_iters"]) snap_iters.insert(v.get<int>());
        auto dumper = snap_iters.empty()
                          ? std::function<void(int, const spinn::SchwarzCoupling&)>()
                          : spinn::make_snapshot_dumper(snap_iters, out_dir, runid);
        const spinn::SchwarzTrace& trace = coupling.run(dumper);
        if (!snap_iters.empty() && !snap_iters.count(trace.iterations))
            spinn::dump_snapshot_csv(coupling, out_dir + "/snap_" + runid + "_" +
                                                   std::to_string(trace.iterations) +
                                                   ".csv");

        const std::string trace_path = out_dir + "/trace_" + runid + ".csv";
        spinn::write_trace_csv(trace, trace_path);

        json summary;
        summary["runid"] = runid;
        summary["config"] = cfg;
        summary.update(spinn::trace_summary(trace));
        summary["trace_csv"] = trace_path;

        if (cfg["emit_profile"].get<bool>()) {
            const std::string p = out_dir + "/profile_" + runid + ".csv";
            spinn::write_profile_csv(spinn::pointwise_error_profile(coupling), p);
            summary["profile_csv"] = p;
        }
        json finals = json::array();
        for (int i = 1; i <= setup.n_d; ++i) {
            const auto& s = coupling.solvers()[i - 1];
            json f;
            f["subdomain"] = i;
            for (const auto& r : trace.rows)
                if (r.iter == trace.iterations && r.subdomain == i) {
                    f["g_left"] = r.g_left;
                    f["g_right"] = r.g_right;
                }
            if (spinn::is_pinn(s)) {
                const auto& p = std::get<spinn::SubdomainPinn>(s);
                if (cfg["emit_checkpoints"].get<bool>()) {
                    const std::string ck =
                        out_dir + "/ckpt_" + runid + "_sub" + std::to_string(i) + ".json";
                    spinn::save_checkpoint(p.params, ck);
                    f["checkpoint"] = ck;
                }
                if (cfg["emit_loss_history"].get<bool>()) {
                    const std::string lh =
                        out_dir + "/loss_" + runid + "_sub" + std::to_string(i) + ".csv";
                    spinn::write_loss_history_csv(coupling.loss_history(i), lh);
                    f["loss_history_csv"] = lh;
                }
            }
            finals.push_back(f);
        }
        summary["subdomains"] = finals;

        const std::string summary_path = out_dir + "/summary_" + runid + ".json";
        auto out = spinn::open_out(summary_path);
        out << summary.dump(1, '\t') << '\n';
        std::cout << summary.dump(1, '\t') << '\n';

        switch (trace.status) {
            case spinn::SchwarzStatus::Converged: return 0;
            case spinn::SchwarzStatus::MaxItersExceeded: return 2;
            default: return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "run error: " << e.what() << "\n";
        return 1;
    }
}

// ------------------------------------------------------------------- fom

int cmd_fom(double pe, int n_cells, const std::string& scheme_name,
            const std::string& out_path) {
    try {
        if (out_path.empty()) throw std::runtime_error("missing output path");
        const spinn::BvpSpec spec = spinn::BvpSpec::from_peclet(pe);
        spinn::Scheme scheme;
        if (scheme_name == "auto")
            scheme = spinn::pick_scheme(spec, 1.0 / n_cells);
        else
            scheme = spinn::scheme_from_string(scheme_name);
        const spinn::FomSolution sol = spinn::fom_solve(spec, n_cells, scheme);
        spinn::dump_solution_csv(sol, out_path);
        double num = 0.0, den = 0.0;
        for (int j = 0; j <= sol.n; ++j) {
            const double u = spinn::analytic_solution(spec, sol.x(j));
            num += (sol.u[j] - u) * (sol.u[j] - u);
            den += u * u;
        }
        std::cout << "scheme=" << spinn::to_string(scheme)
                  << " l2_rel_error_vs_analytic=" << spinn::format_double(std::sqrt(num / den))
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "fom error: " << e.what() << "\n";
        return 1;
    }
}

// ----------------------------------------------------------------- sweep

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_dir, int workers, bool force) {
    spinn::SweepGrid grid;
    try {
        json cfg = effective_config(sweep_config_defaults(), config_path, overrides);
        grid.pe_values = cfg["pe_values"].get<std::vector<double>>();
        grid.n_d_values = cfg["n_d_values"].get<std::vector<int>>();
        grid.p_o_values = cfg["p_o_values"].get<std::vector<double>>();
        grid.modes.clear();
        for (const auto& m : cfg["dbc_modes"])
            grid.modes.push_back(spinn::dbc_from_string(m.get<std::string>()));
        grid.data_flags.clear();
        for (const auto& d : cfg["data_flags"]) grid.data_flags.push_back(d.get<bool>());
        grid.seeds_per_cell = cfg["seeds_per_cell"].get<int>();
        grid.seed_base = resolve_seed(cfg["seed_base"]);
        if (!cfg["solvers"].empty() && grid.n_d_values.size() == 1)
            grid.fom_flags = parse_solver_flags(cfg["solvers"], grid.n_d_values[0]);
        else if (!cfg["solvers"].empty())
            throw std::runtime_error("solvers template requires a single n_d value");
        grid.alpha_r = cfg["alpha_r"].get<double>();
        grid.m_global = cfg["m_global"].get<int>();
        grid.schwarz.epochs_per_iter = cfg["epochs_per_iter"].get<int>();
        grid.schwarz.max_iters = cfg["max_iters"].get<int>();
        grid.schwarz.delta = cfg["delta"].get<double>();
        grid.schwarz.tol_l2 = cfg["tol_l2"].get<double>();
        grid.schwarz.adam_reset = cfg["adam_reset"].get<bool>();
        if (grid.pe_values.empty() || grid.n_d_values.empty() || grid.p_o_values.empty() ||
            grid.modes.empty() || grid.data_flags.empty() || grid.seeds_per_cell < 1)
            throw std::runtime_error("sweep grid has an empty axis");
        if (fs::exists(fs::path(out_dir) / "raw_runs.jsonl") && !force)
            throw std::runtime_error("output dir already holds a sweep (use --force): " +
                                     out_dir);
    } catch (const std::exception& e) {
        std::cerr << "sweep setup error: " << e.what() << "\n";
        return 1;
    }
    const auto results = spinn::run_sweep(grid, out_dir, workers);
    std::size_t converged = 0;
    for (const auto& r : results) converged += r.converged();
    std::cout << "cells=" << results.size() << " converged=" << converged << " out_dir="
              << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------- report

int cmd_report_pareto(const std::string& raw_path, double pe, double p_o,
                      const std::string& out_path) {
    try {
        std::ifstream in(raw_path);
        if (!in) throw std::runtime_error("cannot read raw run log: " + raw_path);
        std::vector<spinn::SweepCellResult> results;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json o = json::parse(line);
            spinn::SweepCellResult r;
            r.pe = o.at("pe").get<double>();
            r.n_d = o.at("n_d").get<int>();
            r.p_o = o.at("p_o").get<double>();
            r.mode = spinn::dbc_from_string(o.at("dbc").get<std::string>());
            r.data = o.at("data").get<bool>();
            r.seed = o.at("seed").get<std::uint64_t>();
            r.status = o.at("converged").get<bool>()
                           ? spinn::SchwarzStatus::Converged
                           : spinn::SchwarzStatus::MaxItersExceeded;
            r.iterations = o.at("iterations").get<int>();
            r.avg_l2 = o.at("avg_l2").get<double>();
            results.push_back(r);
        }
        spinn::pareto_export(results, pe, p_o, out_path);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "report error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_report_profile(const std::string& summary_path, const std::string& out_path) {
    try {
        std::ifstream in(summary_path);
        if (!in) throw std::runtime_error("cannot read summary: " + summary_path);
        json summary = json::parse(in);
        const json& cfg = summary.at("config");

        spinn::CouplingSetup setup;
        setup.spec = spinn::BvpSpec::from_peclet(cfg.at("pe").get<double>());
        setup.n_d = cfg.at("n_d").get<int>();
        setup.p_o = cfg.at("p_o").get<double>();
        setup.fom_flags = parse_solver_flags(cfg.at("solvers"), setup.n_d);
        setup.mode = spinn::dbc_from_string(cfg.at("dbc").get<std::string>());
        setup.use_data = cfg.at("data").get<bool>();
        setup.alpha_r = cfg.at("alpha_r").get<double>();
        setup.k = cfg.at("k").get<double>();
        setup.seed = cfg.at("seed").get<std::uint64_t>();
        setup.m_global = cfg.at("m_global").get<int>();
        setup.mdbc_literal = cfg.at("mdbc_literal").get<bool>();
        setup.net.linear_output = cfg.at("linear_output").get<bool>();
        spinn::SchwarzCoupling coupling = spinn::build_coupling(setup);

        // Restore the final state: trained parameters from checkpoints and
        // boundary data from the recorded finals; FOM subdomains re-solve.
        auto solvers = coupling.solvers();  // copy, then rebuild
        for (const auto& f : summary.at("subdomains")) {
            const int i = f.at("subdomain").get<int>();
            auto& s = solvers[i - 1];
            if (spinn::is_pinn(s)) {
                auto& p = std::get<spinn::SubdomainPinn>(s);
                if (!f.contains("checkpoint"))
                    throw std::runtime_error(
                        "summary lacks checkpoints (rerun solve with emit_checkpoints)");
                p.params = spinn::load_checkpoint(f.at("checkpoint").get<std::string>());
                p.g_left = f.at("g_left").get<double>();
                p.g_right = f.at("g_right").get<double>();
            } else {
                auto& fo = std::get<spinn::FomSubdomain>(s);
                fo.solution = spinn::fom_solve(setup.spec, fo.gamma_left, fo.gamma_right,
                                               fo.n_cells, f.at("g_left").get<double>(),
                                               f.at("g_right").get<double>(), fo.scheme);
                fo.solved = true;
            }
        }
        spinn::SchwarzCoupling restored(setup.spec, spinn::decompose(setup.n_d, setup.p_o),
                                        std::move(solvers), spinn::SchwarzConfig{});
        spinn::write_profile_csv(spinn::pointwise_error_profile(restored), out_path);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "report error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Schwarz-coupled subdomain PINN/FOM solver for the 1D "
                 "advection-diffusion boundary-layer problem"};
    app.require_subcommand(1);

    std::string config_path, out_path, out_dir = "sweep_out", scheme = "auto";
    std::string raw_path, summary_path;
    std::vector<std::string> overrides;
    double pe = 10.0, po = 0.35;
    int n_cells = 1024, workers = 1;
    bool force = false;

    auto* solve = app.add_subcommand("solve", "run one Schwarz coupling");
    solve->add_option("config", config_path, "JSON config file");
    solve->add_option("--set", overrides, "override config key=value (repeatable)");

    auto* fom = app.add_subcommand("fom", "solve the full-domain FOM and report error");
    fom->add_option("--pe", pe, "Peclet number")->required();
    fom->add_option("--n", n_cells, "grid cells");
    fom->add_option("--scheme", scheme, "central|upwind2|auto");
    fom->add_option("--out", out_path, "output CSV path");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep grid");
    sweep->add_option("config", config_path, "JSON grid config file");
    sweep->add_option("--set", overrides, "override config key=value (repeatable)");
    sweep->add_option("--out-dir", out_dir, "output directory");
    sweep->add_option("--workers", workers, "parallel cell workers");
    sweep->add_flag("--force", force, "overwrite an existing sweep output dir");

    auto* report = app.add_subcommand("report", "export figures-ready data from stored runs");
    report->require_subcommand(1);
    auto* pareto = report->add_subcommand("pareto", "Pareto slice from raw_runs.jsonl");
    pareto->add_option("--raw", raw_path, "raw_runs.jsonl path")->required();
    pareto->add_option("--pe", pe, "Peclet panel")->required();
    pareto->add_option("--po", po, "overlap slice");
    pareto->add_option("--out", out_path, "output CSV path")->required();
    auto* profile = report->add_subcommand("profile", "pointwise error profile from a "
                                                      "solve summary with checkpoints");
    profile->add_option("--summary", summary_path, "summary JSON from solve")->required();
    profile->add_option("--out", out_path, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) return cmd_solve(config_path, overrides);
    if (fom->parsed()) return cmd_fom(pe, n_cells, scheme, out_path);
    if (sweep->parsed()) return cmd_sweep(config_path, overrides, out_dir, workers, force);
    if (report->parsed()) {
        if (pareto->parsed()) return cmd_report_pareto(raw_path, pe, po, out_path);
        return cmd_report_profile(summary_path, out_path);
    }
    return 1;
}
