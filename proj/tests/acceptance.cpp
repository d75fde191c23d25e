// Acceptance gate: eight end-to-end checks, one PASS/FAIL line each on
// stdout. Checks keep running after a failure; the exit code is the number
// of failed checks. Long-running steps log progress to stderr.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "spinn/experiments.hpp"

using namespace spinn;

namespace {

int failures = 0;

void report(int idx, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", idx, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void progress(const std::string& msg) {
    std::fprintf(stderr, "  .. %s\n", msg.c_str());
    std::fflush(stderr);
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double l2_vs_analytic(const BvpSpec& spec, const FomSolution& sol) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j <= sol.n; ++j) {
        const double u = analytic_solution(spec, sol.x(j));
        num += (sol.u[j] - u) * (sol.u[j] - u);
        den += u * u;
    }
    return std::sqrt(num / den);
}

// --------------------------------------------------------- 1: grid solver

void criterion_1() {
    Timer timer;
    const BvpSpec spec = BvpSpec::from_peclet(10.0);
    const double e_fine = l2_vs_analytic(spec, fom_solve(spec, 1024, Scheme::Central));
    const double e_coarse = l2_vs_analytic(spec, fom_solve(spec, 512, Scheme::Central));
    const double ratio = e_coarse / e_fine;
    const double secs = timer.seconds();
    const bool pass = e_fine < 1e-3 && ratio >= 3.5 && ratio <= 4.5 && secs < 1.0;
    report(1, pass,
           fmt("single-domain grid solve at the low-advection setting: rel L2 %.3g "
               "(<1e-3), refinement error ratio %.2f (in [3.5,4.5]), %.2fs (<1s)",
               e_fine, ratio, secs));
}

// ----------------------------------------------- 2: training gradient check

void criterion_2() {
    Timer timer;
    const BvpSpec spec = BvpSpec::from_peclet(10.0);
    const Decomposition dec = decompose(2, 0.2);
    const CollocationSet colloc = sample_collocation(64, 0, dec);
    const DbcMode modes[] = {DbcMode::Weak, DbcMode::Mixed, DbcMode::Strong};

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> g_dist(-1.0, 1.0);
    double worst = 0.0;
    int cases = 0;
    for (int draw = 0; draw < 5; ++draw) {
        for (DbcMode mode : modes) {
            for (bool data : {false, true}) {
                SubdomainPinn p;
                p.params = init_params({1, 20, 20, 1}, 1000 + cases);
                p.mode = mode;
                p.index = 1;
                p.n_subdomains = 2;
                p.gamma_left = dec.left(1);
                p.gamma_right = dec.right(1);
                p.colloc = colloc.per_subdomain[0];
                p.g_right = g_dist(rng);
                if (data) p.snapshot = make_snapshot(spec, p.colloc);
                p.weights = make_loss_weights(mode, data, 0.25);

                std::vector<double> g_ad(p.params.theta.size());
                MlpTrace tr;
                loss_and_gradient(p, spec, g_ad, tr);

                const double h = 1e-4;
                double num = 0.0, den = 0.0;
                for (std::size_t c = 0; c < p.params.theta.size(); ++c) {
                    const double saved = p.params.theta[c];
                    p.params.theta[c] = saved + h;
                    const double up = total_loss(p, spec).total;
                    p.params.theta[c] = saved - h;
                    const double dn = total_loss(p, spec).total;
                    p.params.theta[c] = saved;
                    const double fd = (up - dn) / (2.0 * h);
                    num = std::max(num, std::abs(g_ad[c] - fd));
                    den = std::max(den, std::abs(fd));
                }
                worst = std::max(worst, num / den);
                ++cases;
            }
        }
    }
    const double secs = timer.seconds();
    const bool pass = worst < 1e-4 && secs < 30.0;
    report(2, pass,
           fmt("training gradient vs central finite differences (step 1e-4): worst "
               "max-norm relative deviation %.3g over %d draw/config cases (<1e-4), "
               "%.1fs (<30s)",
               worst, cases, secs));
}

// -------------------------------------- 3: strong-mode endpoint exactness

void criterion_3() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    bool pass = true;
    double worst_margin = 0.0;  // dev / bound, should stay <= ~1
    for (int t = 0; t < 40; ++t) {
        const double lo = 0.4 * u01(rng);
        const double width = 0.2 + (std::min(0.9, 1.0 - lo) - 0.2) * u01(rng);
        SubdomainPinn p;
        p.params = init_params({1, 20, 20, 1}, 500 + t);
        p.mode = DbcMode::Strong;
        p.index = 2;
        p.n_subdomains = 3;
        p.gamma_left = lo;
        p.gamma_right = lo + width;
        p.g_left = 4.0 * u01(rng) - 2.0;
        p.g_right = 4.0 * u01(rng) - 2.0;
        p.colloc = {lo + 0.5 * width};  // evaluation only

        const double bound_l = std::pow(10.0, -10.0 * width) * std::abs(p.g_right);
        const double bound_r = std::pow(10.0, -10.0 * width) * std::abs(p.g_left);
        const double dev_l = std::abs(evaluate_u_hat(p, p.gamma_left).v - p.g_left);
        const double dev_r = std::abs(evaluate_u_hat(p, p.gamma_right).v - p.g_right);
        // The leakage bound is attained with equality in exact arithmetic, so
        // the measured deviation can overshoot it by the rounding of the final
        // g + leakage sum. Budget a few ulps of the operands for that.
        const double noise = 4.0 * std::numeric_limits<double>::epsilon() *
                             (1.0 + std::abs(p.g_left) + std::abs(p.g_right));
        pass = pass && dev_l <= bound_l * (1.0 + 1e-9) + noise &&
               dev_r <= bound_r * (1.0 + 1e-9) + noise;
        if (bound_l > 0.0) worst_margin = std::max(worst_margin, dev_l / bound_l);
        if (bound_r > 0.0) worst_margin = std::max(worst_margin, dev_r / bound_r);

        const double v_l = scaling_v(p.gamma_left, p.gamma_left, p.gamma_right, p.k);
        const double v_r = scaling_v(p.gamma_right, p.gamma_left, p.gamma_right, p.k);
        pass = pass && v_l == 0.0 && v_r == 0.0;
    }
    report(3, pass,
           fmt("strong-mode transform endpoints within the ramp leakage bound "
               "10^(-10*width)*|opposite g| plus ulp-level sum rounding over 40 "
               "random networks (worst dev/bound %.9f); scaling factor exactly "
               "zero at endpoints",
               worst_margin));
}

// ------------------------------------- 4: deterministic coupling (all-FOM)

void criterion_4() {
    Timer timer;
    const BvpSpec spec = BvpSpec::from_peclet(10.0);
    const FomSolution global = fom_solve(spec, 1024, Scheme::Central);
    double gnorm = 0.0;
    for (double u : global.u) gnorm += u * u;
    gnorm = std::sqrt(gnorm);

    bool pass = true;
    std::vector<int> iters;
    double worst_rel = 0.0;
    for (double po : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        CouplingSetup setup;
        setup.spec = spec;
        setup.n_d = 2;
        setup.p_o = po;
        setup.fom_flags = {true, true};
        SchwarzCoupling coupling = build_coupling(setup);
        const SchwarzTrace& trace = coupling.run();
        pass = pass && trace.status == SchwarzStatus::Converged;
        iters.push_back(trace.iterations);

        double dn = 0.0;
        for (int j = 0; j <= global.n; ++j) {
            const double x = global.x(j);
            const int sub = (x <= coupling.decomposition().right(1)) ? 1 : 2;
            const double d = coupling.evaluate(sub, x) - global.u[j];
            dn += d * d;
        }
        const double rel = std::sqrt(dn) / gnorm;
        worst_rel = std::max(worst_rel, rel / (10.0 * 1e-3));
        pass = pass && std::sqrt(dn) <= 10.0 * 1e-3 * gnorm;
    }
    for (std::size_t j = 1; j < iters.size(); ++j) pass = pass && iters[j] <= iters[j - 1];
    const double secs = timer.seconds();
    pass = pass && secs < 10.0;
    report(4, pass,
           fmt("two-grid coupling converged at all overlaps (iterations %d,%d,%d,%d,%d "
               "non-increasing), within 10*delta of the single-grid solve (worst "
               "fraction of bound %.2f), %.1fs (<10s)",
               iters[0], iters[1], iters[2], iters[3], iters[4], worst_rel, secs));
}

// ------------------------------------ 5: hybrid coupling at extreme advection

CouplingSetup hybrid_setup(std::uint64_t seed) {
    CouplingSetup setup;
    setup.spec = BvpSpec::from_peclet(1e6);
    setup.n_d = 2;
    setup.p_o = 0.1;
    setup.fom_flags = {false, true};  // network on the left, grid on the right
    setup.mode = DbcMode::Weak;
    setup.use_data = false;
    setup.alpha_r = 0.25;
    setup.seed = seed;
    setup.m_global = 1024;
    setup.schwarz.epochs_per_iter = 1024;
    setup.schwarz.max_iters = 30;
    return setup;
}

void criterion_5() {
    Timer timer;
    bool pass = false;
    std::string detail = "no seed in {0,1,2} converged within 30 iterations";
    for (std::uint64_t seed : {0, 1, 2}) {
        progress(fmt("criterion 5: hybrid run, seed %llu",
                     static_cast<unsigned long long>(seed)));
        SchwarzCoupling coupling = build_coupling(hybrid_setup(seed));
        const SchwarzTrace& trace = coupling.run();
        if (trace.status != SchwarzStatus::Converged) continue;
        const double final_max_l2 =
            trace.max_over_sweep(trace.iterations, &IterRecord::l2_err);
        pass = trace.iterations <= 30 && final_max_l2 <= 0.005;
        detail = fmt("network+grid coupling at the boundary-layer extreme: seed %llu "
                     "converged in %d iterations (<=30), final per-subdomain rel L2 "
                     "%.2e (<=0.005), %.0fs",
                     static_cast<unsigned long long>(seed), trace.iterations,
                     final_max_l2, timer.seconds());
        break;
    }
    report(5, pass, detail);
}

// --------------------------------- 6: boundary-enforcement study at Pe=150

void criterion_6() {
    Timer timer;
    bool pass = true;
    std::string parts;
    for (DbcMode mode : {DbcMode::Weak, DbcMode::Mixed, DbcMode::Strong}) {
        bool mode_ok = false;
        std::string mode_detail = to_string(mode) + ": no converging seed in {0,1,2}";
        for (std::uint64_t seed : {0, 1, 2}) {
            progress(fmt("criterion 6: %s seed %llu", to_string(mode).c_str(),
                         static_cast<unsigned long long>(seed)));
            CouplingSetup setup;
            setup.spec = BvpSpec::from_peclet(150.0);
            setup.n_d = 3;
            setup.p_o = 0.2;
            setup.mode = mode;
            setup.use_data = true;
            setup.alpha_r = 0.2;
            setup.seed = seed;
            setup.m_global = 1024;
            setup.schwarz.epochs_per_iter = 1024;
            setup.schwarz.max_iters = 100;
            SchwarzCoupling coupling = build_coupling(setup);
            const SchwarzTrace& trace = coupling.run();
            if (trace.status != SchwarzStatus::Converged) continue;
            double max_err = 0.0;
            for (const auto& r : pointwise_error_profile(coupling))
                max_err = std::max(max_err, r.rel_err);
            if (max_err < 0.02) {
                mode_ok = true;
                mode_detail =
                    fmt("%s: seed %llu, %d iters, max pointwise rel err %.2f%%",
                        to_string(mode).c_str(), static_cast<unsigned long long>(seed),
                        trace.iterations, 100.0 * max_err);
                break;
            }
            mode_detail = fmt("%s: converged but max pointwise rel err %.2f%% >= 2%%",
                              to_string(mode).c_str(), 100.0 * max_err);
        }
        pass = pass && mode_ok;
        parts += (parts.empty() ? "" : "; ") + mode_detail;
    }
    report(6, pass,
           fmt("three-network coupling with data loss in the high-advection study "
               "(%s), %.0fs",
               parts.c_str(), timer.seconds()));
}

// ----------------------------------------- 7: overlap/decomposition trends

void criterion_7() {
    Timer timer;
    const double po_values[] = {0.15, 0.35, 0.50};
    bool pass = true;
    std::string parts;
    double mean_lo = 0.0, mean_hi = 0.0;  // over cells at p_o = 0.15 / 0.50
    bool po35_fast = true;
    for (int nd : {2, 3}) {
        std::string row = fmt("nd%d:", nd);
        for (double po : po_values) {
            int cell_iters = -1;
            for (std::uint64_t seed : {0, 1, 2}) {
                progress(fmt("criterion 7: nd=%d po=%.2f seed %llu", nd, po,
                             static_cast<unsigned long long>(seed)));
                CouplingSetup setup;
                setup.spec = BvpSpec::from_peclet(10.0);
                setup.n_d = nd;
                setup.p_o = po;
                setup.mode = DbcMode::Mixed;
                setup.use_data = true;
                setup.alpha_r = 0.25;
                setup.seed = seed;
                setup.m_global = 1024;
                setup.schwarz.epochs_per_iter = 1024;
                setup.schwarz.max_iters = 100;
                SchwarzCoupling coupling = build_coupling(setup);
                if (coupling.run().status == SchwarzStatus::Converged) {
                    cell_iters = coupling.trace().iterations;
                    break;
                }
            }
            if (cell_iters < 0) {
                pass = false;
                row += fmt(" po%.2f=unconverged", po);
                continue;
            }
            row += fmt(" po%.2f=%d", po, cell_iters);
            if (po == 0.15) mean_lo += cell_iters / 2.0;
            if (po == 0.50) mean_hi += cell_iters / 2.0;
            if (po == 0.35) po35_fast = po35_fast && cell_iters < 40;
        }
        parts += (parts.empty() ? "" : "; ") + row;
    }
    pass = pass && mean_hi <= mean_lo && po35_fast;
    report(7, pass,
           fmt("mixed-mode+data cells all converged (%s); mean iterations %.1f at "
               "overlap 0.50 <= %.1f at 0.15; mid-overlap cells under 40 iterations, "
               "%.0fs",
               parts.c_str(), mean_hi, mean_lo, timer.seconds()));
}

// ------------------------------------------------------- 8: repeatability

std::vector<std::string> rows_without_seconds(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        const auto cut = line.find_last_of(',');
        rows.push_back(line.substr(0, cut));
    }
    return rows;
}

void criterion_8() {
    Timer timer;
    progress("criterion 8: repeating the hybrid run twice");
    SchwarzCoupling a = build_coupling(hybrid_setup(0));
    write_trace_csv(a.run(), "acceptance_trace_a.csv");
    SchwarzCoupling b = build_coupling(hybrid_setup(0));
    write_trace_csv(b.run(), "acceptance_trace_b.csv");
    const auto rows_a = rows_without_seconds("acceptance_trace_a.csv");
    const auto rows_b = rows_without_seconds("acceptance_trace_b.csv");
    const bool pass = !rows_a.empty() && rows_a == rows_b;
    report(8, pass,
           fmt("repeated identical-seed runs produced byte-identical trace CSVs "
               "(%zu rows; all data columns compared, wall-clock column excluded), "
               "%.0fs",
               rows_a.size(), timer.seconds()));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    std::fprintf(stderr, "acceptance: %d of 8 failed\n", failures);
    return failures;
}
