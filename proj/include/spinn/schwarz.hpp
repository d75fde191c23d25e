#ifndef SPINN_SCHWARZ_HPP
#define SPINN_SCHWARZ_HPP

/** \file schwarz.hpp
 *  Overlapping multiplicative Schwarz orchestration: subdomain solvers
 *  (network-based or finite-difference), the alternating sweep with trace
 *  exchange, and the two-part convergence test.
 */

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spinn/fom.hpp"
#include "spinn/pinn.hpp"
#include "spinn/problem.hpp"

namespace spinn {

enum class SchwarzStatus { Converged, MaxItersExceeded, Diverged };

inline std::string to_string(SchwarzStatus s) {
    switch (s) {
        case SchwarzStatus::Converged: return "Converged";
        case SchwarzStatus::MaxItersExceeded: return "MaxItersExceeded";
        default: return "Diverged";
    }
}

/** ||curr - prev||_2 / ||prev||_2 over a fixed sample-point set.
 *  Returns +inf when prev is (numerically) zero but curr is not, so the
 *  first sweep after a zero initialization can never satisfy the test. */
inline double schwarz_rel_error(const std::vector<double>& prev,
                                const std::vector<double>& curr) {
    if (prev.size() != curr.size())
        throw std::invalid_argument("schwarz_rel_error: sample size mismatch");
    double dn = 0.0, pn = 0.0;
    for (std::size_t j = 0; j < prev.size(); ++j) {
        const double d = curr[j] - prev[j];
        dn += d * d;
        pn += prev[j] * prev[j];
    }
    dn = std::sqrt(dn);
    pn = std::sqrt(pn);
    if (pn < 1e-14) return dn > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return dn / pn;
}

/** Discrete relative L2 error against reference samples at shared points. */
inline double l2_rel_error(const std::vector<double>& approx,
                           const std::vector<double>& ref) {
    if (approx.size() != ref.size())
        throw std::invalid_argument("l2_rel_error: sample size mismatch");
    if (approx.empty()) throw std::invalid_argument("l2_rel_error: empty samples");
    double dn = 0.0, rn = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) {
        const double d = approx[j] - ref[j];
        dn += d * d;
        rn += ref[j] * ref[j];
    }
    return std::sqrt(dn) / std::sqrt(rn);
}

/** Convergence needs both tests at once: self-consistency of the iteration
 *  (Schwarz relative error below delta) and fidelity to the reference
 *  solution (L2 relative error below tol_l2), each maximized over
 *  subdomains. */
inline bool check_convergence(double max_schwarz_err, double max_l2_err, double delta,
                              double tol_l2) {
    return max_schwarz_err < delta && max_l2_err < tol_l2;
}

// ----------------------------------------------------------------- solvers

/** Finite-difference subdomain solver: grid geometry plus the most recent
 *  solve. */
struct FomSubdomain {
    double gamma_left = 0.0, gamma_right = 1.0;
    int n_cells = 0;
    Scheme scheme = Scheme::Central;
    FomSolution solution;  ///< valid after the first sweep
    bool solved = false;
};

/** Grid resolution rule for subdomain FOMs: cells snap to the count a
 *  global grid of `global_cells` would place inside the subdomain. */
inline FomSubdomain make_fom_subdomain(const BvpSpec& spec, double gamma_left,
                                       double gamma_right, int global_cells = 1024) {
    FomSubdomain f;
    f.gamma_left = gamma_left;
    f.gamma_right = gamma_right;
    f.n_cells = std::max(2, static_cast<int>(std::lround((gamma_right - gamma_left) *
                                                         global_cells)));
    f.scheme = pick_scheme(spec, (gamma_right - gamma_left) / f.n_cells);
    return f;
}

using SubdomainSolver = std::variant<SubdomainPinn, FomSubdomain>;

inline bool is_pinn(const SubdomainSolver& s) {
    return std::holds_alternative<SubdomainPinn>(s);
}

inline double solver_left(const SubdomainSolver& s) {
    return is_pinn(s) ? std::get<SubdomainPinn>(s).gamma_left
                      : std::get<FomSubdomain>(s).gamma_left;
}

inline double solver_right(const SubdomainSolver& s) {
    return is_pinn(s) ? std::get<SubdomainPinn>(s).gamma_right
                      : std::get<FomSubdomain>(s).gamma_right;
}

// ------------------------------------------------------------------- trace

/** One subdomain-solve record. The *_src_iter fields tag which sweep
 *  produced the consumed boundary value (0 = initialization), making the
 *  multiplicative ordering checkable: within sweep n, g_left comes from
 *  sweep n and g_right from sweep n-1. */
struct IterRecord {
    int iter = 0;
    int subdomain = 0;
    double schwarz_err = 0.0;
    double l2_err = 0.0;
    double g_left = 0.0, g_right = 0.0;
    int g_left_src_iter = 0, g_right_src_iter = 0;
    double seconds = 0.0;
};

struct SchwarzTrace {
    std::vector<IterRecord> rows;  ///< n_subdomains rows per completed sweep
    SchwarzStatus status = SchwarzStatus::MaxItersExceeded;
    int iterations = 0;

    double max_over_sweep(int iter, double IterRecord::* field) const {
        double m = 0.0;
        for (const auto& r : rows)
            if (r.iter == iter) m = std::max(m, r.*field);
        return m;
    }
};

// ------------------------------------------------------------------ driver

struct SchwarzConfig {
    int max_iters = 100;
    double delta = 1e-3;        ///< Schwarz relative-error tolerance
    double tol_l2 = 5e-3;       ///< reference L2 relative-error tolerance
    int epochs_per_iter = 1024;
    bool adam_reset = false;    ///< reset optimizer moments every sweep
    int ref_n = 1024;           ///< reference-solution resolution
};

/** Multiplicative alternating Schwarz driver over an ordered set of
 *  subdomain solvers. Holds the exchanged boundary traces, per-subdomain
 *  optimizer state, loss histories, and the convergence trace. */
class SchwarzCoupling {
public:
    SchwarzCoupling(const BvpSpec& spec, Decomposition decomp,
                    std::vector<SubdomainSolver> solvers, SchwarzConfig cfg = {})
        : spec_(spec), decomp_(std::move(decomp)), solvers_(std::move(solvers)),
          cfg_(cfg) {
        const int nd = static_cast<int>(solvers_.size());
        if (nd != decomp_.n_d)
            throw std::invalid_argument("SchwarzCoupling: solver count != n_d");
        adam_.resize(nd);
        loss_history_.resize(nd);
        prev_samples_.resize(nd);
        g_left_cur_.assign(nd + 2, 0.0);
        g_right_store_.assign(nd + 2, 0.0);
        g_left_src_.assign(nd + 2, 0);
        g_right_src_.assign(nd + 2, 0);
        reference_ = make_reference(spec_, cfg_.ref_n);
        ref_x_.resize(nd);
        ref_u_.resize(nd);
        for (int i = 1; i <= nd; ++i) {
            for (int j = 0; j <= reference_.n; ++j) {
                const double x = reference_.x(j);
                if (x >= decomp_.left(i) && x <= decomp_.right(i)) {
                    ref_x_[i - 1].push_back(x);
                    ref_u_[i - 1].push_back(reference_.u[j]);
                }
            }
        }
    }

    /** Current approximation of subdomain i (1-based) at x. For
     *  network-based subdomains the boundary data baked into the transform
     *  are the most recently consumed ones. */
    double evaluate(int i, double x) const {
        const SubdomainSolver& s = solvers_[i - 1];
        if (is_pinn(s)) return evaluate_u_hat(std::get<SubdomainPinn>(s), x).v;
        const FomSubdomain& f = std::get<FomSubdomain>(s);
        if (!f.solved) return 0.0;
        return interpolate(f.solution, x);
    }

    /** Run sweeps until converged, the iteration cap, or a non-finite
     *  solve. on_sweep (optional) fires after every completed sweep. */
    const SchwarzTrace& run(const std::function<void(int, const SchwarzCoupling&)>&
                                on_sweep = nullptr) {
        const int nd = decomp_.n_d;
        for (int iter = 1; iter <= cfg_.max_iters; ++iter) {
            double sweep_sch = 0.0, sweep_l2 = 0.0;
            for (int i = 1; i <= nd; ++i) {
                const auto t0 = std::chrono::steady_clock::now();
                IterRecord rec;
                rec.iter = iter;
                rec.subdomain = i;
                rec.g_left = (i > 1) ? g_left_cur_[i] : spec_.bc_left;
                rec.g_right = (i < nd) ? g_right_store_[i + 1] : spec_.bc_right;
                rec.g_left_src_iter = (i > 1) ? g_left_src_[i] : 0;
                rec.g_right_src_iter = (i < nd) ? g_right_src_[i + 1] : 0;

                if (!solve_subdomain(i, rec.g_left, rec.g_right, iter)) {
                    trace_.status = SchwarzStatus::Diverged;
                    trace_.iterations = iter;
                    trace_.rows.push_back(rec);
                    return trace_;
                }

                if (i < nd) {
                    g_left_cur_[i + 1] = evaluate(i, decomp_.left(i + 1));
                    g_left_src_[i + 1] = iter;
                }
                if (i > 1) {
                    g_right_store_[i] = evaluate(i, decomp_.right(i - 1));
                    g_right_src_[i] = iter;
                }

                std::vector<double> cur = sample_own(i);
                bool finite = true;
                for (double v : cur) finite = finite && std::isfinite(v);
                if (!finite) {
                    trace_.status = SchwarzStatus::Diverged;
                    trace_.iterations = iter;
                    trace_.rows.push_back(rec);
                    return trace_;
                }
                rec.schwarz_err = prev_samples_[i - 1].empty()
                                      ? std::numeric_limits<double>::infinity()
                                      : schwarz_rel_error(prev_samples_[i - 1], cur);
                prev_samples_[i - 1] = std::move(cur);

                std::vector<double> on_ref(ref_x_[i - 1].size());
                for (std::size_t j = 0; j < on_ref.size(); ++j)
                    on_ref[j] = evaluate(i, ref_x_[i - 1][j]);
                rec.l2_err = l2_rel_error(on_ref, ref_u_[i - 1]);

                sweep_sch = std::max(sweep_sch, rec.schwarz_err);
                sweep_l2 = std::max(sweep_l2, rec.l2_err);
                rec.seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();
                trace_.rows.push_back(rec);
            }
            trace_.iterations = iter;
            if (on_sweep) on_sweep(iter, *this);
            if (check_convergence(sweep_sch, sweep_l2, cfg_.delta, cfg_.tol_l2)) {
                trace_.status = SchwarzStatus::Converged;
                return trace_;
            }
        }
        trace_.status = SchwarzStatus::MaxItersExceeded;
        return trace_;
    }

    const SchwarzTrace& trace() const { return trace_; }
    const BvpSpec& spec() const { return spec_; }
    const Decomposition& decomposition() const { return decomp_; }
    const std::vector<SubdomainSolver>& solvers() const { return solvers_; }
    const FomSolution& reference() const { return reference_; }
    const std::vector<double>& reference_x(int i) const { return ref_x_[i - 1]; }
    const std::vector<double>& reference_u(int i) const { return ref_u_[i - 1]; }
    const std::vector<EpochLoss>& loss_history(int i) const {
        return loss_history_[i - 1];
    }

private:
    bool solve_subdomain(int i, double gl, double gr, int iter) {
        SubdomainSolver& s = solvers_[i - 1];
        if (is_pinn(s)) {
            SubdomainPinn& p = std::get<SubdomainPinn>(s);
            p.g_left = gl;
            p.g_right = gr;
            if (cfg_.adam_reset || adam_[i - 1].m.empty())
                adam_[i - 1].reset(p.params.theta.size());
            try {
                train_epochs(p, spec_, cfg_.epochs_per_iter, adam_[i - 1],
                             &loss_history_[i - 1], iter);
            } catch (const NonFiniteLossError&) {
                return false;
            }
            return true;
        }
        FomSubdomain& f = std::get<FomSubdomain>(s);
        f.solution = fom_solve(spec_, f.gamma_left, f.gamma_right, f.n_cells, gl, gr,
                               f.scheme);
        f.solved = true;
        return true;
    }

    /** The fixed per-subdomain sample set for the Schwarz error: collocation
     *  points for network solvers, grid nodes for finite-difference ones. */
    std::vector<double> sample_own(int i) const {
        const SubdomainSolver& s = solvers_[i - 1];
        if (is_pinn(s)) {
            const SubdomainPinn& p = std::get<SubdomainPinn>(s);
            std::vector<double> out(p.colloc.size());
            for (std::size_t j = 0; j < out.size(); ++j)
                out[j] = evaluate(i, p.colloc[j]);
            return out;
        }
        const FomSubdomain& f = std::get<FomSubdomain>(s);
        return f.solution.u;
    }

    BvpSpec spec_;
    Decomposition decomp_;
    std::vector<SubdomainSolver> solvers_;
    SchwarzConfig cfg_;
    std::vector<AdamState> adam_;
    std::vector<std::vector<EpochLoss>> loss_history_;
    std::vector<std::vector<double>> prev_samples_;
    std::vector<double> g_left_cur_, g_right_store_;
    std::vector<int> g_left_src_, g_right_src_;
    FomSolution reference_;
    std::vector<std::vector<double>> ref_x_, ref_u_;
    SchwarzTrace trace_;
};

// ------------------------------------------------------------------ setup

/** Everything needed to assemble a coupling run deterministically. */
struct CouplingSetup {
    BvpSpec spec = BvpSpec::from_peclet(10.0);
    int n_d = 2;
    double p_o = 0.2;
    std::vector<bool> fom_flags;  ///< per-subdomain; empty = all network
    DbcMode mode = DbcMode::Weak;
    bool use_data = false;
    double alpha_r = 0.25;
    double k = 1.0;
    std::uint64_t seed = 0;
    int m_global = 1024;
    bool mdbc_literal = false;
    NetConfig net;
    SchwarzConfig schwarz;
};

/** Per-subdomain parameter seed: decorrelated from the master seed but
 *  reproducible. */
inline std::uint64_t subdomain_seed(std::uint64_t master, int i) {
    return detail::splitmix64(master + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(i));
}

inline SchwarzCoupling build_coupling(const CouplingSetup& setup) {
    Decomposition dec = decompose(setup.n_d, setup.p_o);
    CollocationSet colloc = sample_collocation(setup.m_global, setup.seed, dec);
    std::vector<SubdomainSolver> solvers;
    for (int i = 1; i <= setup.n_d; ++i) {
        const bool fom = !setup.fom_flags.empty() && setup.fom_flags[i - 1];
        if (fom) {
            solvers.emplace_back(
                make_fom_subdomain(setup.spec, dec.left(i), dec.right(i)));
            continue;
        }
        SubdomainPinn p;
        p.params = init_params({1, 20, 20, 1}, subdomain_seed(setup.seed, i));
        p.net_cfg = setup.net;
        p.mode = setup.mode;
        p.index = i;
        p.n_subdomains = setup.n_d;
        p.gamma_left = dec.left(i);
        p.gamma_right = dec.right(i);
        p.k = setup.k;
        p.colloc = colloc.per_subdomain[i - 1];
        if (p.colloc.empty())
            throw std::invalid_argument("build_coupling: subdomain has no collocation points");
        if (setup.use_data) p.snapshot = make_snapshot(setup.spec, p.colloc);
        p.weights = make_loss_weights(setup.mode, setup.use_data, setup.alpha_r);
        p.mdbc_literal = setup.mdbc_literal;
        solvers.emplace_back(std::move(p));
    }
    return SchwarzCoupling(setup.spec, std::move(dec), std::move(solvers),
                           setup.schwarz);
}

}  // namespace spinn

#endif  // SPINN_SCHWARZ_HPP
