#ifndef SPINN_PINN_HPP
#define SPINN_PINN_HPP

/** \file pinn.hpp
 *  Subdomain-local physics-informed network: the WDBC/MDBC/SDBC solution
 *  transforms, the composite loss (residual + boundary + data), and Adam
 *  training. Losses are implemented twice with identical semantics:
 *
 *   - total_loss_generic<S>: scalar-generic reference (S = double or Var),
 *     used by the tape gradient and the finite-difference cross-checks;
 *   - loss_and_gradient: double-only fused forward/adjoint pass through the
 *     jet recursion, used by training (one forward + one backward per
 *     collocation point per epoch).
 */

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinn/autodiff.hpp"
#include "spinn/fom.hpp"
#include "spinn/network.hpp"
#include "spinn/problem.hpp"

namespace spinn {

enum class DbcMode { Weak, Mixed, Strong };

inline std::string to_string(DbcMode m) {
    switch (m) {
        case DbcMode::Weak: return "wdbc";
        case DbcMode::Mixed: return "mdbc";
        default: return "sdbc";
    }
}

inline DbcMode dbc_from_string(const std::string& s) {
    if (s == "wdbc") return DbcMode::Weak;
    if (s == "mdbc") return DbcMode::Mixed;
    if (s == "sdbc") return DbcMode::Strong;
    throw std::invalid_argument("unknown DBC mode: " + s);
}

/** Relaxation weights. The boundary and data weights are derived, not free:
 *  alpha_b = 1-alpha_r for the weakly-constrained modes and 0 for SDBC;
 *  alpha_d = 1-alpha_r when snapshot data participates. */
struct LossWeights {
    double alpha_r, alpha_b, alpha_d;
};

inline LossWeights make_loss_weights(DbcMode mode, bool use_data, double alpha_r) {
    if (!(alpha_r > 0.0) || alpha_r > 1.0)
        throw std::invalid_argument("make_loss_weights: alpha_r must lie in (0,1]");
    LossWeights w{};
    w.alpha_r = alpha_r;
    w.alpha_b = (mode == DbcMode::Strong) ? 0.0 : 1.0 - alpha_r;
    w.alpha_d = use_data ? 1.0 - alpha_r : 0.0;
    return w;
}

/** Thrown when a forward pass or loss turns non-finite; the Schwarz driver
 *  converts it into the Diverged status. */
class NonFiniteLossError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** One subdomain's network, geometry, boundary data and sampling. */
struct SubdomainPinn {
    MlpParams params;
    NetConfig net_cfg;
    DbcMode mode = DbcMode::Weak;
    int index = 1;           ///< 1-based subdomain index
    int n_subdomains = 1;
    double gamma_left = 0.0, gamma_right = 1.0;
    double k = 1.0;          ///< steepness of the tanh scaling factors
    double g_left = 0.0, g_right = 0.0;  ///< current Schwarz boundary values
    std::vector<double> colloc;
    std::optional<Snapshot> snapshot;
    LossWeights weights{0.25, 0.75, 0.0};
    /** Use Algorithm 1 verbatim for MDBC: scaling factor vanishing at both
     *  subdomain endpoints and Schwarz matching on the raw network value. */
    bool mdbc_literal = false;
};

// ------------------------------------------------------------- transforms

/** v(x) = tanh(k(gamma_R - x)) * tanh(k(x - gamma_L)); exactly zero at both
 *  endpoints. */
template <class T>
Jet2<T> scaling_v(const Jet2<T>& x, double gamma_left, double gamma_right, double k) {
    return tanh(k * (gamma_right - x)) * tanh(k * (x - gamma_left));
}

inline double scaling_v(double x, double gamma_left, double gamma_right, double k) {
    return std::tanh(k * (gamma_right - x)) * std::tanh(k * (x - gamma_left));
}

/** phi(x) = 10^{-10(x - gamma_L)}: equals 1 at the left endpoint and decays
 *  to 10^{-10 s_d} at the right one. psi mirrors it. */
template <class T>
Jet2<T> ramp_phi(const Jet2<T>& x, double gamma_left) {
    constexpr double ln10 = 2.302585092994045684;
    return exp((-10.0 * ln10) * (x - gamma_left));
}

template <class T>
Jet2<T> ramp_psi(const Jet2<T>& x, double gamma_right) {
    constexpr double ln10 = 2.302585092994045684;
    return exp((10.0 * ln10) * (x - gamma_right));
}

inline double ramp_phi(double x, double gamma_left) {
    return std::pow(10.0, -10.0 * (x - gamma_left));
}
inline double ramp_psi(double x, double gamma_right) {
    return std::pow(10.0, 10.0 * (x - gamma_right));
}

namespace detail {

/** Multiplicative factor of the MDBC transform. The tanh factor is applied
 *  only at endpoints that are system boundaries (left end of the first
 *  subdomain, right end of the last); interior endpoints keep factor 1 so
 *  the transformed value can still match the neighbour trace. The literal
 *  variant reproduces Algorithm 1 and vanishes at both endpoints. */
template <class T>
Jet2<T> mdbc_factor(const SubdomainPinn& p, const Jet2<T>& x) {
    if (p.mdbc_literal)
        return scaling_v(x, p.gamma_left, p.gamma_right, p.k);
    Jet2<T> f = jet2_constant<T>(x.v * 0.0 + 1.0, x.v * 0.0);
    if (p.index == 1) f = f * tanh(p.k * (x - p.gamma_left));
    if (p.index == p.n_subdomains) f = f * tanh(p.k * (p.gamma_right - x));
    return f;
}

}  // namespace detail

/** Transformed solution u_hat as a jet, from the network jet at the same
 *  point. The factors participate in the spatial derivatives. */
template <class T>
Jet2<T> transform_solution(const SubdomainPinn& p, const Jet2<T>& x, const Jet2<T>& nn) {
    switch (p.mode) {
        case DbcMode::Weak:
            return nn;
        case DbcMode::Mixed:
            return detail::mdbc_factor(p, x) * nn;
        default: {
            Jet2<T> v = scaling_v(x, p.gamma_left, p.gamma_right, p.k);
            Jet2<T> phi = ramp_phi(x, p.gamma_left);
            Jet2<T> psi = ramp_psi(x, p.gamma_right);
            return v * nn + p.g_left * phi + p.g_right * psi;
        }
    }
}

/** Evaluate u_hat directly from parameters, generic over the scalar. */
template <class S>
Jet2<S> evaluate_u_hat(const SubdomainPinn& p, std::span<const S> theta, const Jet2<S>& x) {
    Jet2<S> nn = forward_jet<S>(theta, p.params.layer_sizes, x, p.net_cfg);
    return transform_solution(p, x, nn);
}

inline Jet2<double> evaluate_u_hat(const SubdomainPinn& p, double x) {
    return evaluate_u_hat<double>(p, std::span<const double>(p.params.theta),
                                  jet2_lift(x));
}

// ------------------------------------------------------------------ losses

template <class S>
struct LossPartsT {
    S total, residual, boundary, data;
};
using LossParts = LossPartsT<double>;

/** Scalar-generic composite loss; the reference semantics for gradients.
 *  Boundary terms: the system terms penalize the raw network value at the
 *  system boundary; the Schwarz matching terms penalize the transformed
 *  solution against the neighbour trace (identical to the raw value for
 *  WDBC; see mdbc_literal for the Algorithm-1 verbatim variant). */
template <class S>
LossPartsT<S> total_loss_generic(const SubdomainPinn& p, const BvpSpec& spec,
                                 std::span<const S> theta) {
    const S zero = theta[0] * 0.0;
    LossPartsT<S> parts{zero, zero, zero, zero};

    const std::size_t M = p.colloc.size();
    if (M == 0) throw std::invalid_argument("total_loss_generic: no collocation points");
    for (double xp : p.colloc) {
        Jet2<S> x{zero + xp, zero + 1.0, zero};
        Jet2<S> u = evaluate_u_hat(p, theta, x);
        S r = -spec.nu * u.d2 + u.d1 - spec.source;
        parts.residual = parts.residual + r * r;
    }
    parts.residual = parts.residual / static_cast<double>(M);

    if (p.weights.alpha_b > 0.0) {
        auto value_at = [&](double xp, bool raw_nn) {
            Jet2<S> x{zero + xp, zero + 1.0, zero};
            Jet2<S> nn = forward_jet<S>(theta, p.params.layer_sizes, x, p.net_cfg);
            return raw_nn ? nn.v : transform_solution(p, x, nn).v;
        };
        const bool raw_sch = p.mdbc_literal && p.mode == DbcMode::Mixed;
        if (p.mode == DbcMode::Weak) {
            if (p.index == 1) {
                S b = value_at(p.gamma_left, true);
                parts.boundary = parts.boundary + b * b;
            }
            if (p.index == p.n_subdomains) {
                S b = value_at(p.gamma_right, true);
                parts.boundary = parts.boundary + b * b;
            }
        }
        if (p.n_subdomains > 1) {
            if (p.index > 1) {
                S b = value_at(p.gamma_left, raw_sch) - p.g_left;
                parts.boundary = parts.boundary + b * b;
            }
            if (p.index < p.n_subdomains) {
                S b = value_at(p.gamma_right, raw_sch) - p.g_right;
                parts.boundary = parts.boundary + b * b;
            }
        }
    }

    if (p.weights.alpha_d > 0.0) {
        if (!p.snapshot)
            throw std::invalid_argument("total_loss_generic: data weight set without snapshot");
        const auto& snap = *p.snapshot;
        for (std::size_t j = 0; j < snap.points.size(); ++j) {
            Jet2<S> x{zero + snap.points[j], zero + 1.0, zero};
            S e = evaluate_u_hat(p, theta, x).v - snap.values[j];
            parts.data = parts.data + e * e;
        }
        parts.data = parts.data / static_cast<double>(snap.points.size());
    }

    parts.total = p.weights.alpha_r * parts.residual + p.weights.alpha_b * parts.boundary +
                  p.weights.alpha_d * parts.data;
    return parts;
}

inline LossParts total_loss(const SubdomainPinn& p, const BvpSpec& spec) {
    return total_loss_generic<double>(p, spec, std::span<const double>(p.params.theta));
}

/** Tape-based gradient of the composite loss; the slow reference path. */
inline std::vector<double> tape_gradient(const SubdomainPinn& p, const BvpSpec& spec) {
    GradTape tape;
    std::vector<Var> theta;
    theta.reserve(p.params.theta.size());
    for (double t : p.params.theta) theta.push_back(tape.variable(t));
    LossPartsT<Var> parts =
        total_loss_generic<Var>(p, spec, std::span<const Var>(theta));
    return tape.reverse_grad(parts.total, p.params.theta.size());
}

// ------------------------------------------------- fused training gradient

namespace detail {

/** Jet of the multiplicative transform factor in double arithmetic, or the
 *  constant-1 jet for WDBC. */
inline Jet2<double> transform_factor(const SubdomainPinn& p, double x) {
    switch (p.mode) {
        case DbcMode::Weak:
            return {1.0, 0.0, 0.0};
        case DbcMode::Mixed:
            return mdbc_factor(p, jet2_lift(x));
        default:
            return scaling_v(jet2_lift(x), p.gamma_left, p.gamma_right, p.k);
    }
}

/** Additive (parameter-independent) part of the transform. */
inline Jet2<double> transform_offset(const SubdomainPinn& p, double x) {
    if (p.mode != DbcMode::Strong) return {0.0, 0.0, 0.0};
    Jet2<double> xj = jet2_lift(x);
    return p.g_left * ramp_phi(xj, p.gamma_left) + p.g_right * ramp_psi(xj, p.gamma_right);
}

/** Pull a u_hat-jet adjoint seed back to an NN-jet adjoint seed through
 *  u_hat = F * NN + offset (jet product rule transposed). */
inline Jet2<double> pullback_through_factor(const Jet2<double>& F, const Jet2<double>& seed) {
    return {F.v * seed.v + F.d1 * seed.d1 + F.d2 * seed.d2,
            F.v * seed.d1 + 2.0 * F.d1 * seed.d2,
            F.v * seed.d2};
}

}  // namespace detail

/** Loss and full parameter gradient in one fused pass. Matches
 *  total_loss_generic to round-off; the unit tests enforce that. Data
 *  residuals are fused into the collocation loop when the snapshot sits on
 *  the collocation points (the standard construction), otherwise they get
 *  their own loop. tr is scratch storage, reshaped here when needed. */
inline LossParts loss_and_gradient(const SubdomainPinn& p, const BvpSpec& spec,
                                   std::span<double> grad, MlpTrace& tr) {
    bool shaped = tr.av.size() == p.params.layer_sizes.size();
    for (std::size_t l = 0; shaped && l < tr.av.size(); ++l)
        shaped = tr.av[l].size() == static_cast<std::size_t>(p.params.layer_sizes[l]);
    if (!shaped) tr.resize(p.params.layer_sizes);
    std::fill(grad.begin(), grad.end(), 0.0);
    LossParts parts{0.0, 0.0, 0.0, 0.0};
    const std::size_t M = p.colloc.size();
    if (M == 0) throw std::invalid_argument("loss_and_gradient: no collocation points");
    const bool with_data = p.weights.alpha_d > 0.0;
    if (with_data && !p.snapshot)
        throw std::invalid_argument("loss_and_gradient: data weight set without snapshot");
    const bool fused_data =
        with_data && p.snapshot->points.size() == M && p.snapshot->points == p.colloc;

    const double wr = p.weights.alpha_r, wb = p.weights.alpha_b, wd = p.weights.alpha_d;

    for (std::size_t j = 0; j < M; ++j) {
        const double xp = p.colloc[j];
        Jet2<double> nn = forward_trace(p.params, xp, p.net_cfg, tr);
        const Jet2<double> F = detail::transform_factor(p, xp);
        const Jet2<double> off = detail::transform_offset(p, xp);
        const Jet2<double> u = F * nn + off;
        const double r = -spec.nu * u.d2 + u.d1 - spec.source;
        parts.residual += r * r / M;
        Jet2<double> seed{0.0, wr * 2.0 * r / M, wr * 2.0 * r / M * -spec.nu};
        if (fused_data) {
            const double e = u.v - p.snapshot->values[j];
            parts.data += e * e / M;
            seed.v += wd * 2.0 * e / M;
        }
        backward_trace(p.params, p.net_cfg, tr, detail::pullback_through_factor(F, seed),
                       grad);
    }

    if (with_data && !fused_data) {
        const auto& snap = *p.snapshot;
        const std::size_t d = snap.points.size();
        for (std::size_t j = 0; j < d; ++j) {
            const double xp = snap.points[j];
            Jet2<double> nn = forward_trace(p.params, xp, p.net_cfg, tr);
            const Jet2<double> F = detail::transform_factor(p, xp);
            const Jet2<double> off = detail::transform_offset(p, xp);
            const double e = F.v * nn.v + off.v - snap.values[j];
            parts.data += e * e / d;
            Jet2<double> seed{wd * 2.0 * e / d, 0.0, 0.0};
            backward_trace(p.params, p.net_cfg, tr, detail::pullback_through_factor(F, seed),
                           grad);
        }
    }

    if (wb > 0.0) {
        const bool raw_sch = p.mdbc_literal && p.mode == DbcMode::Mixed;
        auto add_term = [&](double xp, double target, bool raw_nn) {
            Jet2<double> nn = forward_trace(p.params, xp, p.net_cfg, tr);
            const Jet2<double> F =
                raw_nn ? Jet2<double>{1.0, 0.0, 0.0} : detail::transform_factor(p, xp);
            const double offv = raw_nn ? 0.0 : detail::transform_offset(p, xp).v;
            const double b = F.v * nn.v + offv - target;
            parts.boundary += b * b;
            Jet2<double> seed{wb * 2.0 * b, 0.0, 0.0};
            backward_trace(p.params, p.net_cfg, tr,
                           detail::pullback_through_factor(F, seed), grad);
        };
        if (p.mode == DbcMode::Weak) {
            if (p.index == 1) add_term(p.gamma_left, 0.0, true);
            if (p.index == p.n_subdomains) add_term(p.gamma_right, 0.0, true);
        }
        if (p.n_subdomains > 1) {
            if (p.index > 1) add_term(p.gamma_left, p.g_left, raw_sch);
            if (p.index < p.n_subdomains) add_term(p.gamma_right, p.g_right, raw_sch);
        }
    }

    parts.total = wr * parts.residual + wb * parts.boundary + wd * parts.data;
    if (!std::isfinite(parts.total))
        throw NonFiniteLossError("loss turned non-finite: residual=" +
                                 std::to_string(parts.residual) +
                                 " boundary=" + std::to_string(parts.boundary) +
                                 " data=" + std::to_string(parts.data));
    return parts;
}

// -------------------------------------------------------------------- Adam

/** Plain Adam with bias correction; full-batch. Moments are owned by the
 *  caller so they can persist across Schwarz iterations (default) or be
 *  reset between them. */
struct AdamState {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;
    std::vector<double> m, v;

    void reset(std::size_t n) {
        t = 0;
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }

    void step(std::span<double> theta, std::span<const double> grad) {
        if (m.size() != theta.size()) reset(theta.size());
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

/** One row of the loss history CSV. */
struct EpochLoss {
    int schwarz_iter;
    int epoch;
    double total, residual, boundary, data;
};

/** Run n_epochs full-batch Adam steps on the subdomain loss. The loss from
 *  before each step is appended to history (if given). Throws
 *  NonFiniteLossError as soon as the loss stops being finite. */
inline void train_epochs(SubdomainPinn& p, const BvpSpec& spec, int n_epochs,
                         AdamState& adam, std::vector<EpochLoss>* history = nullptr,
                         int schwarz_iter = 0) {
    if (n_epochs < 1) throw std::invalid_argument("train_epochs: n_epochs must be >= 1");
    static thread_local MlpTrace tr;
    tr.resize(p.params.layer_sizes);
    std::vector<double> grad(p.params.theta.size());
    for (int e = 0; e < n_epochs; ++e) {
        LossParts parts = loss_and_gradient(p, spec, grad, tr);
        adam.step(p.params.theta, grad);
        if (history)
            history->push_back(
                {schwarz_iter, e, parts.total, parts.residual, parts.boundary, parts.data});
    }
}

}  // namespace spinn

#endif  // SPINN_PINN_HPP
