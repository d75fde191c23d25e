#ifndef SPINN_NETWORK_HPP
#define SPINN_NETWORK_HPP

/** \file network.hpp
 *  Fully-connected MLP with swish activations on the hidden layers and an
 *  affine output head (a `linear_output` switch also exposes the variant
 *  that activates the output layer). Evaluation is provided in three forms:
 *
 *   1. forward_jet<S>: generic over the parameter scalar S (double or Var),
 *      propagating Jet2 spatial jets. This is the reference path used by
 *      the tape-based gradient and by the unit tests.
 *   2. forward_value: plain double evaluation of the network value.
 *   3. forward_trace / backward_trace: a hand-written adjoint of the jet
 *      forward pass specialized to double. Training uses this path; the
 *      generic tape is 1-2 orders of magnitude slower because it records
 *      every scalar primitive, which matters when each Schwarz iteration
 *      runs ~1e3 epochs over ~1e3 collocation points on one core.
 */

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "spinn/autodiff.hpp"

namespace spinn {

struct NetConfig {
    double mu = 1.0;            ///< swish steepness sigma(z) = z/(1+e^{-mu z})
    bool linear_output = true;  ///< affine final layer (false: activate it too)
};

/** Flat parameter vector plus shape metadata. Layout is layer-major: for
 *  each layer, all weights (row-major, fan_out x fan_in) then all biases. */
struct MlpParams {
    std::vector<int> layer_sizes;
    std::vector<double> theta;
    std::uint64_t seed = 0;
};

inline std::size_t theta_count(const std::vector<int>& sizes) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        n += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    return n;
}

/** Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
 *  Randomness comes from mt19937_64 with explicit bit scaling so the stream
 *  is identical across standard libraries. */
inline MlpParams init_params(const std::vector<int>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2 || sizes.front() != 1 || sizes.back() != 1)
        throw std::invalid_argument("init_params: layer_sizes must run from 1 to 1");
    for (int n : sizes)
        if (n < 1) throw std::invalid_argument("init_params: layer sizes must be positive");
    MlpParams p;
    p.layer_sizes = sizes;
    p.seed = seed;
    p.theta.assign(theta_count(sizes), 0.0);
    std::mt19937_64 rng(seed);
    auto unit = [&rng]() {  // uniform in [0,1) from the top 53 bits
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l], fan_out = sizes[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (int j = 0; j < fan_out * fan_in; ++j)
            p.theta[off + j] = (2.0 * unit() - 1.0) * bound;
        off += static_cast<std::size_t>(fan_out) * fan_in + fan_out;  // biases stay 0
    }
    return p;
}

// ------------------------------------------------------------------ swish

/** Numerically stable logistic function, generic over double/Var. */
template <class T>
T sigmoid(const T& z) {
    using std::exp;
    if (scalar_value(z) >= 0.0) {
        return 1.0 / (1.0 + exp(-z));
    }
    T e = exp(z);
    return e / (1.0 + e);
}

/** swish value sigma(z) = z * sigmoid(mu z). */
template <class T>
T swish(const T& z, double mu = 1.0) {
    return z * sigmoid(mu * z);
}

/** swish derivatives up to third order, expressed through s = sigmoid(mu z):
 *  s'   = mu s(1-s)
 *  s''  = mu^2 s(1-s)(1-2s)
 *  s''' = mu^3 s(1-s)(1-6s+6s^2)
 *  sigma = z s;  sigma' = s + z s';  sigma'' = 2s' + z s'';  sigma''' = 3s'' + z s'''.
 */
struct SwishDerivs {
    double f, f1, f2, f3;
};

inline SwishDerivs swish_derivs(double z, double mu) {
    const double s = sigmoid(mu * z);
    const double s1 = mu * s * (1.0 - s);
    const double s2 = mu * s1 * (1.0 - 2.0 * s);
    const double s3 = mu * mu * mu * s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
    return {z * s, s + z * s1, 2.0 * s1 + z * s2, 3.0 * s2 + z * s3};
}

template <class T>
Jet2<T> swish(const Jet2<T>& z, double mu = 1.0) {
    using std::exp;
    T s = sigmoid(mu * z.v);
    T s1 = mu * (s * (1.0 - s));
    T s2 = mu * (s1 * (1.0 - 2.0 * s));
    return jet2_chain(z, z.v * s, s + z.v * s1, 2.0 * s1 + z.v * s2);
}

// ------------------------------------------------------------------ forward

/** Reference forward pass, generic over the parameter scalar S. The spatial
 *  argument is a jet whose components live in S arithmetic, so with S = Var
 *  the returned (u, u_x, u_xx) are all differentiable on the tape. */
template <class S>
Jet2<S> forward_jet(std::span<const S> theta, const std::vector<int>& sizes,
                    const Jet2<S>& x, const NetConfig& cfg = {}) {
    std::vector<Jet2<S>> act{x};
    std::vector<Jet2<S>> next;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l], fan_out = sizes[l + 1];
        next.clear();
        next.reserve(fan_out);
        for (int j = 0; j < fan_out; ++j) {
            Jet2<S> z = jet2_constant<S>(theta[off + fan_out * fan_in + j], x.v * 0.0);
            for (int i = 0; i < fan_in; ++i) {
                const S& w = theta[off + static_cast<std::size_t>(j) * fan_in + i];
                z.v = z.v + w * act[i].v;
                z.d1 = z.d1 + w * act[i].d1;
                z.d2 = z.d2 + w * act[i].d2;
            }
            const bool last = (l + 2 == sizes.size());
            next.push_back(last && cfg.linear_output ? z : swish(z, cfg.mu));
        }
        act.swap(next);
        off += static_cast<std::size_t>(fan_out) * fan_in + fan_out;
    }
    return act[0];
}

inline Jet2<double> forward_jet(const MlpParams& p, double x, const NetConfig& cfg = {}) {
    return forward_jet<double>(std::span<const double>(p.theta), p.layer_sizes,
                               jet2_lift(x), cfg);
}

/** Value-only evaluation. */
inline double forward_value(const MlpParams& p, double x, const NetConfig& cfg = {}) {
    return forward_jet(p, x, cfg).v;
}

// ------------------------------------------------ fast trace-based gradient

/** Saved forward state for one evaluation point: pre-activation jets z and
 *  post-activation jets a for every layer. Reused across points and epochs
 *  to avoid reallocation. */
struct MlpTrace {
    // [layer][neuron], layer 0 holds the input jet
    std::vector<std::vector<double>> av, a1, a2;       // activations
    std::vector<std::vector<double>> zv, z1, z2;       // pre-activations
    std::vector<std::vector<double>> bv, b1, b2;       // adjoint scratch

    void resize(const std::vector<int>& sizes) {
        const std::size_t L = sizes.size();
        for (auto* v : {&av, &a1, &a2, &zv, &z1, &z2, &bv, &b1, &b2}) {
            v->resize(L);
            for (std::size_t l = 0; l < L; ++l) (*v)[l].assign(sizes[l], 0.0);
        }
    }
};

/** Forward pass recording everything backward_trace needs. Returns the
 *  output jet (u, u_x, u_xx). */
inline Jet2<double> forward_trace(const MlpParams& p, double x, const NetConfig& cfg,
                                  MlpTrace& tr) {
    const auto& sizes = p.layer_sizes;
    tr.av[0][0] = x;
    tr.a1[0][0] = 1.0;
    tr.a2[0][0] = 0.0;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l], fan_out = sizes[l + 1];
        const double* W = p.theta.data() + off;
        const double* b = W + static_cast<std::size_t>(fan_out) * fan_in;
        const bool activated = (l + 2 < sizes.size()) || !cfg.linear_output;
        for (int j = 0; j < fan_out; ++j) {
            double zv = b[j], z1 = 0.0, z2 = 0.0;
            const double* wrow = W + static_cast<std::size_t>(j) * fan_in;
            for (int i = 0; i < fan_in; ++i) {
                zv += wrow[i] * tr.av[l][i];
                z1 += wrow[i] * tr.a1[l][i];
                z2 += wrow[i] * tr.a2[l][i];
            }
            tr.zv[l + 1][j] = zv;
            tr.z1[l + 1][j] = z1;
            tr.z2[l + 1][j] = z2;
            if (activated) {
                const SwishDerivs d = swish_derivs(zv, cfg.mu);
                tr.av[l + 1][j] = d.f;
                tr.a1[l + 1][j] = d.f1 * z1;
                tr.a2[l + 1][j] = d.f2 * z1 * z1 + d.f1 * z2;
            } else {
                tr.av[l + 1][j] = zv;
                tr.a1[l + 1][j] = z1;
                tr.a2[l + 1][j] = z2;
            }
        }
        off += static_cast<std::size_t>(fan_out) * fan_in + fan_out;
    }
    const std::size_t L = sizes.size() - 1;
    return {tr.av[L][0], tr.a1[L][0], tr.a2[L][0]};
}

/** Accumulate d(seed.v*u + seed.d1*u_x + seed.d2*u_xx)/dtheta into grad,
 *  where (u, u_x, u_xx) is the jet produced by the matching forward_trace.
 *  The adjoint runs over the three jet components simultaneously; the
 *  activation backward needs swish derivatives up to third order because
 *  a_xx depends on sigma''(z) and z itself depends on the weights. */
inline void backward_trace(const MlpParams& p, const NetConfig& cfg, MlpTrace& tr,
                           const Jet2<double>& seed, std::span<double> grad) {
    const auto& sizes = p.layer_sizes;
    const std::size_t L = sizes.size() - 1;
    for (std::size_t l = 0; l <= L; ++l) {
        std::fill(tr.bv[l].begin(), tr.bv[l].end(), 0.0);
        std::fill(tr.b1[l].begin(), tr.b1[l].end(), 0.0);
        std::fill(tr.b2[l].begin(), tr.b2[l].end(), 0.0);
    }
    tr.bv[L][0] = seed.v;
    tr.b1[L][0] = seed.d1;
    tr.b2[L][0] = seed.d2;

    std::size_t off = p.theta.size();
    for (std::size_t l = L; l-- > 0;) {
        const int fan_in = sizes[l], fan_out = sizes[l + 1];
        off -= static_cast<std::size_t>(fan_out) * fan_in + fan_out;
        const double* W = p.theta.data() + off;
        double* gW = grad.data() + off;
        double* gb = gW + static_cast<std::size_t>(fan_out) * fan_in;
        const bool activated = (l + 1 < L) || !cfg.linear_output;
        for (int j = 0; j < fan_out; ++j) {
            const double av_bar = tr.bv[l + 1][j];
            const double a1_bar = tr.b1[l + 1][j];
            const double a2_bar = tr.b2[l + 1][j];
            double zv_bar, z1_bar, z2_bar;
            if (activated) {
                const double zv = tr.zv[l + 1][j];
                const double z1 = tr.z1[l + 1][j];
                const double z2 = tr.z2[l + 1][j];
                const SwishDerivs d = swish_derivs(zv, cfg.mu);
                zv_bar = av_bar * d.f1 + a1_bar * d.f2 * z1 +
                         a2_bar * (d.f3 * z1 * z1 + d.f2 * z2);
                z1_bar = a1_bar * d.f1 + a2_bar * 2.0 * d.f2 * z1;
                z2_bar = a2_bar * d.f1;
            } else {
                zv_bar = av_bar;
                z1_bar = a1_bar;
                z2_bar = a2_bar;
            }
            gb[j] += zv_bar;
            const double* wrow = W + static_cast<std::size_t>(j) * fan_in;
            double* gwrow = gW + static_cast<std::size_t>(j) * fan_in;
            for (int i = 0; i < fan_in; ++i) {
                gwrow[i] += zv_bar * tr.av[l][i] + z1_bar * tr.a1[l][i] + z2_bar * tr.a2[l][i];
                tr.bv[l][i] += wrow[i] * zv_bar;
                tr.b1[l][i] += wrow[i] * z1_bar;
                tr.b2[l][i] += wrow[i] * z2_bar;
            }
        }
    }
}

}  // namespace spinn

#endif  // SPINN_NETWORK_HPP
