#ifndef SPINN_PROBLEM_HPP
#define SPINN_PROBLEM_HPP

/** \file problem.hpp
 *  Model problem definition for the steady 1D advection-diffusion equation
 *
 *      -nu * u''(x) + u'(x) - 1 = 0   on (0,1),   u(0) = u(1) = 0,
 *
 *  together with its closed-form solution, the overlapping domain
 *  decomposition geometry, and quasi-random collocation sampling.
 */

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinn {

/** Problem data for the two-point boundary value problem. The source term
 *  and both Dirichlet values are fixed by the model problem; they are kept
 *  as fields so downstream code never hard-codes them. */
struct BvpSpec {
    double nu;        ///< diffusion coefficient, nu = 1/Pe
    double peclet;    ///< Peclet number, Pe = 1/nu
    double source = 1.0;
    double bc_left = 0.0;
    double bc_right = 0.0;

    static BvpSpec from_peclet(double pe) {
        if (!(pe > 0.0) || !std::isfinite(pe))
            throw std::invalid_argument("BvpSpec: peclet must be positive and finite");
        return BvpSpec{1.0 / pe, pe};
    }
    static BvpSpec from_nu(double nu_) {
        if (!(nu_ > 0.0) || !std::isfinite(nu_))
            throw std::invalid_argument("BvpSpec: nu must be positive and finite");
        return BvpSpec{nu_, 1.0 / nu_};
    }
};

/** Closed-form solution, written in an exponentially rescaled form so that
 *  no intermediate overflows even at Pe ~ 1e9:
 *
 *      u(x) = x - e^{(x-1)/nu} * (1 - e^{-x/nu}) / (1 - e^{-1/nu}).
 */
inline double analytic_solution(const BvpSpec& spec, double x) {
    if (x < 0.0 || x > 1.0)
        throw std::domain_error("analytic_solution: x outside [0,1]");
    const double nu = spec.nu;
    const double denom = 1.0 - std::exp(-1.0 / nu);
    return x - std::exp((x - 1.0) / nu) * (1.0 - std::exp(-x / nu)) / denom;
}

/** First and second derivatives of the closed form, same rescaling. */
struct AnalyticDerivs {
    double u, ux, uxx;
};

inline AnalyticDerivs analytic_derivatives(const BvpSpec& spec, double x) {
    if (x < 0.0 || x > 1.0)
        throw std::domain_error("analytic_derivatives: x outside [0,1]");
    const double nu = spec.nu;
    const double denom = 1.0 - std::exp(-1.0 / nu);
    // d/dx [e^{(x-1)/nu}(1 - e^{-x/nu})] = (1/nu) e^{(x-1)/nu}; the e^{-x/nu}
    // parts cancel, which is what keeps the expression overflow-safe.
    const double g = std::exp((x - 1.0) / nu) / denom;
    const double u = x - g * (1.0 - std::exp(-x / nu));
    return {u, 1.0 - g / nu, -g / (nu * nu)};
}

/** Strong-form residual -nu*u_xx + u_x - source evaluated from point data. */
inline double strong_residual(double /*u*/, double u_x, double u_xx, const BvpSpec& spec) {
    return -spec.nu * u_xx + u_x - spec.source;
}

/** Overlapping decomposition of (0,1) into n_d equal-width subdomains.
 *  gammas holds the 2*n_d endpoints: subdomain i (1-based) spans
 *  [gammas[2i-2], gammas[2i-1]]. */
struct Decomposition {
    int n_d;
    double p_o;
    double s_d;  ///< width of every subdomain
    double s_o;  ///< width of the overlap between neighbours
    std::vector<double> gammas;

    double left(int i) const { return gammas[2 * (i - 1)]; }
    double right(int i) const { return gammas[2 * (i - 1) + 1]; }
};

/** Build the decomposition from the subdomain count and fractional overlap:
 *  s_d = 1/(n_d(1-p_o)+p_o), s_o = p_o*s_d, and left endpoints at
 *  (i-1)(s_d - s_o). The last endpoint must land on 1 within 1e-12 and is
 *  then snapped to exactly 1 so boundary conditions sit on the boundary. */
inline Decomposition decompose(int n_d, double p_o) {
    if (n_d < 1)
        throw std::invalid_argument("decompose: n_d must be >= 1");
    if (!(p_o >= 0.0) || p_o >= 1.0)
        throw std::invalid_argument("decompose: p_o must lie in [0,1)");
    Decomposition d;
    d.n_d = n_d;
    d.p_o = (n_d == 1) ? 0.0 : p_o;
    d.s_d = 1.0 / (n_d * (1.0 - d.p_o) + d.p_o);
    d.s_o = d.p_o * d.s_d;
    d.gammas.resize(2 * n_d);
    for (int i = 1; i <= n_d; ++i) {
        d.gammas[2 * i - 2] = (i - 1) * (d.s_d - d.s_o);
        d.gammas[2 * i - 1] = d.gammas[2 * i - 2] + d.s_d;
    }
    d.gammas[0] = 0.0;
    const double last = d.gammas[2 * n_d - 1];
    if (std::abs(last - 1.0) > 1e-12)
        throw std::logic_error("decompose: endpoint identity violated: gamma_last = " +
                               std::to_string(last));
    d.gammas[2 * n_d - 1] = 1.0;
    return d;
}

/** Global collocation points plus the per-subdomain sublists. A point in an
 *  overlap region appears in the list of every subdomain containing it. */
struct CollocationSet {
    std::vector<double> global_points;
    std::vector<std::vector<double>> per_subdomain;
};

namespace detail {
inline std::uint32_t reverse_bits32(std::uint32_t v) {
    v = (v >> 16) | (v << 16);
    v = ((v >> 8) & 0x00ff00ffu) | ((v & 0x00ff00ffu) << 8);
    v = ((v >> 4) & 0x0f0f0f0fu) | ((v & 0x0f0f0f0fu) << 4);
    v = ((v >> 2) & 0x33333333u) | ((v & 0x33333333u) << 2);
    v = ((v >> 1) & 0x55555555u) | ((v & 0x55555555u) << 1);
    return v;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
}  // namespace detail

/** i-th element (1-based) of the base-2 van der Corput sequence, optionally
 *  digit-XOR-scrambled. seed = 0 yields the plain sequence 1/2, 1/4, 3/4, ...
 */
inline double van_der_corput(std::uint64_t index, std::uint64_t seed = 0) {
    std::uint32_t bits = detail::reverse_bits32(static_cast<std::uint32_t>(index));
    if (seed != 0)
        bits ^= static_cast<std::uint32_t>(detail::splitmix64(seed) >> 32);
    if (bits == 0) bits = 1;  // keep the value inside (0,1) for any scramble
    return static_cast<double>(bits) * 0x1.0p-32;
}

/** Draw m quasi-random points on (0,1) and split them among the subdomains
 *  by closed-interval membership. */
inline CollocationSet sample_collocation(int m, std::uint64_t seed, const Decomposition& decomp) {
    if (m < 1)
        throw std::invalid_argument("sample_collocation: m must be >= 1");
    CollocationSet set;
    set.global_points.reserve(m);
    for (int i = 1; i <= m; ++i)
        set.global_points.push_back(van_der_corput(static_cast<std::uint64_t>(i), seed));
    set.per_subdomain.resize(decomp.n_d);
    for (int i = 1; i <= decomp.n_d; ++i) {
        const double lo = decomp.left(i), hi = decomp.right(i);
        for (double x : set.global_points)
            if (x >= lo && x <= hi) set.per_subdomain[i - 1].push_back(x);
    }
    return set;
}

}  // namespace spinn

#endif  // SPINN_PROBLEM_HPP
