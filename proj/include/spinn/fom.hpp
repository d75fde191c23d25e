#ifndef SPINN_FOM_HPP
#define SPINN_FOM_HPP

/** \file fom.hpp
 *  Finite-difference solvers for the model problem on an interval with
 *  Dirichlet data at both ends. Two discretizations of the advection term:
 *
 *   central  second-order centered difference; becomes oscillatory once the
 *            cell Peclet number h*Pe exceeds 2
 *   upwind2  second-order backward (upwind) difference, monotone at high Pe
 *
 *  The diffusion term is always the standard three-point stencil. The first
 *  interior node has no second upwind neighbour and falls back to the
 *  first-order backward difference there.
 */

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinn/problem.hpp"

namespace spinn {

enum class Scheme { Central, Upwind2 };

inline std::string to_string(Scheme s) {
    return s == Scheme::Central ? "central" : "upwind2";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "central") return Scheme::Central;
    if (s == "upwind2") return Scheme::Upwind2;
    throw std::invalid_argument("unknown scheme: " + s);
}

/** Default scheme rule: switch to the upwind discretization when the cell
 *  Peclet number makes the central one oscillatory. */
inline Scheme pick_scheme(const BvpSpec& spec, double h) {
    return (h * spec.peclet > 2.0) ? Scheme::Upwind2 : Scheme::Central;
}

/** Finite-difference solution on n+1 uniform nodes over [a,b]. */
struct FomSolution {
    double a = 0.0, b = 1.0;
    int n = 0;  ///< number of cells; nodes are a + i*(b-a)/n
    Scheme scheme = Scheme::Central;
    std::vector<double> u;

    double h() const { return (b - a) / n; }
    double x(int i) const { return a + i * h(); }
};

namespace detail {

/** Tridiagonal Thomas solve; diag/lower/upper indexed by row. */
inline std::vector<double> thomas(std::vector<double> lower, std::vector<double> diag,
                                  std::vector<double> upper, std::vector<double> rhs) {
    const std::size_t m = diag.size();
    for (std::size_t i = 1; i < m; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> x(m);
    x[m - 1] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;)
        x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
    return x;
}

/** Banded Gaussian elimination with partial pivoting. The matrix has lower
 *  bandwidth kl and upper bandwidth ku; pivoting can fill in up to kl extra
 *  superdiagonals, so storage holds kl+ku+kl+1 diagonals. Entry (i,j) lives
 *  at band[(kl+ku+i-j)*m + j]. Used for the upwind scheme, whose rows are
 *  not diagonally dominant. */
class BandedSolver {
public:
    BandedSolver(std::size_t m, int kl, int ku)
        : m_(m), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), band_(width_ * m, 0.0) {}

    double& at(std::size_t i, std::size_t j) {
        return band_[(kl_ + ku_ + i - j) * m_ + j];
    }

    std::vector<double> solve(std::vector<double> rhs) {
        const int reach = kl_ + ku_;  // widest row after fill-in
        for (std::size_t j = 0; j < m_; ++j) {
            std::size_t piv = j;
            double best = std::abs(at(j, j));
            for (std::size_t i = j + 1; i < std::min(m_, j + kl_ + 1); ++i)
                if (std::abs(at(i, j)) > best) best = std::abs(at(i, j)), piv = i;
            if (best == 0.0) throw std::runtime_error("BandedSolver: singular matrix");
            const std::size_t jend = std::min(m_ - 1, j + reach);
            if (piv != j) {
                for (std::size_t c = j; c <= jend; ++c) std::swap(at(piv, c), at(j, c));
                std::swap(rhs[piv], rhs[j]);
            }
            for (std::size_t i = j + 1; i < std::min(m_, j + kl_ + 1); ++i) {
                const double f = at(i, j) / at(j, j);
                if (f == 0.0) continue;
                for (std::size_t c = j + 1; c <= jend; ++c) at(i, c) -= f * at(j, c);
                at(i, j) = 0.0;
                rhs[i] -= f * rhs[j];
            }
        }
        std::vector<double> x(m_);
        for (std::size_t i = m_; i-- > 0;) {
            double s = rhs[i];
            const std::size_t jend = std::min(m_ - 1, i + reach);
            for (std::size_t c = i + 1; c <= jend; ++c) s -= at(i, c) * x[c];
            x[i] = s / at(i, i);
        }
        return x;
    }

private:
    std::size_t m_;
    int kl_, ku_;
    std::size_t width_;
    std::vector<double> band_;
};

}  // namespace detail

/** Solve the BVP on [a,b] with n cells and Dirichlet values bc_left/bc_right
 *  at the interval endpoints (which are Schwarz boundary values when the
 *  interval is a subdomain). */
inline FomSolution fom_solve(const BvpSpec& spec, double a, double b, int n,
                             double bc_left, double bc_right, Scheme scheme) {
    if (n < 2) throw std::invalid_argument("fom_solve: need at least 2 cells");
    if (!(b > a)) throw std::invalid_argument("fom_solve: empty interval");
    const double h = (b - a) / n;
    const double nu = spec.nu;
    const std::size_t m = n - 1;  // interior unknowns

    FomSolution sol;
    sol.a = a;
    sol.b = b;
    sol.n = n;
    sol.scheme = scheme;
    sol.u.assign(n + 1, 0.0);
    sol.u.front() = bc_left;
    sol.u.back() = bc_right;

    if (scheme == Scheme::Central) {
        // -nu*(u_{j-1}-2u_j+u_{j+1})/h^2 + (u_{j+1}-u_{j-1})/(2h) = source
        const double lo = -nu / (h * h) - 1.0 / (2.0 * h);
        const double di = 2.0 * nu / (h * h);
        const double up = -nu / (h * h) + 1.0 / (2.0 * h);
        std::vector<double> lower(m, lo), diag(m, di), upper(m, up), rhs(m, spec.source);
        rhs.front() -= lo * bc_left;
        rhs.back() -= up * bc_right;
        auto x = detail::thomas(std::move(lower), std::move(diag), std::move(upper),
                                std::move(rhs));
        std::copy(x.begin(), x.end(), sol.u.begin() + 1);
        return sol;
    }

    // upwind2: advection by (3u_j - 4u_{j-1} + u_{j-2})/(2h), except the
    // first interior node which uses (u_1 - u_0)/h.
    detail::BandedSolver bs(m, 2, 1);
    std::vector<double> rhs(m, spec.source);
    const double d2 = nu / (h * h);
    for (std::size_t j = 0; j < m; ++j) {
        double diag = 2.0 * d2, west = -d2, east = -d2, west2 = 0.0;
        if (j == 0) {
            diag += 1.0 / h;
            rhs[j] += bc_left / h + d2 * bc_left;
        } else {
            diag += 1.5 / h;
            west += -2.0 / h;
            west2 = 0.5 / h;
            if (j == 1) rhs[j] -= bc_left * 0.5 / h;
        }
        if (j == m - 1) rhs[j] += d2 * bc_right;
        bs.at(j, j) = diag;
        if (j + 1 < m) bs.at(j, j + 1) = east;
        if (j >= 1) bs.at(j, j - 1) = west;
        if (j >= 2) bs.at(j, j - 2) = west2;
    }
    auto x = bs.solve(std::move(rhs));
    std::copy(x.begin(), x.end(), sol.u.begin() + 1);
    return sol;
}

/** Convenience overload on the full domain (0,1) with the system BCs. */
inline FomSolution fom_solve(const BvpSpec& spec, int n, Scheme scheme) {
    return fom_solve(spec, 0.0, 1.0, n, spec.bc_left, spec.bc_right, scheme);
}

/** Piecewise-linear interpolation; x may sit on [a,b] only. */
inline double interpolate(const FomSolution& sol, double x) {
    constexpr double slack = 1e-12;
    if (x < sol.a - slack || x > sol.b + slack)
        throw std::domain_error("interpolate: x outside the solution interval");
    const double h = sol.h();
    double t = (x - sol.a) / h;
    int i = static_cast<int>(t);
    i = std::clamp(i, 0, sol.n - 1);
    const double w = t - i;
    return (1.0 - w) * sol.u[i] + w * sol.u[i + 1];
}

/** Ground-truth grid: h = 1/1024 on the full domain, scheme by the cell
 *  Peclet rule. */
inline FomSolution make_reference(const BvpSpec& spec, int n = 1024) {
    return fom_solve(spec, n, pick_scheme(spec, 1.0 / n));
}

/** Snapshot FOM data at given points: the global upwind solve on 1024 evenly
 *  spaced cells, linearly interpolated. */
struct Snapshot {
    std::vector<double> points;
    std::vector<double> values;
};

inline Snapshot make_snapshot(const BvpSpec& spec, const std::vector<double>& points,
                              int n = 1024) {
    FomSolution sol = fom_solve(spec, n, Scheme::Upwind2);
    Snapshot snap;
    snap.points = points;
    snap.values.reserve(points.size());
    for (double x : points) snap.values.push_back(interpolate(sol, x));
    return snap;
}

/** (x,u) CSV dump, header included. */
inline void dump_solution_csv(const FomSolution& sol, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_solution_csv: cannot open " + path);
    out.precision(17);
    out << "x,u\n";
    for (int i = 0; i <= sol.n; ++i) out << sol.x(i) << ',' << sol.u[i] << '\n';
}

}  // namespace spinn

#endif  // SPINN_FOM_HPP
