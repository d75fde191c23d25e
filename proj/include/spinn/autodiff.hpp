#ifndef SPINN_AUTODIFF_HPP
#define SPINN_AUTODIFF_HPP

/** \file autodiff.hpp
 *  Two differentiation tools sized for this problem:
 *
 *   - Jet2<T>: truncated second-order Taylor jets in the single spatial
 *     input, giving (u, u_x, u_xx) in one forward pass. The component type
 *     T may itself be a tape variable, so spatial derivatives remain
 *     differentiable with respect to network parameters.
 *
 *   - GradTape / Var: a classic reverse-mode tape over scalars. Every
 *     primitive records at most two parents with local partials; the
 *     backward pass walks the tape once in reverse.
 */

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace spinn {

// ---------------------------------------------------------------- reverse mode

class GradTape;

/** Handle to one scalar node on a GradTape. Cheap to copy; arithmetic on
 *  Vars appends nodes to the owning tape. */
class Var {
public:
    Var() : tape_(nullptr), idx_(0) {}
    Var(GradTape* tape, std::size_t idx) : tape_(tape), idx_(idx) {}

    double value() const;
    GradTape* tape() const { return tape_; }
    std::size_t index() const { return idx_; }

private:
    GradTape* tape_;
    std::size_t idx_;
};

class GradTape {
public:
    /** Record a leaf (parameter or constant). Leaves have no parents. */
    Var variable(double value) {
        nodes_.push_back(Node{npos, npos, 0.0, 0.0});
        values_.push_back(value);
        return Var(this, nodes_.size() - 1);
    }

    Var record(double value, std::size_t a, double da) {
        nodes_.push_back(Node{a, npos, da, 0.0});
        values_.push_back(value);
        return Var(this, nodes_.size() - 1);
    }

    Var record(double value, std::size_t a, double da, std::size_t b, double db) {
        nodes_.push_back(Node{a, b, da, db});
        values_.push_back(value);
        return Var(this, nodes_.size() - 1);
    }

    double value(std::size_t idx) const { return values_[idx]; }
    std::size_t size() const { return nodes_.size(); }

    void clear() {
        nodes_.clear();
        values_.clear();
    }

    /** Adjoints of the first n_params leaves with respect to `output`,
     *  seeding the output adjoint with 1. */
    std::vector<double> reverse_grad(const Var& output, std::size_t n_params) const {
        if (!std::isfinite(values_[output.index()]))
            throw std::runtime_error("reverse_grad: tape output is not finite");
        std::vector<double> adj(nodes_.size(), 0.0);
        adj[output.index()] = 1.0;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            const double a = adj[i];
            if (a == 0.0) continue;
            const Node& n = nodes_[i];
            if (n.a != npos) adj[n.a] += n.da * a;
            if (n.b != npos) adj[n.b] += n.db * a;
        }
        return std::vector<double>(adj.begin(), adj.begin() + n_params);
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    struct Node {
        std::size_t a, b;
        double da, db;
    };
    std::vector<Node> nodes_;
    std::vector<double> values_;
};

inline double Var::value() const { return tape_->value(idx_); }

inline Var operator+(const Var& x, const Var& y) {
    return x.tape()->record(x.value() + y.value(), x.index(), 1.0, y.index(), 1.0);
}
inline Var operator+(const Var& x, double c) {
    return x.tape()->record(x.value() + c, x.index(), 1.0);
}
inline Var operator+(double c, const Var& x) { return x + c; }

inline Var operator-(const Var& x, const Var& y) {
    return x.tape()->record(x.value() - y.value(), x.index(), 1.0, y.index(), -1.0);
}
inline Var operator-(const Var& x, double c) {
    return x.tape()->record(x.value() - c, x.index(), 1.0);
}
inline Var operator-(double c, const Var& x) {
    return x.tape()->record(c - x.value(), x.index(), -1.0);
}
inline Var operator-(const Var& x) {
    return x.tape()->record(-x.value(), x.index(), -1.0);
}

inline Var operator*(const Var& x, const Var& y) {
    return x.tape()->record(x.value() * y.value(), x.index(), y.value(), y.index(), x.value());
}
inline Var operator*(const Var& x, double c) {
    return x.tape()->record(x.value() * c, x.index(), c);
}
inline Var operator*(double c, const Var& x) { return x * c; }

inline Var operator/(const Var& x, const Var& y) {
    const double inv = 1.0 / y.value();
    return x.tape()->record(x.value() * inv, x.index(), inv, y.index(),
                            -x.value() * inv * inv);
}
inline Var operator/(const Var& x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, const Var& x) {
    const double inv = 1.0 / x.value();
    return x.tape()->record(c * inv, x.index(), -c * inv * inv);
}

inline Var exp(const Var& x) {
    const double e = std::exp(x.value());
    return x.tape()->record(e, x.index(), e);
}
inline Var tanh(const Var& x) {
    const double t = std::tanh(x.value());
    return x.tape()->record(t, x.index(), 1.0 - t * t);
}
inline Var sin(const Var& x) {
    return x.tape()->record(std::sin(x.value()), x.index(), std::cos(x.value()));
}

/** Plain-value accessor that works for both double and Var operands, so
 *  numeric code can branch on magnitudes without leaving generic context. */
inline double scalar_value(double x) { return x; }
inline double scalar_value(const Var& x) { return x.value(); }

// ---------------------------------------------------------------- forward jets

/** Truncated Taylor jet (value, first, second derivative) with respect to
 *  the one spatial coordinate. */
template <class T>
struct Jet2 {
    T v, d1, d2;
};

/** Jet of the identity function at x: (x, 1, 0). */
inline Jet2<double> jet2_lift(double x) { return {x, 1.0, 0.0}; }

template <class T>
Jet2<T> jet2_constant(T c, T zero) {
    return {c, zero, zero};
}

template <class T>
Jet2<T> operator+(const Jet2<T>& a, const Jet2<T>& b) {
    return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
template <class T>
Jet2<T> operator-(const Jet2<T>& a, const Jet2<T>& b) {
    return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
template <class T>
Jet2<T> operator-(const Jet2<T>& a) {
    return {-a.v, -a.d1, -a.d2};
}

/** Leibniz rule truncated at second order. */
template <class T>
Jet2<T> operator*(const Jet2<T>& a, const Jet2<T>& b) {
    return {a.v * b.v,
            a.d1 * b.v + a.v * b.d1,
            a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}

template <class T>
Jet2<T> operator*(double c, const Jet2<T>& a) {
    return {c * a.v, c * a.d1, c * a.d2};
}
template <class T>
Jet2<T> operator*(const Jet2<T>& a, double c) {
    return c * a;
}

template <class T>
Jet2<T> operator+(const Jet2<T>& a, double c) {
    return {a.v + c, a.d1, a.d2};
}
template <class T>
Jet2<T> operator+(double c, const Jet2<T>& a) {
    return a + c;
}
template <class T>
Jet2<T> operator-(const Jet2<T>& a, double c) {
    return {a.v - c, a.d1, a.d2};
}
template <class T>
Jet2<T> operator-(double c, const Jet2<T>& a) {
    return {c - a.v, -a.d1, -a.d2};
}

template <class T>
Jet2<T> operator/(const Jet2<T>& a, const Jet2<T>& b) {
    const T q = a.v / b.v;
    const T q1 = (a.d1 - q * b.d1) / b.v;
    const T q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.v;
    return {q, q1, q2};
}

/** Chain rule for a unary map with known first/second derivative at a.v. */
template <class T>
Jet2<T> jet2_chain(const Jet2<T>& a, T f, T f1, T f2) {
    return {f, f1 * a.d1, f2 * a.d1 * a.d1 + f1 * a.d2};
}

template <class T>
Jet2<T> exp(const Jet2<T>& a) {
    using std::exp;
    T e = exp(a.v);
    return jet2_chain(a, e, e, e);
}

template <class T>
Jet2<T> tanh(const Jet2<T>& a) {
    using std::tanh;
    T t = tanh(a.v);
    T sech2 = 1.0 - t * t;
    return jet2_chain(a, t, sech2, -2.0 * t * sech2);
}

template <class T>
Jet2<T> sin(const Jet2<T>& a) {
    using std::cos;
    using std::sin;
    T s = sin(a.v);
    return jet2_chain(a, s, cos(a.v), -s);
}

// ---------------------------------------------------------------- FD checking

/** Max relative disagreement between an analytic gradient and central
 *  finite differences of the loss, with a small-denominator guard. */
template <class LossFn>
double gradient_check(LossFn&& loss, const std::vector<double>& analytic_grad,
                      std::vector<double> theta, double step) {
    if (!(step > 0.0))
        throw std::invalid_argument("gradient_check: step must be positive");
    double max_rel = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double saved = theta[j];
        theta[j] = saved + step;
        const double fp = loss(theta);
        theta[j] = saved - step;
        const double fm = loss(theta);
        theta[j] = saved;
        const double fd = (fp - fm) / (2.0 * step);
        const double rel = std::abs(analytic_grad[j] - fd) / std::max(1e-8, std::abs(fd));
        if (rel > max_rel) max_rel = rel;
    }
    return max_rel;
}

}  // namespace spinn

#endif  // SPINN_AUTODIFF_HPP
