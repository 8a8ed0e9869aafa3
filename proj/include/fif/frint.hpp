#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fif/errors.hpp"
#include "fif/fif_core.hpp"

namespace fif {

// ---------------------------------------------------------------------------
// Orders and quadrature plumbing
// ---------------------------------------------------------------------------

struct FracOrder {
    std::vector<double> beta;

    void validate() const {
        if (beta.empty()) throw ValidationError("FracOrder: empty order list");
        for (double b : beta)
            if (!(b > 0.0)) throw ValidationError("FracOrder: every order must be > 0");
    }
    int q() const { return static_cast<int>(beta.size()); }
};

struct QuadratureSpec {
    int panels = 64;      // per-axis panel count at the coarsest level
    int refinements = 2;  // extra levels beyond the base
    int factor = 2;       // panel multiplier per level

    void validate() const {
        if (panels < 4) throw ValidationError("QuadratureSpec: panels must be >= 4");
        if (refinements < 0 || factor < 2)
            throw ValidationError("QuadratureSpec: refinements >= 0, factor >= 2");
    }
};

namespace detail {

inline bool integer_exponent(double b) { return std::abs(b - std::round(b)) < 1e-12; }

} // namespace detail

/// Quadrature weights w_j on the uniform nodes t_j = j*L/panels such that
///   sum_j w_j g(t_j) = integral_0^L (X - t)^(beta-1) g(t) dt
/// exactly whenever g is piecewise linear between the nodes. Requires X >= L
/// unless beta is an integer (polynomial kernel; sign handled by pow).
inline std::vector<double> kernel_weights(double L, double X, double beta, int panels) {
    if (!(beta > 0.0)) throw ValidationError("kernel_weights: beta must be > 0");
    if (panels < 1) throw ValidationError("kernel_weights: panels must be >= 1");
    if (L < 0.0) throw ValidationError("kernel_weights: negative interval length");
    std::vector<double> w(static_cast<std::size_t>(panels) + 1, 0.0);
    if (L == 0.0) return w;
    if (X < L - 1e-15 && !detail::integer_exponent(beta))
        throw NumericalError("kernel_weights: anchor inside interval with non-integer order");
    const double h = L / panels;
    for (int j = 0; j < panels; ++j) {
        const double t0 = j * h, t1 = (j + 1) * h;
        const double s1 = X - t0, s2 = X - t1; // s1 > s2; s2 >= 0 when X >= L
        const double i0 = (std::pow(s1, beta) - std::pow(s2, beta)) / beta;
        const double i1 =
            X * i0 - (std::pow(s1, beta + 1.0) - std::pow(s2, beta + 1.0)) / (beta + 1.0);
        w[static_cast<std::size_t>(j)] += (t1 * i0 - i1) / h;
        w[static_cast<std::size_t>(j) + 1] += (i1 - t0 * i0) / h;
    }
    return w;
}

namespace detail {

/// One axis of a tensor-product quadrature: weights against integrand
/// arguments (weights already carry kernel moments and any coefficient).
struct AxisQuad {
    std::vector<double> w;
    std::vector<double> arg;
};

/// sum over the tensor grid of (prod_k w_k) * g(arg_1, ..., arg_q).
template <typename G>
double tensor_apply(std::span<const AxisQuad> axes, G&& g) {
    const std::size_t q = axes.size();
    for (const auto& a : axes)
        if (a.w.empty()) return 0.0;
    std::vector<std::size_t> idx(q, 0);
    std::vector<double> pt(q);
    // prefix[k] = product of weights of axes < k at current idx
    std::vector<double> prefix(q + 1, 1.0);
    for (std::size_t k = 0; k < q; ++k) {
        pt[k] = axes[k].arg[0];
        prefix[k + 1] = prefix[k] * axes[k].w[0];
    }
    double acc = 0.0;
    for (;;) {
        acc += prefix[q] * g(std::span<const double>(pt));
        std::size_t k = q;
        while (k-- > 0) {
            if (++idx[k] < axes[k].w.size()) break;
            idx[k] = 0;
            if (k == 0) return acc;
        }
        for (std::size_t kk = k; kk < q; ++kk) {
            pt[kk] = axes[kk].arg[idx[kk]];
            prefix[kk + 1] = prefix[kk] * axes[kk].w[idx[kk]];
        }
    }
}

inline double gamma_product(const FracOrder& beta) {
    double g = 1.0;
    for (double b : beta.beta) g *= std::tgamma(b);
    return g;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Mixed Riemann-Liouville integral
// ---------------------------------------------------------------------------

/// (prod_k 1/Gamma(beta_k)) * iterated integral over [0,x_1] x ... x [0,x_q]
/// of prod_k (x_k - t_k)^(beta_k - 1) * g(t). The integrand g is sampled on
/// the per-axis quadrature nodes and treated as multilinear between them; the
/// singular kernel is integrated in closed form per panel.
template <typename G>
    requires std::invocable<G&, std::span<const double>>
double mixed_rl(G&& g, const FracOrder& beta, std::span<const double> x,
                std::span<const int> panels) {
    beta.validate();
    const int q = beta.q();
    if (static_cast<int>(x.size()) != q || static_cast<int>(panels.size()) != q)
        throw ValidationError("mixed_rl: point/order/panel dimension mismatch");
    std::vector<detail::AxisQuad> axes(static_cast<std::size_t>(q));
    for (int k = 0; k < q; ++k) {
        const double xk = x[static_cast<std::size_t>(k)];
        if (xk < 0.0) throw ValidationError("mixed_rl: upper limit below the base point 0");
        const int p = panels[static_cast<std::size_t>(k)];
        if (p < 4) throw ValidationError("mixed_rl: panel count must be >= 4");
        auto& a = axes[static_cast<std::size_t>(k)];
        a.w = kernel_weights(xk, xk, beta.beta[static_cast<std::size_t>(k)], p);
        a.arg.resize(a.w.size());
        for (std::size_t j = 0; j < a.arg.size(); ++j)
            a.arg[j] = xk * static_cast<double>(j) / static_cast<double>(p);
        if (xk == 0.0) return 0.0;
    }
    return detail::tensor_apply(std::span<const detail::AxisQuad>(axes), g) /
           detail::gamma_product(beta);
}

template <typename G>
    requires std::invocable<G&, std::span<const double>>
double mixed_rl(G&& g, const FracOrder& beta, std::span<const double> x, int panels) {
    std::vector<int> p(static_cast<std::size_t>(beta.q()), panels);
    return mixed_rl(std::forward<G>(g), beta, x, std::span<const int>(p));
}

inline double mixed_rl(const Field& f, const FracOrder& beta, std::span<const double> x,
                       int panels) {
    return mixed_rl([&](std::span<const double> t) { return f.eval(t); }, beta, x, panels);
}

/// Unit-coordinate adapter for a sampled surface: frint works on the unit
/// hypercube throughout (base point 0 on every axis).
inline auto surface_fn(const SampledSurface& s) {
    return [&s](std::span<const double> t) { return s.eval(t); };
}

// ---------------------------------------------------------------------------
// Self-referential identity pieces
// ---------------------------------------------------------------------------

/// The z-coefficient of the transported integral: delta * prod_k a_k^beta_k.
/// Negative slopes demand an integer order (no real branch otherwise).
inline double frac_coefficient(std::span<const AffineMap> maps, const FracOrder& beta,
                               double delta) {
    beta.validate();
    if (static_cast<int>(maps.size()) != beta.q())
        throw ValidationError("frac_coefficient: map/order dimension mismatch");
    double c = delta;
    for (int k = 0; k < beta.q(); ++k) {
        const double a = maps[static_cast<std::size_t>(k)].slope();
        const double b = beta.beta[static_cast<std::size_t>(k)];
        if (a < 0.0 && !detail::integer_exponent(b))
            throw NumericalError("frac_coefficient: negative slope with non-integer order");
        c *= std::pow(a, b);
    }
    return c;
}

/// The inhomogeneous part of the transported integral over one cell:
/// q+1 terms obtained by telescoping each axis integral at the cell image's
/// lower end, the first q integrating the built surface over mixed ranges
/// and the last integrating the cell's blend field, scaled by prod a^beta.
/// Negative slopes are accepted only for integer orders.
inline double bhat(const SampledSurface& A, const FifSpec& spec, std::span<const int> cell,
                   const FracOrder& beta, std::span<const double> x, int panels) {
    beta.validate();
    const Net& net = spec.data.net;
    const int q = net.dim();
    if (beta.q() != q || static_cast<int>(x.size()) != q)
        throw ValidationError("bhat: dimension mismatch");
    if (panels < 4) throw ValidationError("bhat: panel count must be >= 4");
    for (int k = 0; k < q; ++k) {
        const double xk = x[static_cast<std::size_t>(k)];
        if (xk < 0.0 || xk > 1.0)
            throw ValidationError("bhat: point must lie in the unit hypercube");
    }

    std::vector<AffineMap> u;
    std::vector<double> a_pow(static_cast<std::size_t>(q));
    for (int k = 0; k < q; ++k) {
        u.push_back(net.map(k, cell[static_cast<std::size_t>(k)]));
        const double a = u.back().slope();
        const double b = beta.beta[static_cast<std::size_t>(k)];
        if (a < 0.0 && !detail::integer_exponent(b))
            throw NumericalError("bhat: negative slope with non-integer order");
        a_pow[static_cast<std::size_t>(k)] = std::pow(a, b);
    }
    const auto Afn = surface_fn(A);
    const Field B = corner_b_field(spec, cell);
    const double gprod = detail::gamma_product(beta);

    auto nodes = [&](detail::AxisQuad& ax, double L, int p) {
        ax.arg.resize(static_cast<std::size_t>(p) + 1);
        for (int j = 0; j <= p; ++j)
            ax.arg[static_cast<std::size_t>(j)] = L * static_cast<double>(j) / p;
    };

    double total = 0.0;
    std::vector<detail::AxisQuad> axes(static_cast<std::size_t>(q));

    // mixed terms: split axis p takes the range below the cell image,
    // earlier axes the full transported range, later axes the substituted
    // in-cell piece.
    for (int p = q - 1; p >= 0; --p) {
        for (int k = 0; k < q; ++k) {
            auto& ax = axes[static_cast<std::size_t>(k)];
            const double bk = beta.beta[static_cast<std::size_t>(k)];
            const double uxk = u[static_cast<std::size_t>(k)](x[static_cast<std::size_t>(k)]);
            if (k < p) {
                ax.w = kernel_weights(uxk, uxk, bk, panels);
                nodes(ax, uxk, panels);
            } else if (k == p) {
                const double u0 = u[static_cast<std::size_t>(k)](0.0);
                ax.w = kernel_weights(u0, uxk, bk, panels);
                nodes(ax, u0, panels);
            } else {
                const double xk = x[static_cast<std::size_t>(k)];
                ax.w = kernel_weights(xk, xk, bk, panels);
                for (double& wv : ax.w) wv *= a_pow[static_cast<std::size_t>(k)];
                ax.arg.resize(ax.w.size());
                for (std::size_t j = 0; j < ax.arg.size(); ++j)
                    ax.arg[j] = u[static_cast<std::size_t>(k)](
                        xk * static_cast<double>(j) / panels);
            }
        }
        total += detail::tensor_apply(std::span<const detail::AxisQuad>(axes), Afn);
    }

    // final term: fully substituted integral of the blend field
    double coeff = 1.0;
    for (int k = 0; k < q; ++k) {
        auto& ax = axes[static_cast<std::size_t>(k)];
        const double xk = x[static_cast<std::size_t>(k)];
        ax.w = kernel_weights(xk, xk, beta.beta[static_cast<std::size_t>(k)], panels);
        nodes(ax, xk, panels);
        coeff *= a_pow[static_cast<std::size_t>(k)];
    }
    total += coeff * detail::tensor_apply(std::span<const detail::AxisQuad>(axes),
                                          [&](std::span<const double> t) { return B.eval(t); });
    return total / gprod;
}

// ---------------------------------------------------------------------------
// Identity verification
// ---------------------------------------------------------------------------

struct FrintPointCheck {
    std::vector<int> cell;
    std::vector<double> x;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

struct FrintIdentityReport {
    std::vector<int> panels;                          // per refinement level
    std::vector<std::vector<FrintPointCheck>> checks; // per level
    std::vector<double> max_residual;                 // per level
    double observed_order = 0.0;                      // in panel width
};

namespace detail {

inline std::vector<std::vector<int>> default_odd_cells(const Net& net) {
    const int q = net.dim();
    std::vector<std::vector<int>> cells;
    std::vector<int> c(static_cast<std::size_t>(q), 1);
    for (;;) {
        cells.push_back(c);
        int k = q;
        bool done = true;
        while (k-- > 0) {
            c[static_cast<std::size_t>(k)] += 2;
            if (c[static_cast<std::size_t>(k)] <= net.subintervals(k)) {
                done = false;
                break;
            }
            c[static_cast<std::size_t>(k)] = 1;
        }
        if (done) break;
    }
    return cells;
}

inline void check_cell_orders(const std::vector<std::vector<int>>& cells, const FracOrder& beta) {
    bool all_integer = true;
    for (double b : beta.beta) all_integer = all_integer && integer_exponent(b);
    for (const auto& c : cells)
        for (int ck : c)
            if (ck % 2 == 0 && !all_integer)
                throw NumericalError(
                    "verify_identity: even-index cell requires all-integer orders");
}

inline std::vector<std::vector<double>> identity_points(int q, int points_per_cell,
                                                        std::uint64_t seed) {
    if (points_per_cell < 1) throw ValidationError("verify_identity: need at least one point");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.15, 0.9);
    std::vector<std::vector<double>> points;
    for (int t = 0; t < points_per_cell; ++t) {
        std::vector<double> x(static_cast<std::size_t>(q));
        for (int k = 0; k < q; ++k) x[static_cast<std::size_t>(k)] = unit(rng);
        points.push_back(std::move(x));
    }
    return points;
}

/// One refinement level: residuals of the identity at all (cell, point)
/// pairs against the given surface, with the given panel count.
inline std::pair<std::vector<FrintPointCheck>, double> identity_level(
    const SampledSurface& A, const FifSpec& spec, const FracOrder& beta,
    const std::vector<std::vector<int>>& cells,
    const std::vector<std::vector<double>>& points, int panels) {
    const Net& net = spec.data.net;
    const int q = net.dim();
    const auto Afn = surface_fn(A);
    std::vector<FrintPointCheck> level;
    double worst = 0.0;
    for (const auto& c : cells) {
        std::vector<AffineMap> maps;
        for (int k = 0; k < q; ++k) maps.push_back(net.map(k, c[static_cast<std::size_t>(k)]));
        const double coeff = frac_coefficient(maps, beta, spec.delta);
        for (const auto& x : points) {
            std::vector<double> ux(static_cast<std::size_t>(q));
            for (int k = 0; k < q; ++k)
                ux[static_cast<std::size_t>(k)] =
                    maps[static_cast<std::size_t>(k)](x[static_cast<std::size_t>(k)]);
            FrintPointCheck chk;
            chk.cell = c;
            chk.x = x;
            chk.lhs = mixed_rl(Afn, beta, ux, panels);
            chk.rhs = coeff * mixed_rl(Afn, beta, x, panels) + bhat(A, spec, c, beta, x, panels);
            chk.residual = std::abs(chk.lhs - chk.rhs);
            worst = std::max(worst, chk.residual);
            level.push_back(std::move(chk));
        }
    }
    return {std::move(level), worst};
}

inline void finish_report(FrintIdentityReport& rep, int factor) {
    if (rep.max_residual.size() >= 2) {
        const double r0 = rep.max_residual.front();
        const double rl = std::max(rep.max_residual.back(), 1e-15);
        const double levels = static_cast<double>(rep.max_residual.size() - 1);
        rep.observed_order = std::log(std::max(r0, 1e-15) / rl) / (levels * std::log(factor));
    }
}

} // namespace detail

/// Checks, at sampled points x, that the transported integral J A(u_cell(x))
/// matches frac_coefficient * J A(x) + bhat(x), refining the quadrature to
/// estimate the convergence order. Default cells: all odd-index ones
/// (positive slopes); even cells are admitted only for all-integer orders.
inline FrintIdentityReport verify_identity(const SampledSurface& A, const FifSpec& spec,
                                           const FracOrder& beta,
                                           std::vector<std::vector<int>> cells,
                                           int points_per_cell, const QuadratureSpec& quad,
                                           std::uint64_t seed = 777) {
    beta.validate();
    quad.validate();
    const Net& net = spec.data.net;
    if (cells.empty()) cells = detail::default_odd_cells(net);
    detail::check_cell_orders(cells, beta);
    const auto points = detail::identity_points(net.dim(), points_per_cell, seed);

    FrintIdentityReport rep;
    int p = quad.panels;
    for (int lev = 0; lev <= quad.refinements; ++lev, p *= quad.factor) {
        rep.panels.push_back(p);
        auto [level, worst] = detail::identity_level(A, spec, beta, cells, points, p);
        rep.checks.push_back(std::move(level));
        rep.max_residual.push_back(worst);
    }
    detail::finish_report(rep, quad.factor);
    return rep;
}

/// Co-refining variant: each refinement level multiplies the panel count
/// *and* deepens the surface by level_step. A fixed-level surface carries an
/// interpolation defect of order |delta|^m that floors the residual no
/// matter how fine the quadrature gets; deepening the surface in lockstep
/// keeps the study's order estimate meaningful.
inline FrintIdentityReport verify_identity(const FifSpec& spec, const FracOrder& beta,
                                           std::vector<std::vector<int>> cells,
                                           int points_per_cell, const QuadratureSpec& quad,
                                           int base_level, int level_step = 1,
                                           double tol = 1e-12, int max_iter = 400,
                                           int threads = 1, std::uint64_t seed = 777) {
    beta.validate();
    quad.validate();
    if (base_level < 1) throw ValidationError("verify_identity: base level must be >= 1");
    const Net& net = spec.data.net;
    if (cells.empty()) cells = detail::default_odd_cells(net);
    detail::check_cell_orders(cells, beta);
    const auto points = detail::identity_points(net.dim(), points_per_cell, seed);

    FrintIdentityReport rep;
    int p = quad.panels;
    int m = base_level;
    for (int lev = 0; lev <= quad.refinements; ++lev, p *= quad.factor, m += level_step) {
        rep.panels.push_back(p);
        const auto A = build_fif(spec, m, tol, max_iter, threads).first;
        auto [level, worst] = detail::identity_level(A, spec, beta, cells, points, p);
        rep.checks.push_back(std::move(level));
        rep.max_residual.push_back(worst);
    }
    detail::finish_report(rep, quad.factor);
    return rep;
}

} // namespace fif
