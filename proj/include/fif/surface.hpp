#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fif/errors.hpp"
#include "fif/net.hpp"

namespace fif {

/// Values of a function on a structured sample grid over [0,1]^q.
/// `coords[k]` are the per-axis sample coordinates in unit space (sorted,
/// first 0, last 1); `values` is row-major, last axis fastest. `domain`
/// carries the original box for de-normalized consumers; `level` records
/// the refinement depth when the grid is a structured FIF grid.
struct SampledSurface {
    std::vector<std::size_t> dims;
    std::vector<std::vector<double>> coords;
    std::vector<double> values;
    std::vector<Interval> domain;
    int level = 0;

    int q() const { return static_cast<int>(dims.size()); }

    std::size_t size() const {
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return n;
    }

    std::vector<std::size_t> strides() const {
        std::vector<std::size_t> s(dims.size(), 1);
        for (std::size_t k = dims.size(); k-- > 1;) s[k - 1] = s[k] * dims[k];
        return s;
    }

    void validate() const {
        if (dims.empty()) throw ValidationError("SampledSurface: q must be >= 1");
        if (coords.size() != dims.size() || domain.size() != dims.size())
            throw ValidationError("SampledSurface: dims/coords/domain mismatch");
        if (values.size() != size())
            throw ValidationError("SampledSurface: values length != product of dims");
        for (std::size_t k = 0; k < dims.size(); ++k) {
            if (coords[k].size() != dims[k] || dims[k] < 2)
                throw ValidationError("SampledSurface: bad axis " + std::to_string(k + 1));
        }
        for (double v : values)
            if (!std::isfinite(v)) throw ValidationError("SampledSurface: non-finite value");
    }

    double value_at(std::span<const std::size_t> idx) const {
        const auto s = strides();
        std::size_t flat = 0;
        for (std::size_t k = 0; k < dims.size(); ++k) flat += idx[k] * s[k];
        return values[flat];
    }

    /// Index of a unit coordinate that is expected to be a grid point of
    /// axis k (within tol of one). Errors otherwise.
    std::size_t exact_index(int k, double x, double tol = 1e-9) const {
        const auto& c = coords[static_cast<std::size_t>(k)];
        const auto it = std::lower_bound(c.begin(), c.end(), x - tol);
        if (it == c.end() || std::abs(*it - x) > tol)
            throw NumericalError("SampledSurface: coordinate is not a grid point");
        return static_cast<std::size_t>(it - c.begin());
    }

    /// Multilinear interpolation at a unit-space point.
    double eval(std::span<const double> x) const {
        const std::size_t qq = dims.size();
        if (x.size() != qq) throw ValidationError("SampledSurface: point dimension mismatch");
        const auto s = strides();
        std::size_t base = 0;
        double weight_hi[16];
        std::size_t step[16];
        for (std::size_t k = 0; k < qq; ++k) {
            const auto& c = coords[k];
            double xk = x[k];
            if (xk < -1e-12 || xk > 1.0 + 1e-12)
                throw ValidationError("SampledSurface: point outside unit box");
            xk = std::min(std::max(xk, c.front()), c.back());
            auto it = std::upper_bound(c.begin(), c.end(), xk);
            std::size_t i = static_cast<std::size_t>(it - c.begin());
            if (i == 0) i = 1;
            if (i >= c.size()) i = c.size() - 1;
            const double lo = c[i - 1], hi = c[i];
            base += (i - 1) * s[k];
            step[k] = s[k];
            weight_hi[k] = (xk - lo) / (hi - lo);
        }
        double acc = 0.0;
        const std::size_t corners = std::size_t{1} << qq;
        for (std::size_t c = 0; c < corners; ++c) {
            double w = 1.0;
            std::size_t flat = base;
            for (std::size_t k = 0; k < qq; ++k) {
                const bool hi = (c >> k) & 1u;
                w *= hi ? weight_hi[k] : 1.0 - weight_hi[k];
                if (hi) flat += step[k];
            }
            acc += w * values[flat];
        }
        return acc;
    }
};

/// Uniform sample grid of a field over a box: n subintervals per axis.
/// Field evaluation happens in original-domain coordinates.
template <typename F>
SampledSurface sample_surface(F&& f, const std::vector<Interval>& box, std::size_t n_per_axis) {
    const std::size_t q = box.size();
    SampledSurface s;
    s.dims.assign(q, n_per_axis + 1);
    s.domain = box;
    for (std::size_t k = 0; k < q; ++k) {
        std::vector<double> c(n_per_axis + 1);
        for (std::size_t j = 0; j <= n_per_axis; ++j)
            c[j] = static_cast<double>(j) / static_cast<double>(n_per_axis);
        s.coords.push_back(std::move(c));
    }
    s.values.resize(s.size());
    std::vector<std::size_t> idx(q, 0);
    std::vector<double> pt(q);
    for (std::size_t flat = 0; flat < s.values.size(); ++flat) {
        for (std::size_t k = 0; k < q; ++k)
            pt[k] = box[k].lo + s.coords[k][idx[k]] * box[k].length();
        s.values[flat] = f(std::span<const double>(pt));
        for (std::size_t k = q; k-- > 0;) {
            if (++idx[k] < s.dims[k]) break;
            idx[k] = 0;
        }
    }
    return s;
}

} // namespace fif
