#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fif/errors.hpp"

namespace fif {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
};

/// One-dimensional affine contraction x -> a*x + b mapping [0,1] onto a
/// subinterval of [0,1]. Orientation-reversing maps have a < 0.
class AffineMap {
public:
    AffineMap(double a, double b) : a_(a), b_(b) {
        if (!(std::abs(a) > 0.0 && std::abs(a) < 1.0))
            throw ValidationError("AffineMap: |slope| must lie in (0,1), got " +
                                  std::to_string(a));
    }

    double operator()(double x) const { return a_ * x + b_; }
    double inverse(double y) const { return (y - b_) / a_; }

    double slope() const { return a_; }
    double intercept() const { return b_; }
    /// Contraction ratio mu = |a|.
    double ratio() const { return std::abs(a_); }

    /// Composition (*this) after inner: x -> this(inner(x)).
    AffineMap compose(const AffineMap& inner) const {
        return AffineMap(a_ * inner.a_, a_ * inner.b_ + b_);
    }

    /// Image of [0,1], endpoints sorted.
    Interval image_of_unit() const {
        double p = b_, q = a_ + b_;
        return {std::min(p, q), std::max(p, q)};
    }

private:
    double a_;
    double b_;
};

/// Strictly increasing knots on [0,1]; first knot 0, last knot 1, at least
/// two subintervals.
struct AxisPartition {
    std::vector<double> knots;

    int subinterval_count() const { return static_cast<int>(knots.size()) - 1; }

    void validate() const {
        if (knots.size() < 3)
            throw ValidationError("AxisPartition: need at least 2 subintervals");
        if (knots.front() != 0.0 || knots.back() != 1.0)
            throw ValidationError("AxisPartition: knots must start at 0 and end at 1");
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (!(knots[i] > knots[i - 1]))
                throw ValidationError("AxisPartition: knots must be strictly increasing (index " +
                                      std::to_string(i) + ")");
    }

    bool uniform(double tol = 1e-12) const {
        const double h = 1.0 / subinterval_count();
        for (std::size_t i = 0; i < knots.size(); ++i)
            if (std::abs(knots[i] - static_cast<double>(i) * h) > tol) return false;
        return true;
    }
};

/// Maps for every subinterval of a partition. Cell indices are 1-based;
/// odd cells preserve orientation, even cells reverse it:
///   odd i:  u(0) = x_{i-1}, u(1) = x_i
///   even i: u(0) = x_i,     u(1) = x_{i-1}
/// Coefficients are solved from these endpoint conditions directly.
inline std::vector<AffineMap> build_affine_maps(const AxisPartition& p) {
    p.validate();
    std::vector<AffineMap> maps;
    maps.reserve(static_cast<std::size_t>(p.subinterval_count()));
    for (int i = 1; i <= p.subinterval_count(); ++i) {
        const double left = p.knots[static_cast<std::size_t>(i - 1)];
        const double right = p.knots[static_cast<std::size_t>(i)];
        if (!(right > left))
            throw ValidationError("build_affine_maps: degenerate subinterval " +
                                  std::to_string(i));
        if (i % 2 == 1)
            maps.emplace_back(right - left, left);
        else
            maps.emplace_back(left - right, right);
    }
    return maps;
}

/// Index bookkeeping for cell corners:
///   odd i:  eta(i, 0) = i-1,  eta(i, M) = i
///   even i: eta(i, 0) = i,    eta(i, M) = i-1
/// `label` must be 0 or M (the axis subinterval count).
inline int eta(int i, int label, int M) {
    if (i < 1) throw ValidationError("eta: cell index must be >= 1");
    if (label != 0 && label != M)
        throw ValidationError("eta: label must be 0 or M");
    const bool odd = (i % 2 == 1);
    if (label == 0) return odd ? i - 1 : i;
    return odd ? i : i - 1;
}

/// Product net on the unit hypercube plus the original (pre-normalization)
/// domain box. Per-axis contraction maps are precomputed.
class Net {
public:
    Net(std::vector<AxisPartition> axes, std::vector<Interval> domain)
        : axes_(std::move(axes)), domain_(std::move(domain)) {
        if (axes_.empty()) throw ValidationError("Net: q must be >= 1");
        if (domain_.size() != axes_.size())
            throw ValidationError("Net: domain box and axes count differ");
        for (std::size_t k = 0; k < axes_.size(); ++k) {
            axes_[k].validate();
            if (!(domain_[k].lo < domain_[k].hi))
                throw ValidationError("Net: degenerate domain interval on axis " +
                                      std::to_string(k + 1));
        }
        maps_.reserve(axes_.size());
        for (const auto& p : axes_) maps_.push_back(build_affine_maps(p));
    }

    int dim() const { return static_cast<int>(axes_.size()); }
    const std::vector<AxisPartition>& axes() const { return axes_; }
    const AxisPartition& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
    const std::vector<Interval>& domain() const { return domain_; }
    int subintervals(int k) const { return axes_[static_cast<std::size_t>(k)].subinterval_count(); }

    /// Maps of axis k (0-based axis, cells 1-based: maps(k)[i-1] is u_{k,i}).
    const std::vector<AffineMap>& maps(int k) const { return maps_[static_cast<std::size_t>(k)]; }
    const AffineMap& map(int k, int cell) const {
        return maps_[static_cast<std::size_t>(k)][static_cast<std::size_t>(cell - 1)];
    }

    /// Cell count over all axes.
    std::size_t cell_count() const {
        std::size_t n = 1;
        for (const auto& p : axes_) n *= static_cast<std::size_t>(p.subinterval_count());
        return n;
    }

private:
    std::vector<AxisPartition> axes_;
    std::vector<Interval> domain_;
    std::vector<std::vector<AffineMap>> maps_;
};

/// Cell of a single 1-D coordinate (1-based). Boundary knots go to the
/// lower cell except the final cell owns the right endpoint.
inline int locate_axis(const AxisPartition& p, double x) {
    if (x < 0.0 || x > 1.0) throw ValidationError("locate: coordinate outside [0,1]");
    if (x == 0.0) return 1;
    const auto it = std::lower_bound(p.knots.begin(), p.knots.end(), x);
    return static_cast<int>(it - p.knots.begin());
}

/// Multi-index (1-based per axis) of the cell containing x in [0,1]^q.
inline std::vector<int> locate(const Net& net, std::span<const double> x) {
    if (static_cast<int>(x.size()) != net.dim())
        throw ValidationError("locate: point dimension mismatch");
    std::vector<int> cell(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        cell[k] = locate_axis(net.axis(static_cast<int>(k)), x[k]);
    return cell;
}

/// Refinement address: one word of cell letters per axis, all words of the
/// same depth m.
struct CellAddress {
    std::vector<std::vector<int>> words; // words[k] has m letters, each 1..M_k

    int depth() const { return words.empty() ? 0 : static_cast<int>(words[0].size()); }

    void validate(const Net& net) const {
        if (static_cast<int>(words.size()) != net.dim())
            throw ValidationError("CellAddress: axis count mismatch");
        const std::size_t m = words.empty() ? 0 : words[0].size();
        for (std::size_t k = 0; k < words.size(); ++k) {
            if (words[k].size() != m)
                throw ValidationError("CellAddress: all axes must share the same depth");
            for (int letter : words[k])
                if (letter < 1 || letter > net.subintervals(static_cast<int>(k)))
                    throw ValidationError("CellAddress: letter out of range on axis " +
                                          std::to_string(k + 1));
        }
    }
};

struct ComposedCell {
    std::vector<AffineMap> maps;  // m-fold composition per axis
    std::vector<Interval> image;  // the sub-box D_{(i_1)_1 ... (i_q)_m}
};

/// u_{(i_k)_1 ... (i_k)_m} = u_{k,(i_k)_1} o ... o u_{k,(i_k)_m} per axis.
inline ComposedCell compose_address(const Net& net, const CellAddress& addr) {
    addr.validate(net);
    ComposedCell out;
    for (int k = 0; k < net.dim(); ++k) {
        const auto& word = addr.words[static_cast<std::size_t>(k)];
        AffineMap m = net.map(k, word.front());
        for (std::size_t j = 1; j < word.size(); ++j)
            m = m.compose(net.map(k, word[j]));
        out.image.push_back(m.image_of_unit());
        out.maps.push_back(std::move(m));
    }
    return out;
}

/// Affine bijection between the original domain box and [0,1]^q.
inline std::vector<double> normalize(const Net& net, std::span<const double> x) {
    if (static_cast<int>(x.size()) != net.dim())
        throw ValidationError("normalize: point dimension mismatch");
    std::vector<double> u(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const Interval& d = net.domain()[k];
        u[k] = (x[k] - d.lo) / d.length();
    }
    return u;
}

inline std::vector<double> denormalize(const Net& net, std::span<const double> u) {
    if (static_cast<int>(u.size()) != net.dim())
        throw ValidationError("denormalize: point dimension mismatch");
    std::vector<double> x(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Interval& d = net.domain()[k];
        x[k] = d.lo + u[k] * d.length();
    }
    return x;
}

} // namespace fif
