#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fif/errors.hpp"
#include "fif/surface.hpp"

namespace fif {

// Binary grid container:
//   bytes 0..7   magic "FRGRID1\0"
//   uint32       q
//   q x uint64   dims (samples per axis)
//   q x 2 float64 domain box (lo, hi per axis)
//   prod(dims) x float64  values, row-major, last axis fastest
// All integers and floats little-endian.

struct GridData {
    std::vector<std::uint64_t> dims;
    std::vector<Interval> domain;
    std::vector<double> values;
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "GridFile IO assumes a little-endian host");

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ParseError("GridFile: truncated stream", 0);
    return v;
}

} // namespace detail

inline void write_grid(const std::string& path, const GridData& g) {
    if (g.dims.empty() || g.dims.size() != g.domain.size())
        throw ValidationError("write_grid: dims/domain mismatch");
    std::uint64_t total = 1;
    for (auto d : g.dims) {
        if (d < 2) throw ValidationError("write_grid: each axis needs >= 2 samples");
        total *= d;
    }
    if (g.values.size() != total)
        throw ValidationError("write_grid: payload length does not match dims");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("write_grid: cannot open '" + path + "'");
    const char magic[8] = {'F', 'R', 'G', 'R', 'I', 'D', '1', '\0'};
    os.write(magic, 8);
    detail::put(os, static_cast<std::uint32_t>(g.dims.size()));
    for (auto d : g.dims) detail::put(os, d);
    for (const auto& iv : g.domain) {
        detail::put(os, iv.lo);
        detail::put(os, iv.hi);
    }
    os.write(reinterpret_cast<const char*>(g.values.data()),
             static_cast<std::streamsize>(g.values.size() * sizeof(double)));
    if (!os) throw NumericalError("write_grid: short write to '" + path + "'");
}

inline GridData read_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("read_grid: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "FRGRID1\0", 8) != 0)
        throw ParseError("read_grid: bad magic in '" + path + "'", 0);
    const auto q = detail::get<std::uint32_t>(is);
    if (q < 1 || q > 16) throw ParseError("read_grid: implausible dimension count", 8);
    GridData g;
    std::uint64_t total = 1;
    for (std::uint32_t k = 0; k < q; ++k) {
        g.dims.push_back(detail::get<std::uint64_t>(is));
        if (g.dims.back() < 2 || g.dims.back() > (std::uint64_t{1} << 32))
            throw ParseError("read_grid: implausible axis size", 12);
        total *= g.dims.back();
    }
    for (std::uint32_t k = 0; k < q; ++k) {
        const double lo = detail::get<double>(is);
        const double hi = detail::get<double>(is);
        g.domain.push_back({lo, hi});
    }
    g.values.resize(total);
    is.read(reinterpret_cast<char*>(g.values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (!is) throw ParseError("read_grid: truncated payload in '" + path + "'", 0);
    char extra;
    if (is.read(&extra, 1)) throw ParseError("read_grid: trailing bytes in '" + path + "'", 0);
    return g;
}

inline GridData to_grid_data(const SampledSurface& s) {
    GridData g;
    g.dims.assign(s.dims.begin(), s.dims.end());
    g.domain = s.domain;
    g.values = s.values;
    return g;
}

/// Rebuilds a surface from grid data plus per-axis unit coordinates (the
/// file stores only dims; non-uniform grids need their coords resupplied).
inline SampledSurface to_surface(const GridData& g, std::vector<std::vector<double>> coords) {
    SampledSurface s;
    s.dims.assign(g.dims.begin(), g.dims.end());
    s.domain = g.domain;
    s.values = g.values;
    if (coords.empty()) {
        for (auto d : g.dims) {
            std::vector<double> c(d);
            for (std::uint64_t j = 0; j < d; ++j)
                c[j] = static_cast<double>(j) / static_cast<double>(d - 1);
            coords.push_back(std::move(c));
        }
    }
    s.coords = std::move(coords);
    s.validate();
    return s;
}

} // namespace fif
