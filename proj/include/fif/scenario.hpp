#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fif/errors.hpp"
#include "fif/fif_core.hpp"

namespace fif {

struct DimensionOptions {
    int mesh = 0; // 0 = derive from the net (max subinterval count)
    int m_min = 1;
    int m_max = 5;
    double sigma = 1.0;
    long long holder_pairs = 20000;
};

struct FrintOptions {
    std::vector<double> beta;
    int panels = 32;
    int refinements = 2;
    int points_per_cell = 2;
};

/// Declarative run description. Knots are given in original-domain
/// coordinates and normalized onto [0,1] when the net is built.
struct Scenario {
    int schema_version = 1;
    std::string kind; // "fif" | "alpha"
    std::vector<Interval> domain;
    std::vector<std::vector<double>> knots;
    double delta = 0.0;          // fif
    std::vector<double> z;       // fif: knot-lattice values, row-major
    std::string germ, base, scale; // alpha: expressions
    int level = 6;
    double tol = 1e-12;
    int max_iterations = 200;
    bool corner_check = true;
    int threads = 1;
    std::uint64_t seed = 12345;
    DimensionOptions dimension;
    FrintOptions frint;
};

namespace detail {

using nlohmann::json;

inline const json& member(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path + ": expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(path + "." + key + ": missing");
    return *it;
}

inline const json* member_opt(const json& j, const char* key) {
    if (!j.is_object()) return nullptr;
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline double num(const json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path + ": expected a number");
    return j.get<double>();
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ValidationError(path + ": expected an integer");
    return j.get<int>();
}

inline std::string str(const json& j, const std::string& path) {
    if (!j.is_string()) throw ValidationError(path + ": expected a string");
    return j.get<std::string>();
}

inline std::vector<double> num_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(num(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

} // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j, const std::string& path = "scenario") {
    using detail::member;
    using detail::member_opt;
    Scenario s;
    s.schema_version = detail::integer(member(j, "schema_version", path), path + ".schema_version");
    if (s.schema_version != 1)
        throw ValidationError(path + ".schema_version: unsupported version " +
                              std::to_string(s.schema_version));
    s.kind = detail::str(member(j, "kind", path), path + ".kind");
    if (s.kind != "fif" && s.kind != "alpha")
        throw ValidationError(path + ".kind: must be 'fif' or 'alpha'");

    const auto& dom = member(j, "domain", path);
    if (!dom.is_array() || dom.empty()) throw ValidationError(path + ".domain: expected a non-empty array");
    for (std::size_t k = 0; k < dom.size(); ++k) {
        const auto iv = detail::num_array(dom[k], path + ".domain[" + std::to_string(k) + "]");
        if (iv.size() != 2 || !(iv[0] < iv[1]))
            throw ValidationError(path + ".domain[" + std::to_string(k) + "]: expected [lo, hi] with lo < hi");
        s.domain.push_back({iv[0], iv[1]});
    }

    const auto& kn = member(j, "knots", path);
    if (!kn.is_array() || kn.size() != s.domain.size())
        throw ValidationError(path + ".knots: expected one knot list per axis");
    for (std::size_t k = 0; k < kn.size(); ++k) {
        const std::string kp = path + ".knots[" + std::to_string(k) + "]";
        auto lst = detail::num_array(kn[k], kp);
        if (lst.size() < 3) throw ValidationError(kp + ": need at least 3 knots");
        if (std::abs(lst.front() - s.domain[k].lo) > 1e-12 ||
            std::abs(lst.back() - s.domain[k].hi) > 1e-12)
            throw ValidationError(kp + ": first/last knot must equal the domain endpoints");
        for (std::size_t i = 1; i < lst.size(); ++i)
            if (!(lst[i] > lst[i - 1]))
                throw ValidationError(kp + "[" + std::to_string(i) + "]: knots must increase");
        s.knots.push_back(std::move(lst));
    }

    if (s.kind == "fif") {
        s.delta = detail::num(member(j, "delta", path), path + ".delta");
        s.z = detail::num_array(member(j, "z", path), path + ".z");
    } else {
        s.germ = detail::str(member(j, "germ", path), path + ".germ");
        s.base = detail::str(member(j, "base", path), path + ".base");
        s.scale = detail::str(member(j, "scale", path), path + ".scale");
    }

    if (const auto* v = member_opt(j, "level")) s.level = detail::integer(*v, path + ".level");
    if (const auto* v = member_opt(j, "tol")) s.tol = detail::num(*v, path + ".tol");
    if (const auto* v = member_opt(j, "max_iterations"))
        s.max_iterations = detail::integer(*v, path + ".max_iterations");
    if (const auto* v = member_opt(j, "corner_check")) {
        if (!v->is_boolean()) throw ValidationError(path + ".corner_check: expected a boolean");
        s.corner_check = v->get<bool>();
    }
    if (const auto* v = member_opt(j, "threads")) s.threads = detail::integer(*v, path + ".threads");
    if (const auto* v = member_opt(j, "seed"))
        s.seed = static_cast<std::uint64_t>(detail::integer(*v, path + ".seed"));
    if (s.level < 1) throw ValidationError(path + ".level: must be >= 1");
    if (!(s.tol > 0.0)) throw ValidationError(path + ".tol: must be > 0");
    if (s.max_iterations < 1) throw ValidationError(path + ".max_iterations: must be >= 1");

    if (const auto* d = member_opt(j, "dimension")) {
        const std::string dp = path + ".dimension";
        if (const auto* v = member_opt(*d, "mesh")) s.dimension.mesh = detail::integer(*v, dp + ".mesh");
        if (const auto* v = member_opt(*d, "m_min")) s.dimension.m_min = detail::integer(*v, dp + ".m_min");
        if (const auto* v = member_opt(*d, "m_max")) s.dimension.m_max = detail::integer(*v, dp + ".m_max");
        if (const auto* v = member_opt(*d, "sigma")) s.dimension.sigma = detail::num(*v, dp + ".sigma");
        if (const auto* v = member_opt(*d, "holder_pairs"))
            s.dimension.holder_pairs = detail::integer(*v, dp + ".holder_pairs");
        if (s.dimension.m_min < 1 || s.dimension.m_max < s.dimension.m_min + 2)
            throw ValidationError(dp + ": need m_min >= 1 and m_max >= m_min + 2");
        if (!(s.dimension.sigma > 0.0 && s.dimension.sigma <= 1.0))
            throw ValidationError(dp + ".sigma: must lie in (0, 1]");
    }

    if (const auto* f = member_opt(j, "frint")) {
        const std::string fp = path + ".frint";
        s.frint.beta = detail::num_array(member(*f, "beta", fp), fp + ".beta");
        if (s.frint.beta.size() != s.domain.size())
            throw ValidationError(fp + ".beta: need one order per axis");
        for (std::size_t i = 0; i < s.frint.beta.size(); ++i)
            if (!(s.frint.beta[i] > 0.0))
                throw ValidationError(fp + ".beta[" + std::to_string(i) + "]: must be > 0");
        if (const auto* v = member_opt(*f, "panels")) s.frint.panels = detail::integer(*v, fp + ".panels");
        if (const auto* v = member_opt(*f, "refinements"))
            s.frint.refinements = detail::integer(*v, fp + ".refinements");
        if (const auto* v = member_opt(*f, "points_per_cell"))
            s.frint.points_per_cell = detail::integer(*v, fp + ".points_per_cell");
        if (s.frint.panels < 4) throw ValidationError(fp + ".panels: must be >= 4");
    }
    return s;
}

inline Scenario load_scenario(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw ValidationError("scenario: cannot open '" + file + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("scenario '" + file + "': " + e.what(), e.byte);
    }
    return parse_scenario(j);
}

inline Net make_net(const Scenario& s) {
    std::vector<AxisPartition> axes;
    for (std::size_t k = 0; k < s.knots.size(); ++k) {
        AxisPartition p;
        const double lo = s.domain[k].lo, len = s.domain[k].length();
        for (double x : s.knots[k]) p.knots.push_back((x - lo) / len);
        p.knots.front() = 0.0;
        p.knots.back() = 1.0;
        axes.push_back(std::move(p));
    }
    return Net(std::move(axes), s.domain);
}

inline FifSpec make_fif_spec(const Scenario& s) {
    if (s.kind != "fif") throw ValidationError("scenario.kind: expected 'fif'");
    FifSpec spec{InterpolationData{make_net(s), s.z}, s.delta};
    spec.validate();
    return spec;
}

inline AlphaSpec make_alpha_spec(const Scenario& s) {
    if (s.kind != "alpha") throw ValidationError("scenario.kind: expected 'alpha'");
    AlphaSpec spec{make_net(s), parse(s.germ), parse(s.base), parse(s.scale)};
    spec.require_corner_match = s.corner_check;
    return spec;
}

} // namespace fif
