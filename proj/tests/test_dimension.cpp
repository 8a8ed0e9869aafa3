#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fif/dimension.hpp"
#include "fif/fif_core.hpp"

using namespace fif;

namespace {

AxisPartition uniform_partition(int M) {
    AxisPartition p;
    for (int i = 0; i <= M; ++i) p.knots.push_back(static_cast<double>(i) / M);
    return p;
}

Net uniform_net(int q, int M) {
    std::vector<AxisPartition> axes(static_cast<std::size_t>(q), uniform_partition(M));
    std::vector<Interval> dom(static_cast<std::size_t>(q), Interval{0.0, 1.0});
    return Net(std::move(axes), std::move(dom));
}

SampledSurface sample_expr(const std::string& expr, int q, std::size_t n) {
    const auto f = parse(expr);
    std::vector<Interval> dom(static_cast<std::size_t>(q), Interval{0.0, 1.0});
    return sample_surface([&](std::span<const double> x) { return f.eval(x); }, dom, n);
}

} // namespace

TEST_CASE("per-cell oscillations") {
    const auto zero = sample_expr("0*x1 + 0*x2", 2, 16);
    const auto tz = oscillation_table(zero, 2, 2);
    REQUIRE(tz.osc.size() == 16);
    for (double o : tz.osc) CHECK(o == Catch::Approx(0.0).margin(1e-15));

    const auto plane = sample_expr("x1 + x2", 2, 16);
    const auto tp = oscillation_table(plane, 1, 2);
    REQUIRE(tp.osc.size() == 4);
    for (double o : tp.osc) CHECK(o == Catch::Approx(1.0)); // 0.5 + 0.5 per cell

    const auto line = sample_expr("x1", 1, 16);
    const auto tl = oscillation_table(line, 1, 4);
    REQUIRE(tl.osc.size() == 4);
    for (double o : tl.osc) CHECK(o == Catch::Approx(0.25));

    const Interval box[] = {Interval{0.25, 0.75}};
    CHECK(oscillation_over_box(line, box) == Catch::Approx(0.5));

    CHECK_THROWS_AS(oscillation_table(line, 5, 2), NumericalError); // 32 cells > 16 panels
}

TEST_CASE("box-count bounds") {
    const auto zero = sample_expr("0*x1 + 0*x2", 2, 16);
    const auto bz = box_count(oscillation_table(zero, 1, 2));
    CHECK(bz.lower == 4);
    CHECK(bz.upper == 4);
    CHECK(bz.chosen == 4);
    CHECK(bz.delta == Catch::Approx(0.5));

    const auto line = sample_expr("x1", 1, 16);
    const auto bl = box_count(oscillation_table(line, 1, 2));
    CHECK(bl.lower == 2);
    CHECK(bl.upper == 4);

    const auto plane = sample_expr("x1 + x2", 2, 16);
    const auto bp = box_count(oscillation_table(plane, 1, 2));
    CHECK(bp.lower == 8);
    CHECK(bp.upper == 12);
}

TEST_CASE("log-log slope fits") {
    const auto line = sample_expr("x1", 1, 1024);
    std::vector<BoxCountResult> rs;
    for (int m = 1; m <= 6; ++m) rs.push_back(box_count(oscillation_table(line, m, 2)));
    const auto fit = dimension_fit(rs);
    CHECK(fit.lower.slope == Catch::Approx(1.0).margin(1e-12));
    CHECK(fit.upper.slope == Catch::Approx(1.0).margin(1e-12));
    CHECK(fit.lower.stderr_ == Catch::Approx(0.0).margin(1e-12));

    const auto plane = sample_expr("x1 + x2", 2, 64);
    rs.clear();
    for (int m = 1; m <= 4; ++m) rs.push_back(box_count(oscillation_table(plane, m, 2)));
    CHECK(dimension_fit(rs).lower.slope == Catch::Approx(2.0).margin(1e-12));

    rs.resize(2);
    CHECK_THROWS_AS(dimension_fit(rs), ValidationError);
}

TEST_CASE("independent bucket count sits inside the oscillation-sum sandwich") {
    std::vector<SampledSurface> surfaces;
    surfaces.push_back(sample_expr("x1^2", 1, 64));
    surfaces.push_back(sample_expr("sin(6*x1)", 1, 64));
    surfaces.push_back(sample_expr("x1*x2 + 0.3*sin(5*x1)", 2, 64));
    surfaces.push_back(sample_expr("x1^2 + x2^2", 2, 64));
    for (double delta : {0.3, 0.5, 0.7, -0.6}) {
        FifSpec spec{InterpolationData{uniform_net(1, 2), {0.0, 1.0, 0.25}}, delta};
        surfaces.push_back(build_fif(spec, 8).first);
    }
    {
        InterpolationData data{uniform_net(2, 2), {0, 1, 0, 1, 0.5, 1, 0, 1, 0}};
        surfaces.push_back(build_fif(FifSpec{data, 0.4}, 5).first);
        surfaces.push_back(build_fif(FifSpec{data, -0.55}, 5).first);
    }

    for (const auto& s : surfaces) {
        long long prev_lower = 0;
        const int m_max = s.q() == 1 ? 5 : 4;
        for (int m = 1; m <= m_max; ++m) {
            const auto b = box_count(oscillation_table(s, m, 2));
            const auto bf = brute_force_box_count(s, m, 2);
            CHECK(b.lower <= bf);
            CHECK(bf <= b.upper);
            CHECK(b.lower >= prev_lower);
            prev_lower = b.lower;
        }
    }
}

TEST_CASE("gamma_bar sums per-cell scale maxima") {
    CHECK(gamma_bar(Field::constant(0.5), uniform_net(2, 4)) == Catch::Approx(8.0));
    CHECK(gamma_bar(Field::constant(0.0), uniform_net(1, 3)) == Catch::Approx(0.0));
    CHECK(gamma_bar(parse("0.5*x1"), uniform_net(2, 2)) == Catch::Approx(1.5));
}

TEST_CASE("three-case dimension bounds") {
    // alpha_max above the threshold, alpha_min below: the vertical-scale bound
    const auto ii = theoretical_bounds(2, 4, 4, 1.0, 0.1, 0.5, 10.0);
    CHECK(ii.case_label == "ii");
    CHECK(ii.upper == Catch::Approx(2.5));
    CHECK(ii.lower == 2.0);
    CHECK_FALSE(ii.clamped);
    CHECK_FALSE(ii.upper_case_i.has_value());

    // alpha_max at/below the threshold: smooth case
    const auto iii = theoretical_bounds(2, 4, 4, 0.5, 0.1, 0.25, 10.0);
    CHECK(iii.case_label == "iii");
    CHECK(iii.upper == Catch::Approx(2.5)); // q + 1 - sigma

    // both formulas apply; the smaller wins
    const auto i = theoretical_bounds(2, 4, 4, 1.0, 0.3, 0.5, 4.0);
    CHECK(i.case_label == "i");
    CHECK(i.upper == Catch::Approx(2.0)); // 1 + log(4)/log(4)
    REQUIRE(i.upper_case_i.has_value());
    REQUIRE(i.upper_case_ii.has_value());
    CHECK(*i.upper_case_ii == Catch::Approx(2.5));

    // a raw value below q is clamped and flagged
    const auto cl = theoretical_bounds(3, 4, 2, 1.0, 0.6, 0.7, 2.0);
    CHECK(cl.clamped);
    CHECK(cl.upper == 3.0);

    CHECK_THROWS_AS(theoretical_bounds(2, 4, 4, 0.0, 0.1, 0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(theoretical_bounds(2, 4, 4, 1.0, 0.6, 0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(theoretical_bounds(2, 4, 4, 1.0, 0.5, 1.0, 1.0), ValidationError);
}

TEST_CASE("empirical Hölder exponents") {
    const auto lin = holder_fit(sample_expr("x1", 1, 1024), 20000);
    CHECK_FALSE(lin.flat);
    CHECK(lin.exponent == Catch::Approx(1.0).margin(0.05));

    const auto root = holder_fit(sample_expr("x1^0.5", 1, 1024), 20000);
    CHECK(root.exponent == Catch::Approx(0.5).margin(0.1));

    const auto plane = holder_fit(sample_expr("x1 + x2", 2, 128), 20000);
    CHECK(plane.exponent == Catch::Approx(1.0).margin(0.05));

    const auto flat = holder_fit(sample_expr("x1 - x1", 1, 64), 20000);
    CHECK(flat.flat);

    CHECK_THROWS_AS(holder_fit(sample_expr("x1", 1, 64), 10), ValidationError);
}

TEST_CASE("Hölder-space contraction check") {
    const auto small = holder_contraction_check(Field::constant(0.1), 0.5, uniform_net(1, 4));
    CHECK(small.holds);
    CHECK(small.a == Catch::Approx(0.25));
    CHECK(small.scaled_ratio == Catch::Approx(0.2));

    const auto big = holder_contraction_check(Field::constant(0.9), 1.0, uniform_net(1, 4));
    CHECK_FALSE(big.holds);
    CHECK(big.scaled_ratio == Catch::Approx(3.6));

    const auto mid = holder_contraction_check(Field::constant(0.3), 1.0, uniform_net(1, 2));
    CHECK(mid.holds);
    CHECK(mid.norm == Catch::Approx(0.3));

    const auto vary = holder_contraction_check(parse("0.05 + 0.05*x1"), 1.0, uniform_net(1, 2), 32,
                                               20000);
    CHECK(vary.sup == Catch::Approx(0.1));
    CHECK(vary.seminorm > 0.0);
}

TEST_CASE("cell oscillations obey the self-affine recursion") {
    // On each depth-m cell u_i(J): Osc(A) <= |delta| Osc_J(A) + Osc_J(B_i).
    const FifSpec spec{InterpolationData{uniform_net(1, 2), {0.0, 1.0, 0.0}}, 0.7};
    const auto [surf, rep] = build_fif(spec, 10);
    REQUIRE(rep.residual < 1e-9);

    std::vector<Field> b;
    for (int i = 1; i <= 2; ++i) b.push_back(corner_b_field(spec, std::vector<int>{i}));

    for (int m = 1; m <= 4; ++m) {
        const long long cells = 1LL << m;
        for (long long j = 0; j < cells; ++j) {
            const double lo = static_cast<double>(j) / static_cast<double>(cells);
            const double hi = static_cast<double>(j + 1) / static_cast<double>(cells);
            const int i = static_cast<int>(j / (cells / 2)) + 1;
            const auto& u = spec.data.net.map(0, i);
            double jlo = u.inverse(lo), jhi = u.inverse(hi);
            if (jlo > jhi) std::swap(jlo, jhi);

            const Interval child[] = {Interval{lo, hi}};
            const Interval parent[] = {Interval{jlo, jhi}};
            const double osc_child = oscillation_over_box(surf, child);
            const double osc_parent = oscillation_over_box(surf, parent);
            const double osc_b = std::abs(b[static_cast<std::size_t>(i - 1)].eval({jhi}) -
                                          b[static_cast<std::size_t>(i - 1)].eval({jlo}));
            CHECK(osc_child <= 0.7 * osc_parent + osc_b + 1e-9);
        }
    }
}

TEST_CASE("slope of a rough FIF graph tracks the known dimension") {
    // delta = 0.7, M = 2: graph dimension 2 + log(0.7)/log(2) ~ 1.485
    const FifSpec spec{InterpolationData{uniform_net(1, 2), {0.0, 1.0, 0.0}}, 0.7};
    const auto surf = build_fif(spec, 12).first;
    std::vector<BoxCountResult> rs;
    for (int m = 3; m <= 9; ++m) rs.push_back(box_count(oscillation_table(surf, m, 2)));
    const auto fit = dimension_fit(rs);
    const double expect = 2.0 + std::log(0.7) / std::log(2.0);
    CHECK(fit.lower.slope == Catch::Approx(expect).margin(0.2));
}
