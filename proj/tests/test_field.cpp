#include <catch2/catch_amalgamated.hpp>

#include "fif/field.hpp"
#include "fif/net.hpp"

using namespace fif;

TEST_CASE("expression evaluation") {
    CHECK(parse("x1^2 + x2^2").eval({0.5, 0.5}) == Catch::Approx(0.5));
    CHECK(parse("41*(x2^3 - x1^5)^2 + (x2 - x1^2)^3").eval({0.0, 0.0}) == Catch::Approx(0.0));
    CHECK(parse("sin(0)").eval({0.0}) == Catch::Approx(0.0));
    CHECK(parse("x1*x2").eval({0.25, 0.5}) == Catch::Approx(0.125));
    CHECK(parse("cos(0) + exp(0) + abs(0-3)").eval({0.0}) == Catch::Approx(5.0));
}

TEST_CASE("precedence and associativity") {
    CHECK(parse("2^3^2").eval({0.0}) == Catch::Approx(512.0));   // right-assoc power
    CHECK(parse("-2^2").eval({0.0}) == Catch::Approx(-4.0));     // unary binds looser than ^
    CHECK(parse("1-2-3").eval({0.0}) == Catch::Approx(-4.0));    // left-assoc subtraction
    CHECK(parse("2+3*4").eval({0.0}) == Catch::Approx(14.0));
    CHECK(parse("1/2/2").eval({0.0}) == Catch::Approx(0.25));
    CHECK(parse("1.5e2").eval({0.0}) == Catch::Approx(150.0));
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("x1 +"), ParseError);
    CHECK_THROWS_AS(parse("foo(x1)"), ParseError);
    CHECK_THROWS_AS(parse("x10"), ParseError); // only x1..x9
    CHECK_THROWS_AS(parse("sin(x1, x2)"), ParseError);
    CHECK_THROWS_AS(parse("(x1"), ParseError);
    try {
        parse("x1 + @");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 5);
    }
}

TEST_CASE("evaluation errors name the subexpression") {
    CHECK_THROWS_AS(parse("1/0").eval({0.0}), NumericalError);
    CHECK_THROWS_AS(parse("1/x1").eval({0.0}), NumericalError);
    CHECK_THROWS_AS(parse("0^(0-1)").eval({0.0}), NumericalError);
    try {
        parse("x1 + 1/(x1-x1)").eval({2.0});
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("(x1 - x1)") != std::string::npos);
    }
}

TEST_CASE("pretty-print is a fixed point of parse") {
    for (const char* src : {"x1^2 + x2^2", "-x1*(3-x2)/2", "sin(cos(x1))+exp(0-x2^3)",
                            "41*(x2^3 - x1^5)^2 + (x2 - x1^2)^3"}) {
        const std::string once = parse(src).to_string();
        const std::string twice = parse(once).to_string();
        CHECK(once == twice);
        CHECK(parse(once).eval({0.3, 0.7}) == Catch::Approx(parse(src).eval({0.3, 0.7})));
    }
}

TEST_CASE("constant and sampled fields") {
    CHECK(Field::constant(0.3).eval({0.123}) == Catch::Approx(0.3));

    const auto grid = Field::sampled({2, 2}, {0.0, 1.0, 1.0, 2.0},
                                     {Interval{0.0, 1.0}, Interval{0.0, 1.0}});
    CHECK(grid.eval({0.5, 0.5}) == Catch::Approx(1.0));
    // sample points reproduce stored values exactly
    CHECK(grid.eval({0.0, 0.0}) == 0.0);
    CHECK(grid.eval({0.0, 1.0}) == 1.0);
    CHECK(grid.eval({1.0, 0.0}) == 1.0);
    CHECK(grid.eval({1.0, 1.0}) == 2.0);

    double c = 0.0;
    CHECK(Field::constant(0.5).is_constant(&c));
    CHECK(c == 0.5);
    CHECK_FALSE(parse("x1").is_constant());
}

TEST_CASE("sliced fields pin the other coordinates") {
    const auto f = parse("x1^2 + x2^2");
    const auto g = f.sliced(0, {0.0, 0.25});
    CHECK(g.eval({0.5}) == Catch::Approx(0.25 + 0.0625));
}

namespace {
Net uniform_net(int q, int M) {
    AxisPartition p;
    for (int i = 0; i <= M; ++i) p.knots.push_back(static_cast<double>(i) / M);
    std::vector<AxisPartition> axes(static_cast<std::size_t>(q), p);
    std::vector<Interval> dom(static_cast<std::size_t>(q), Interval{0.0, 1.0});
    return Net(std::move(axes), std::move(dom));
}
} // namespace

TEST_CASE("sup_norm global and per-cell maxima") {
    const auto net1 = uniform_net(1, 2);
    const auto c = sup_norm(Field::constant(0.5), net1);
    CHECK(c.global == Catch::Approx(0.5));
    CHECK(c.cell_max == std::vector<double>{0.5, 0.5});

    const auto lin = sup_norm(parse("x1"), net1);
    CHECK(lin.global == Catch::Approx(1.0));
    CHECK(lin.cell_max[0] == Catch::Approx(0.5));
    CHECK(lin.cell_max[1] == Catch::Approx(1.0));

    const auto net2 = uniform_net(2, 2);
    const auto prod = sup_norm(parse("x1*x2"), net2);
    CHECK(prod.cell_max[0] == Catch::Approx(0.25)); // cell [0,0.5]^2
    CHECK(prod.global == Catch::Approx(1.0));

    // sampling never exceeds, and lower-bounds, the true sup
    const auto probe = parse("sin(3*x1)");
    const auto sn = sup_norm(probe, net1);
    for (double x : {0.1, 0.33, 0.5, 0.77, 0.98})
        CHECK(sn.global >= std::abs(probe.eval({x})) - 1e-3);
}
