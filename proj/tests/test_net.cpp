#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fif/net.hpp"

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

AxisPartition random_partition(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> mdist(2, 5);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const int M = mdist(rng);
    std::vector<double> cuts;
    for (int i = 0; i < M - 1; ++i) cuts.push_back(u(rng));
    std::sort(cuts.begin(), cuts.end());
    AxisPartition p;
    p.knots.push_back(0.0);
    double prev = 0.0;
    for (double c : cuts) {
        if (c - prev < 0.02) c = prev + 0.02; // keep subintervals non-degenerate
        p.knots.push_back(c);
        prev = c;
    }
    p.knots.push_back(1.0);
    for (std::size_t i = 1; i < p.knots.size(); ++i)
        if (p.knots[i] <= p.knots[i - 1]) p.knots[i] = p.knots[i - 1] + 0.01;
    const double last = p.knots.back();
    for (double& k : p.knots) k /= last;
    p.knots.back() = 1.0;
    return p;
}

} // namespace

TEST_CASE("affine maps solve the odd/even endpoint conditions") {
    const auto maps = build_affine_maps(uniform_partition(4));
    REQUIRE(maps.size() == 4);
    CHECK(maps[0].slope() == Catch::Approx(0.25));
    CHECK(maps[0].intercept() == Catch::Approx(0.0));
    CHECK(maps[1].slope() == Catch::Approx(-0.25));
    CHECK(maps[1].intercept() == Catch::Approx(0.5));

    const auto two = build_affine_maps(AxisPartition{{0.0, 0.5, 1.0}});
    CHECK(two[1].slope() == Catch::Approx(-0.5));
    CHECK(two[1].intercept() == Catch::Approx(1.0));
}

TEST_CASE("degenerate partitions are rejected") {
    CHECK_THROWS_AS(build_affine_maps(AxisPartition{{0.0, 0.5, 0.5, 1.0}}), ValidationError);
    CHECK_THROWS_AS(build_affine_maps(AxisPartition{{0.0, 1.0}}), ValidationError);
    CHECK_THROWS_AS(build_affine_maps(AxisPartition{{0.1, 0.5, 1.0}}), ValidationError);
}

TEST_CASE("eta index bookkeeping") {
    CHECK(eta(1, 0, 4) == 0);
    CHECK(eta(2, 0, 4) == 2);
    CHECK(eta(3, 4, 4) == 3);
    CHECK(eta(2, 4, 4) == 1);
    CHECK_THROWS_AS(eta(1, 2, 4), ValidationError);
}

TEST_CASE("locate with lower-cell tie-break") {
    const auto net = uniform_net(2, 4);
    CHECK(locate(net, std::vector<double>{0.3, 0.9}) == std::vector<int>{2, 4});
    CHECK(locate(net, std::vector<double>{0.25, 0.25}) == std::vector<int>{1, 1});
    CHECK(locate(net, std::vector<double>{1.0, 1.0}) == std::vector<int>{4, 4});
    CHECK_THROWS_AS(locate(net, std::vector<double>{1.5, 0.0}), ValidationError);
}

TEST_CASE("compose_address slopes and images") {
    const auto net2 = uniform_net(1, 2);
    const auto c11 = compose_address(net2, CellAddress{{{1, 1}}});
    CHECK(c11.maps[0].slope() == Catch::Approx(0.25));
    CHECK(c11.image[0].lo == Catch::Approx(0.0));
    CHECK(c11.image[0].hi == Catch::Approx(0.25));

    const auto c2 = compose_address(net2, CellAddress{{{2}}});
    CHECK(c2.maps[0].slope() == Catch::Approx(-0.5));
    CHECK(c2.image[0].lo == Catch::Approx(0.5));
    CHECK(c2.image[0].hi == Catch::Approx(1.0));

    const auto c22 = compose_address(net2, CellAddress{{{2, 2}}});
    CHECK(c22.maps[0].slope() == Catch::Approx(0.25));
    CHECK(c22.image[0].lo == Catch::Approx(0.5));
    CHECK(c22.image[0].hi == Catch::Approx(0.75));
}

TEST_CASE("normalize and denormalize round-trip") {
    const Net net({uniform_partition(4), uniform_partition(4)},
                  {Interval{-1.0, 1.0}, Interval{-1.0, 1.0}});
    CHECK(normalize(net, std::vector<double>{0.0, 0.0}) == std::vector<double>{0.5, 0.5});
    CHECK(normalize(net, std::vector<double>{-1.0, -1.0}) == std::vector<double>{0.0, 0.0});
    CHECK(normalize(net, std::vector<double>{1.0, -1.0}) == std::vector<double>{1.0, 0.0});
    const std::vector<double> x{0.37, -0.82};
    const auto back = denormalize(net, normalize(net, x));
    CHECK(back[0] == Catch::Approx(x[0]).margin(1e-15));
    CHECK(back[1] == Catch::Approx(x[1]).margin(1e-15));
}

TEST_CASE("random partitions satisfy endpoint and compatibility conditions") {
    std::mt19937_64 rng(20240817);
    for (int rep = 0; rep < 25; ++rep) {
        const auto p = random_partition(rng);
        const auto maps = build_affine_maps(p);
        const int M = p.subinterval_count();
        for (int i = 1; i <= M; ++i) {
            const auto& u = maps[static_cast<std::size_t>(i - 1)];
            const double left = p.knots[static_cast<std::size_t>(i - 1)];
            const double right = p.knots[static_cast<std::size_t>(i)];
            if (i % 2 == 1) {
                CHECK(u(0.0) == Catch::Approx(left).margin(1e-15));
                CHECK(u(1.0) == Catch::Approx(right).margin(1e-15));
            } else {
                CHECK(u(0.0) == Catch::Approx(right).margin(1e-15));
                CHECK(u(1.0) == Catch::Approx(left).margin(1e-15));
            }
        }
        // interior knots pull back consistently from the two adjacent cells
        for (int i = 1; i < M; ++i) {
            const double knot = p.knots[static_cast<std::size_t>(i)];
            const double a = maps[static_cast<std::size_t>(i - 1)].inverse(knot);
            const double b = maps[static_cast<std::size_t>(i)].inverse(knot);
            CHECK(a == Catch::Approx(b).margin(1e-12));
        }
    }
}

TEST_CASE("depth-m images tile the axis and locate recovers cells") {
    const auto net = uniform_net(1, 3);
    const int m = 3;
    std::vector<Interval> images;
    std::vector<int> word(static_cast<std::size_t>(m), 1);
    for (;;) {
        const auto c = compose_address(net, CellAddress{{word}});
        double prod = 1.0;
        AffineMap composed = net.map(0, word[0]);
        for (int j = 1; j < m; ++j) composed = composed.compose(net.map(0, word[static_cast<std::size_t>(j)]));
        for (int letter : word) prod *= net.map(0, letter).slope();
        CHECK(c.maps[0].slope() == Catch::Approx(prod));
        images.push_back(c.image[0]);

        int j = m;
        bool done = true;
        while (j-- > 0) {
            if (++word[static_cast<std::size_t>(j)] <= 3) { done = false; break; }
            word[static_cast<std::size_t>(j)] = 1;
        }
        if (done) break;
    }
    std::sort(images.begin(), images.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    CHECK(images.front().lo == Catch::Approx(0.0));
    CHECK(images.back().hi == Catch::Approx(1.0));
    for (std::size_t i = 1; i < images.size(); ++i)
        CHECK(images[i].lo == Catch::Approx(images[i - 1].hi).margin(1e-12));

    // an interior point of a cell image locates to that cell (depth 1)
    for (int i = 1; i <= 3; ++i) {
        const auto img = net.map(0, i).image_of_unit();
        const double mid = 0.5 * (img.lo + img.hi);
        CHECK(locate_axis(net.axis(0), mid) == i);
    }
}
