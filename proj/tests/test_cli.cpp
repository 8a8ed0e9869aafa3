#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "fif/grid_io.hpp"
#include "fif/scenario.hpp"

namespace fs = std::filesystem;

namespace {

std::string fifctl() { return FIFCTL_PATH; }
std::string data(const std::string& f) { return std::string(TEST_DATA_DIR) + "/" + f; }

fs::path workdir() {
    static const fs::path p = [] {
        auto d = fs::temp_directory_path() / "fifctl_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return p;
}

int run(const std::string& args, const std::string& stderr_file = "") {
    std::string cmd = fifctl() + " " + args + " > /dev/null";
    cmd += stderr_file.empty() ? " 2>&1" : " 2> " + stderr_file;
    const int st = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(st));
    return WEXITSTATUS(st);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

nlohmann::json slurp_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

} // namespace

TEST_CASE("build writes a valid grid and report") {
    const auto grid = workdir() / "tent.grid";
    REQUIRE(run("build --scenario " + data("tent.json") + " --out " + grid.string()) == 0);

    const auto g = fif::read_grid(grid.string());
    REQUIRE(g.dims.size() == 1);
    CHECK(g.dims[0] == 65); // 2^6 + 1
    CHECK(g.domain[0].lo == 0.0);
    CHECK(g.domain[0].hi == 1.0);
    for (double v : g.values) CHECK(std::isfinite(v));
    CHECK(g.values[32] == Catch::Approx(1.0).margin(1e-10)); // knot at 0.5

    const auto j = slurp_json(grid.string() + ".json");
    CHECK(j.at("command") == "build");
    CHECK(j.at("kind") == "fif");
    CHECK(j.at("report").at("residual").get<double>() < 1e-10);
}

TEST_CASE("build output is deterministic") {
    const auto a = workdir() / "det_a.grid";
    const auto b = workdir() / "det_b.grid";
    REQUIRE(run("build --scenario " + data("tent.json") + " --out " + a.string()) == 0);
    REQUIRE(run("build --scenario " + data("tent.json") + " --out " + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("grid files round-trip bit-exactly") {
    const auto src = workdir() / "tent.grid"; // from the build test above
    if (!fs::exists(src))
        REQUIRE(run("build --scenario " + data("tent.json") + " --out " + src.string()) == 0);
    const auto g = fif::read_grid(src.string());
    const auto copy = workdir() / "roundtrip.grid";
    fif::write_grid(copy.string(), g);
    CHECK(slurp(src) == slurp(copy));
}

TEST_CASE("residual accepts a correct grid and rejects a tampered one") {
    const auto grid = workdir() / "res.grid";
    REQUIRE(run("build --scenario " + data("tent.json") + " --out " + grid.string()) == 0);
    CHECK(run("residual --scenario " + data("tent.json") + " --grid " + grid.string()) == 0);

    auto g = fif::read_grid(grid.string());
    g.values[g.values.size() / 3] += 0.25;
    const auto bad = workdir() / "res_bad.grid";
    fif::write_grid(bad.string(), g);
    CHECK(run("residual --scenario " + data("tent.json") + " --grid " + bad.string()) == 2);

    // a grid whose resolution contradicts the scenario level is a validation error
    CHECK(run("residual --scenario " + data("alpha2d.json") + " --grid " + grid.string()) == 1);
}

TEST_CASE("dim writes the CSV table and the JSON report") {
    const auto grid = workdir() / "dim.grid";
    REQUIRE(run("build --scenario " + data("tent.json") + " --out " + grid.string()) == 0);
    const auto csv = workdir() / "dim.csv";
    REQUIRE(run("dim --scenario " + data("tent.json") + " --grid " + grid.string() + " --out " +
                csv.string()) == 0);

    std::istringstream is(slurp(csv));
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "m,delta,N_lower,N_upper");
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4); // m = 1..4

    const auto j = slurp_json(csv.string() + ".json");
    CHECK(j.at("mesh") == 2);
    // delta = 0.5 = 1/M: the graph is rectifiable, slope near 1
    CHECK(j.at("slope_lower").get<double>() == Catch::Approx(1.0).margin(0.2));
    CHECK(j.at("alpha_max").get<double>() == Catch::Approx(0.5));
    CHECK(j.contains("case"));
    CHECK(j.at("bound_upper").get<double>() >= 1.0);
}

TEST_CASE("trace restricts an alpha surface to one axis") {
    const auto grid = workdir() / "alpha2d.grid";
    REQUIRE(run("build --scenario " + data("alpha2d.json") + " --out " + grid.string()) == 0);
    const auto tr = workdir() / "trace.grid";
    REQUIRE(run("trace --scenario " + data("alpha2d.json") + " --grid " + grid.string() +
                " --axis 0 --out " + tr.string()) == 0);

    const auto line = fif::read_grid(tr.string());
    REQUIRE(line.dims.size() == 1);
    CHECK(line.dims[0] == 33);
    const auto full = fif::read_grid(grid.string());
    for (std::size_t j = 0; j < 33; ++j) CHECK(line.values[j] == full.values[j * 33]);

    const auto j = slurp_json(tr.string() + ".json");
    CHECK(j.at("axis") == 0);
    CHECK(j.at("induced_residual").get<double>() <= 1e-8);

    // fif scenarios have no expression fields to restrict
    CHECK(run("trace --scenario " + data("tent.json") + " --grid " + grid.string() + " --out " +
              (workdir() / "x.grid").string()) == 1);
}

TEST_CASE("frint runs the identity study") {
    const auto out = workdir() / "frint.json";
    REQUIRE(run("frint --scenario " + data("tent.json") + " --out " + out.string()) == 0);
    const auto j = slurp_json(out);
    CHECK(j.at("beta") == nlohmann::json::array({1.0}));
    REQUIRE(j.at("panels").size() == 3);
    CHECK(j.at("panels")[0] == 16);
    const auto res = j.at("max_residual").get<std::vector<double>>();
    REQUIRE(res.size() == 3);
    CHECK(res.back() < res.front());
    CHECK(j.at("observed_order").get<double>() >= 0.5);
    CHECK_FALSE(j.at("finest_points").empty());

    // alpha scenarios carry no vertical-scaling delta for the identity
    CHECK(run("frint --scenario " + data("alpha2d.json") + " --out " +
              (workdir() / "y.json").string()) == 1);
}

TEST_CASE("scenario errors map to exit code 1 with named paths") {
    const auto err = workdir() / "err.txt";
    CHECK(run("build --scenario " + data("bad_kind.json") + " --out " +
              (workdir() / "z.grid").string(), err.string()) == 1);
    CHECK(slurp(err).find("scenario.kind") != std::string::npos);

    CHECK(run("build --scenario " + data("malformed.json") + " --out " +
              (workdir() / "z.grid").string(), err.string()) == 1);
    CHECK(slurp(err).find("parse error") != std::string::npos);

    CHECK(run("build --scenario " + data("nonexistent.json") + " --out " +
              (workdir() / "z.grid").string()) == 1);
}

TEST_CASE("scenario parsing names the offending path") {
    using nlohmann::json;
    auto base = json::parse(slurp(data("tent.json")));

    auto expect_throw = [](const json& j, const std::string& needle) {
        try {
            fif::parse_scenario(j);
            FAIL("expected a ValidationError mentioning " + needle);
        } catch (const fif::ValidationError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    CHECK_NOTHROW(fif::parse_scenario(base));

    auto j = base;
    j.erase("delta");
    expect_throw(j, "scenario.delta");

    j = base;
    j["schema_version"] = 2;
    expect_throw(j, "scenario.schema_version");

    j = base;
    j["knots"][0] = {0.0, 0.7, 0.5, 1.0};
    expect_throw(j, "scenario.knots[0]");

    j = base;
    j["domain"][0] = {1.0, 0.0};
    expect_throw(j, "scenario.domain[0]");

    j = base;
    j["frint"]["beta"] = {1.0, 1.0};
    expect_throw(j, "scenario.frint.beta");

    j = base;
    j["dimension"]["m_max"] = 1;
    expect_throw(j, "scenario.dimension");

    j = base;
    j["tol"] = 0.0;
    expect_throw(j, "scenario.tol");
}

TEST_CASE("grid reader rejects corrupted files") {
    const auto p = workdir() / "corrupt.grid";
    {
        std::ofstream os(p, std::ios::binary);
        os << "NOTAGRID and then some";
    }
    CHECK_THROWS_AS(fif::read_grid(p.string()), fif::ParseError);

    const auto good = workdir() / "tent.grid";
    if (!fs::exists(good))
        REQUIRE(run("build --scenario " + data("tent.json") + " --out " + good.string()) == 0);
    const auto truncated = workdir() / "trunc.grid";
    const auto bytes = slurp(good);
    {
        std::ofstream os(truncated, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 16));
    }
    CHECK_THROWS_AS(fif::read_grid(truncated.string()), fif::ParseError);
}
