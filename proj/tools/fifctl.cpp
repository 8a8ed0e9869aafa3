// fifctl: scenario-driven builds, residual checks, dimension studies,
// axis traces, fractional-integral identity checks, and the bundled
// six-scaling example.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fif/dimension.hpp"
#include "fif/fif_core.hpp"
#include "fif/frint.hpp"
#include "fif/grid_io.hpp"
#include "fif/scenario.hpp"

using ojson = nlohmann::ordered_json;

namespace {

struct Args {
    std::string scenario;
    std::string out;
    std::string grid;
    int axis = 0;
    int threads = 1;
};

fif::SampledSurface load_surface(const fif::Scenario& sc, const fif::Net& net,
                                 const std::string& grid_path) {
    const auto g = fif::read_grid(grid_path);
    if (static_cast<int>(g.dims.size()) != net.dim())
        throw fif::ValidationError("grid/scenario mismatch: dimension count differs");
    std::vector<std::vector<double>> coords;
    for (int k = 0; k < net.dim(); ++k) {
        auto c = fif::make_axis_grid(net, k, sc.level);
        if (c.size() != g.dims[static_cast<std::size_t>(k)])
            throw fif::ValidationError("grid/scenario mismatch: axis " + std::to_string(k + 1) +
                                       " has " + std::to_string(g.dims[static_cast<std::size_t>(k)]) +
                                       " samples, scenario level implies " +
                                       std::to_string(c.size()));
        coords.push_back(std::move(c));
    }
    auto s = fif::to_surface(g, std::move(coords));
    s.level = sc.level;
    return s;
}

void write_json(const std::string& path, const ojson& j) {
    std::ofstream os(path);
    if (!os) throw fif::ValidationError("cannot open '" + path + "' for writing");
    os << j.dump(2) << "\n";
}

ojson report_json(const fif::FixedPointReport& rep) {
    ojson j;
    j["iterations"] = rep.iterations;
    j["final_change"] = rep.final_change;
    j["contraction_ratio"] = rep.contraction_ratio;
    j["coefficient_sup"] = rep.coefficient_sup;
    j["residual"] = rep.residual;
    j["cell_mismatch"] = rep.cell_mismatch;
    j["corner_mismatch"] = rep.corner_mismatch;
    return j;
}

std::pair<fif::SampledSurface, fif::FixedPointReport> build_from_scenario(
    const fif::Scenario& sc, int threads) {
    if (sc.kind == "fif") {
        return fif::build_fif(fif::make_fif_spec(sc), sc.level, sc.tol, sc.max_iterations,
                              threads);
    }
    return fif::build_alpha(fif::make_alpha_spec(sc), sc.level, sc.tol, sc.max_iterations,
                            threads);
}

int cmd_build(const Args& a) {
    const auto sc = fif::load_scenario(a.scenario);
    auto [surf, rep] = build_from_scenario(sc, a.threads);
    fif::write_grid(a.out, fif::to_grid_data(surf));
    ojson j;
    j["command"] = "build";
    j["kind"] = sc.kind;
    j["level"] = sc.level;
    j["report"] = report_json(rep);
    write_json(a.out + ".json", j);
    std::printf("built %s grid: %zu samples, residual %.3e\n", sc.kind.c_str(),
                surf.values.size(), rep.residual);
    return 0;
}

int cmd_residual(const Args& a) {
    const auto sc = fif::load_scenario(a.scenario);
    const auto net = fif::make_net(sc);
    const auto surf = load_surface(sc, net, a.grid);
    fif::ResidualReport rr;
    if (sc.kind == "fif")
        rr = fif::residual_report(fif::make_fif_spec(sc), surf);
    else
        rr = fif::residual_report(fif::make_alpha_spec(sc), surf);
    std::printf("max residual %.6e (cell mismatch %.6e)\n", rr.max_residual, rr.cell_mismatch);
    if (rr.max_residual > 10.0 * sc.tol)
        throw fif::NumericalError("residual exceeds 10x scenario tolerance");
    return 0;
}

double sampled_min_abs(const fif::Field& f, const fif::Net& net, int n = 64) {
    const auto s = fif::sample_surface(
        [&](std::span<const double> x) { return std::abs(f.eval(x)); }, net.domain(),
        static_cast<std::size_t>(n));
    double m = s.values.front();
    for (double v : s.values) m = std::min(m, v);
    return m;
}

int cmd_dim(const Args& a) {
    const auto sc = fif::load_scenario(a.scenario);
    const auto net = fif::make_net(sc);
    const auto surf = load_surface(sc, net, a.grid);

    int mesh = sc.dimension.mesh;
    int m1 = 2;
    for (int k = 0; k < net.dim(); ++k) m1 = std::max(m1, net.subintervals(k));
    if (mesh == 0) mesh = m1;

    std::vector<fif::BoxCountResult> counts;
    for (int m = sc.dimension.m_min; m <= sc.dimension.m_max; ++m)
        counts.push_back(fif::box_count(fif::oscillation_table(surf, m, mesh)));

    std::ofstream csv(a.out);
    if (!csv) throw fif::ValidationError("cannot open '" + a.out + "' for writing");
    csv << "m,delta,N_lower,N_upper\n";
    for (const auto& c : counts)
        csv << c.m << "," << c.delta << "," << c.lower << "," << c.upper << "\n";
    csv.close();

    const auto fit = fif::dimension_fit(counts);

    fif::Field alpha =
        sc.kind == "fif" ? fif::Field::constant(std::abs(sc.delta)) : fif::parse(sc.scale);
    const double amax = fif::sup_norm(alpha, net).global;
    const double amin = sampled_min_abs(alpha, net);
    const double gbar = fif::gamma_bar(alpha, net);
    const double sigma = sc.dimension.sigma;
    const auto bounds =
        fif::theoretical_bounds(net.dim(), mesh, m1, sigma, amin, amax, gbar);
    const auto hc = fif::holder_contraction_check(alpha, sigma, net);

    ojson j;
    j["command"] = "dim";
    j["mesh"] = mesh;
    j["m_min"] = sc.dimension.m_min;
    j["m_max"] = sc.dimension.m_max;
    j["slope_lower"] = fit.lower.slope;
    j["stderr_lower"] = fit.lower.stderr_;
    j["slope_upper"] = fit.upper.slope;
    j["stderr_upper"] = fit.upper.stderr_;
    j["alpha_min"] = amin;
    j["alpha_max"] = amax;
    j["gamma_bar"] = gbar;
    j["sigma"] = sigma;
    j["case"] = bounds.case_label;
    j["bound_upper"] = bounds.upper;
    j["bound_lower"] = bounds.lower;
    j["bound_clamped"] = bounds.clamped;
    j["holder_check"] = hc.holds;
    j["holder_scaled_ratio"] = hc.scaled_ratio;
    j["holder_norm"] = hc.norm;
    write_json(a.out + ".json", j);
    std::printf("slope %.4f +- %.4f, case %s bound %.4f\n", fit.lower.slope, fit.lower.stderr_,
                bounds.case_label.c_str(), bounds.upper);
    return 0;
}

int cmd_trace(const Args& a) {
    const auto sc = fif::load_scenario(a.scenario);
    if (sc.kind != "alpha")
        throw fif::ValidationError("trace: only alpha scenarios restrict to an axis");
    const auto spec = fif::make_alpha_spec(sc);
    const auto surf = load_surface(sc, spec.net, a.grid);
    const auto tr = fif::axis_trace(spec, surf, a.axis);
    fif::write_grid(a.out, fif::to_grid_data(tr.line));
    const auto rr = fif::residual_report(tr.induced, tr.line);
    ojson j;
    j["command"] = "trace";
    j["axis"] = a.axis;
    j["induced_residual"] = rr.max_residual;
    j["induced_cell_mismatch"] = rr.cell_mismatch;
    write_json(a.out + ".json", j);
    std::printf("axis %d trace: induced residual %.3e\n", a.axis, rr.max_residual);
    return 0;
}

int cmd_frint(const Args& a) {
    const auto sc = fif::load_scenario(a.scenario);
    if (sc.kind != "fif")
        throw fif::ValidationError("frint: identity checks need a fif scenario");
    if (sc.frint.beta.empty())
        throw fif::ValidationError("scenario.frint: missing for the frint command");
    const auto spec = fif::make_fif_spec(sc);
    fif::FracOrder beta{sc.frint.beta};
    fif::QuadratureSpec quad{sc.frint.panels, sc.frint.refinements, 2};

    fif::FrintIdentityReport rep;
    if (!a.grid.empty()) {
        const auto surf = load_surface(sc, spec.data.net, a.grid);
        rep = fif::verify_identity(surf, spec, beta, {}, sc.frint.points_per_cell, quad,
                                   sc.seed);
    } else {
        rep = fif::verify_identity(spec, beta, {}, sc.frint.points_per_cell, quad, sc.level, 1,
                                   sc.tol, sc.max_iterations, a.threads, sc.seed);
    }

    ojson j;
    j["command"] = "frint";
    j["beta"] = sc.frint.beta;
    j["panels"] = rep.panels;
    j["max_residual"] = rep.max_residual;
    j["observed_order"] = rep.observed_order;
    ojson pts = ojson::array();
    for (const auto& chk : rep.checks.back()) {
        ojson p;
        p["cell"] = chk.cell;
        p["x"] = chk.x;
        p["lhs"] = chk.lhs;
        p["rhs"] = chk.rhs;
        p["residual"] = chk.residual;
        pts.push_back(std::move(p));
    }
    j["finest_points"] = std::move(pts);
    write_json(a.out, j);
    std::printf("identity: finest residual %.3e, observed order %.2f\n",
                rep.max_residual.back(), rep.observed_order);
    return 0;
}

fif::Scenario fig1_scenario(double alpha) {
    fif::Scenario sc;
    sc.kind = "alpha";
    sc.domain = {{-1.0, 1.0}, {-1.0, 1.0}};
    sc.knots = {{-1.0, -0.5, 0.0, 0.5, 1.0}, {-1.0, -0.5, 0.0, 0.5, 1.0}};
    sc.germ = "41*(x2^3 - x1^5)^2 + (x2 - x1^2)^3";
    sc.base = "x1^3*x2^5*(41*(x2^3 - x1^5)^2 + (x2 - x1^2)^3)";
    sc.scale = std::to_string(alpha);
    sc.level = 5;       // 4^5 + 1 = 1025 samples per axis
    sc.tol = 1e-11;
    sc.max_iterations = 2000;
    sc.corner_check = false; // the base disagrees with the germ at two corners
    sc.dimension.m_min = 2;
    sc.dimension.m_max = 5;
    return sc;
}

int cmd_fig1(const Args& a) {
    namespace fs = std::filesystem;
    fs::create_directories(a.out);
    const double alphas[] = {0.1, 0.2, 0.4, 0.5, 0.7, 0.9};

    std::ofstream csv(a.out + "/summary.csv");
    if (!csv) throw fif::ValidationError("cannot open summary.csv for writing");
    csv << "alpha,slope_lower,stderr_lower,slope_upper,iterations,residual,corner_mismatch\n";
    ojson all = ojson::array();
    for (double alpha : alphas) {
        const auto sc = fig1_scenario(alpha);
        const auto spec = fif::make_alpha_spec(sc);
        auto [surf, rep] =
            fif::build_alpha(spec, sc.level, sc.tol, sc.max_iterations, a.threads);
        char name[64];
        std::snprintf(name, sizeof name, "%s/alpha_%.1f.grid", a.out.c_str(), alpha);
        fif::write_grid(name, fif::to_grid_data(surf));

        std::vector<fif::BoxCountResult> counts;
        for (int m = sc.dimension.m_min; m <= sc.dimension.m_max; ++m)
            counts.push_back(fif::box_count(fif::oscillation_table(surf, m, 4)));
        const auto fit = fif::dimension_fit(counts);
        csv << alpha << "," << fit.lower.slope << "," << fit.lower.stderr_ << ","
            << fit.upper.slope << "," << rep.iterations << "," << rep.residual << ","
            << rep.corner_mismatch << "\n";

        ojson j;
        j["alpha"] = alpha;
        j["grid"] = name;
        j["slope_lower"] = fit.lower.slope;
        j["slope_upper"] = fit.upper.slope;
        j["report"] = report_json(rep);
        all.push_back(std::move(j));
        std::printf("alpha %.1f: %d iterations, slope %.3f\n", alpha, rep.iterations,
                    fit.lower.slope);
    }
    write_json(a.out + "/summary.json", all);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractal interpolation toolkit"};
    app.require_subcommand(1);
    Args a;

    auto add_common = [&](CLI::App* sub, bool need_scenario, bool need_out, bool need_grid) {
        if (need_scenario)
            sub->add_option("--scenario", a.scenario, "scenario JSON path")->required();
        if (need_out) sub->add_option("--out", a.out, "output path")->required();
        auto* g = sub->add_option("--grid", a.grid, "input GridFile path");
        if (need_grid) g->required();
        sub->add_option("--threads", a.threads, "worker threads");
    };

    auto* b = app.add_subcommand("build", "build a surface and write grid + report");
    add_common(b, true, true, false);
    auto* r = app.add_subcommand("residual", "check the self-referential residual of a grid");
    add_common(r, true, false, true);
    auto* d = app.add_subcommand("dim", "box-count dimension study; writes CSV + report");
    add_common(d, true, true, true);
    auto* t = app.add_subcommand("trace", "restrict a surface to one axis");
    add_common(t, true, true, true);
    t->add_option("--axis", a.axis, "axis index (0-based)");
    auto* f = app.add_subcommand("frint", "fractional-integral identity check");
    add_common(f, true, true, false);
    auto* g1 = app.add_subcommand("fig1", "run the bundled six-scaling example");
    add_common(g1, false, true, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (b->parsed()) return cmd_build(a);
        if (r->parsed()) return cmd_residual(a);
        if (d->parsed()) return cmd_dim(a);
        if (t->parsed()) return cmd_trace(a);
        if (f->parsed()) return cmd_frint(a);
        if (g1->parsed()) return cmd_fig1(a);
    } catch (const fif::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const fif::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 1;
    } catch (const fif::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 2;
    }
    return 0;
}
