#include "afa/pipeline.hpp"

#include "afa/errors.hpp"
#include "afa/husimi.hpp"
#include "afa/svg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

namespace afa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class Body>
StageReport run_stage(const RunConfig& cfg, const std::string& name, Body&& body) {
    validate(cfg);
    StageReport rep;
    rep.stage = name;
    rep.dir = cfg.out / name;
    fs::remove_all(rep.dir);
    fs::create_directories(rep.dir);
    try {
        std::ofstream(rep.dir / "config.ini") << canonical_ini(cfg);
        rep.summary = body(rep.dir, config_hash(cfg));
        write_json(rep.dir / "summary.json", rep.summary);
        write_manifest(rep.dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(rep.dir, ec);
        throw;
    }
    return rep;
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, n); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        f(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

struct Window {
    double x_cut;
    double x_max;
    double h;
};

Window wedge_window(const RunConfig& cfg) {
    const PhysParams p = cfg.params();
    const Truncation t = truncation_rule(p, cfg.energy);
    return {cfg.x_cut >= 0.0 ? cfg.x_cut : t.x_cut, cfg.x_max > 0.0 ? cfg.x_max : t.x_max,
            cfg.target_h > 0.0 ? cfg.target_h : element_size_for(p, cfg.energy, cfg.kh)};
}

SpectrumOptions spectrum_options(const RunConfig& cfg) {
    const Window w = wedge_window(cfg);
    SpectrumOptions o;
    o.target = cfg.effective_shift();
    o.n_pairs = cfg.pairs;
    o.h = w.h;
    o.kh = cfg.kh;
    o.order = cfg.order;
    o.edge_grading = cfg.grading;
    o.x_max = w.x_max;
    o.x_cut = w.x_cut;
    o.max_triangles = static_cast<std::size_t>(cfg.max_triangles);
    o.seed = cfg.seed;
    return o;
}

BOGrid bo_grid(const RunConfig& cfg) {
    const Window w = wedge_window(cfg);
    BOGrid g;
    g.R_min = w.x_cut;
    g.R_max = w.x_max;
    g.n_points = cfg.bo_points;
    return g;
}

const char* order_name(ElementOrder o) { return o == ElementOrder::P1 ? "p1" : "p2"; }

// Every k-th element so that at most `limit` remain.
template <class T>
std::vector<T> thin(const std::vector<T>& v, std::size_t limit) {
    if (v.size() <= limit) return v;
    const std::size_t k = (v.size() + limit - 1) / limit;
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); i += k) out.push_back(v[i]);
    return out;
}

// ----------------------------------------------------------------------------
// validate

bool collision_algebra(std::size_t cases, double& worst_momentum, double& worst_energy) {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> vel(-10.0, 10.0);
    std::uniform_real_distribution<double> leta(-4.0, -0.01);
    worst_momentum = worst_energy = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        const double eta = std::pow(10.0, leta(rng));
        const double v = vel(rng);
        const double V = vel(rng);
        const Velocities out = elastic_collision(v, V, eta);
        const double p0 = eta * v + V;
        const double p1 = eta * out.particle + out.wall;
        const double e0 = eta * v * v + V * V;
        const double e1 = eta * out.particle * out.particle + out.wall * out.wall;
        const double pscale = eta * std::abs(v) + std::abs(V);
        worst_momentum = std::max(worst_momentum, std::abs(p1 - p0) / pscale);
        worst_energy = std::max(worst_energy, std::abs(e1 - e0) / e0);
    }
    return worst_momentum < 1e-12 && worst_energy < 1e-12;
}

} // namespace

StageReport cmd_validate(const RunConfig& cfg) {
    return run_stage(cfg, "validate", [&](const fs::path& dir, const std::string&) {
        json report;
        bool all = true;

        double dp = 0.0, de = 0.0;
        const bool alg = collision_algebra(100000, dp, de);
        report["collision_algebra"] = {{"cases", 100000}, {"max_rel_momentum", dp}, {"max_rel_energy", de},
                                       {"tolerance", 1e-12}, {"passed", alg}};
        all = all && alg;

        const TriangleReport tri = validate_triangle_spectrum(1.0, 0.01, 2, ElementOrder::P1);
        bool tri_ok = tri.max_rel_error[0] < 0.005;
        for (double o : tri.orders) tri_ok = tri_ok && std::abs(o - 2.0) <= 0.2;
        json levels = json::array();
        for (const auto& l : tri.levels) {
            levels.push_back({{"m", l.m}, {"n", l.n}, {"exact", l.exact}, {"computed", l.computed},
                              {"rel_error", l.rel_error}});
        }
        report["triangle"] = {{"L", 1.0},          {"h", tri.h},           {"max_rel_error", tri.max_rel_error},
                              {"orders", tri.orders}, {"levels", levels},  {"nodal_crossings", tri.nodal_crossings},
                              {"passed", tri_ok}};
        all = all && tri_ok;

        const PhysParams p = cfg.params();
        const auto hook = solve_channel(1, p, bo_grid(cfg), cfg.energy, BOOptions{false, false});
        double worst = 0.0;
        json hl = json::array();
        const int top = std::min<int>(11, static_cast<int>(hook.levels.size()));
        for (int nu = 0; nu < top; ++nu) {
            const double exact = p.hbar() * p.omega() * (nu + 0.5);
            const double rel = std::abs(hook.levels[nu].E - exact) / exact;
            worst = std::max(worst, rel);
            hl.push_back({{"nu", nu}, {"E", hook.levels[nu].E}, {"exact", exact}, {"rel_error", rel}});
        }
        const bool hook_ok = top == 11 && worst < 1e-4;
        report["harmonic_hook"] = {{"levels", hl}, {"max_rel_error", worst}, {"passed", hook_ok}};
        all = all && hook_ok;

        write_json(dir / "report.json", report);
        return json{{"passed", all},
                    {"collision_algebra", alg},
                    {"triangle", tri_ok},
                    {"harmonic_hook", hook_ok}};
    });
}

// ----------------------------------------------------------------------------
// classical

StageReport cmd_classical(const RunConfig& cfg) {
    return run_stage(cfg, "classical", [&](const fs::path& dir, const std::string& hash) {
        const PhysParams p = cfg.params();
        std::vector<Trajectory> ens;
        if (!cfg.initial.empty()) {
            Trajectory t;
            t.initial = cfg.initial_state();
            t.events = simulate(t.initial, static_cast<std::size_t>(cfg.events), p);
            for (const auto& e : t.events) t.double_count += e.double_flag ? 1 : 0;
            ens.push_back(std::move(t));
        } else {
            EnsembleOptions eo;
            eo.n_trajectories = cfg.trajectories;
            eo.n_events = static_cast<std::size_t>(cfg.events);
            eo.seed = cfg.seed;
            eo.energy = cfg.energy;
            ens = run_ensemble(p, eo);
        }
        for (const auto& t : ens) {
            if (!t.failure.empty()) {
                throw NumericalError("trajectory " + std::to_string(t.id) + " stopped: " + t.failure);
            }
        }

        double drift = 0.0;
        {
            CsvWriter ev(dir / "events.csv", {"traj", "index", "t", "kind", "R", "P", "r", "p", "double_flag"}, hash);
            CsvWriter tr(dir / "trajectories.csv",
                         {"traj", "R", "P", "r", "p", "energy", "events", "double_count", "regular"}, hash);
            for (const auto& t : ens) {
                const double e0 = total_energy(t.initial, p);
                tr << t.id << t.initial.R << t.initial.P << t.initial.r << t.initial.p << e0 << t.events.size()
                   << t.double_count << (t.regular() ? 1 : 0);
                tr.end_row();
                for (std::size_t i = 0; i < t.events.size(); ++i) {
                    const auto& e = t.events[i];
                    const auto& s = e.state_after;
                    ev << t.id << i << e.t << to_string(e.kind) << s.R << s.P << s.r << s.p << (e.double_flag ? 1 : 0);
                    ev.end_row();
                    drift = std::max(drift, std::abs(total_energy(s, p) - e0) / e0);
                }
            }
            ev.close();
            tr.close();
        }

        // sections and the equatorial band
        std::size_t flagged = 0, flagged_in_band = 0, regular_in_band = 0;
        std::vector<Point2> sea_cm;
        json frames = json::array();
        for (SectionFrame frame : {SectionFrame::Particle, SectionFrame::CenterOfMass}) {
            const bool want = cfg.frame == "both" || (frame == SectionFrame::Particle) == (cfg.frame == "particle");
            const std::string tag = frame == SectionFrame::Particle ? "particle" : "cm";
            std::unique_ptr<CsvWriter> out;
            if (want) {
                out = std::make_unique<CsvWriter>(dir / ("section_" + tag + ".csv"),
                                                  std::vector<std::string>{"traj", "t", "q", "mom", "X", "Y", "Z",
                                                                           "regular"},
                                                  hash);
                frames.push_back(tag);
            }
            ScatterSeries reg{{}, {}, "#1f77b4", 0.7, "no double collision"};
            ScatterSeries cha{{}, {}, "#d62728", 0.7, "double collisions"};
            for (const auto& t : ens) {
                const auto sec = poincare_section(t.events, frame, p);
                double min_y = std::numeric_limits<double>::infinity();
                for (const auto& s : sec) {
                    if (out) {
                        *out << t.id << s.t << s.q << s.mom << s.sphere.X << s.sphere.Y << s.sphere.Z
                             << (t.regular() ? 1 : 0);
                        out->end_row();
                    }
                    auto& series = t.regular() ? reg : cha;
                    series.x.push_back(s.q);
                    series.y.push_back(s.mom);
                    min_y = std::min(min_y, std::abs(s.sphere.Y));
                    if (frame == SectionFrame::CenterOfMass && !t.regular()) sea_cm.push_back({s.R, s.P});
                }
                if (frame == SectionFrame::CenterOfMass) {
                    const bool in_band = min_y <= kEquatorBand * std::sqrt(total_energy(t.initial, p));
                    if (t.double_count > 0) {
                        ++flagged;
                        flagged_in_band += in_band ? 1 : 0;
                    } else {
                        regular_in_band += in_band ? 1 : 0;
                    }
                }
            }
            if (!out) continue;
            out->close();
            const double e = cfg.energy;
            PlotFrame f;
            f.title = "section, " + std::string(frame == SectionFrame::Particle ? "particle" : "center of mass") +
                      " frame, eta = " + format_double(cfg.eta);
            f.x_label = "R";
            f.y_label = frame == SectionFrame::Particle ? "p" : "P";
            const double pm = frame == SectionFrame::Particle ? std::sqrt(2.0 * p.m() * e) : std::sqrt(2.0 * p.M() * e);
            f.x_min = std::max(0.0, p.R0() - std::sqrt(2.0 * e / p.k()) - 0.5);
            f.x_max = p.R0() + std::sqrt(2.0 * e / p.k()) + 0.5;
            f.y_min = -1.05 * pm;
            f.y_max = 1.05 * pm;
            SvgFigure fig(f);
            fig.scatter(ScatterSeries{thin(cha.x, 20000), thin(cha.y, 20000), cha.color, cha.radius, cha.label});
            fig.scatter(ScatterSeries{thin(reg.x, 20000), thin(reg.y, 20000), reg.color, reg.radius, reg.label});
            fig.save(dir / ("section_" + tag + ".svg"));
        }

        const IslandFraction isl = regular_island_fraction(ens, p, cfg.cell_size);
        const AreaEstimate sea = chaotic_area_estimate(sea_cm, cfg.cell_size);
        const double action_cell = cfg.action_cell > 0.0 ? cfg.action_cell : p.hbar() / 16.0;
        const AreaEstimate act = chaotic_action_area(ens, p, cfg.action_phase_cells, action_cell);
        std::size_t n_regular = 0, n_events = 0;
        for (const auto& t : ens) {
            n_regular += t.regular() ? 1 : 0;
            n_events += t.events.size();
        }
        json area = {
            {"island_fraction",
             {{"cell_size", cfg.cell_size},
              {"regular_cells", isl.regular_cells},
              {"chaotic_cells", isl.chaotic_cells},
              {"total_cells", isl.total_cells},
              {"fraction", isl.fraction}}},
            {"sea_area_RP",
             {{"cell_size", cfg.cell_size},
              {"area", sea.area},
              {"occupied_cells", sea.occupied_cells},
              {"n_points", sea.n_points},
              {"insufficient_sampling", sea.insufficient_sampling}}},
            {"action_area",
             {{"chart", "phi,I"},
              {"phase_cells", cfg.action_phase_cells},
              {"action_cell", action_cell},
              {"area", act.area},
              {"occupied_cells", act.occupied_cells},
              {"n_points", act.n_points},
              {"insufficient_sampling", act.insufficient_sampling}}},
            {"equator",
             {{"band", kEquatorBand},
              {"flagged_trajectories", flagged},
              {"flagged_in_band", flagged_in_band},
              {"regular_in_band", regular_in_band}}},
        };
        write_json(dir / "area.json", area);
        return json{{"trajectories", ens.size()},
                    {"events", n_events},
                    {"regular_trajectories", n_regular},
                    {"max_rel_energy_drift", drift},
                    {"island_fraction", isl.fraction},
                    {"action_area", act.area},
                    {"flagged_in_band", flagged_in_band == flagged},
                    {"frames", frames}};
    });
}

// ----------------------------------------------------------------------------
// spectrum

json mesh_to_json(const WedgeMesh& m) {
    json nodes = json::array(), tris = json::array();
    for (const auto& n : m.nodes) nodes.push_back({n[0], n[1]});
    for (const auto& t : m.triangles) tris.push_back({t[0], t[1], t[2]});
    return json{{"tan_theta", m.geom.tan_theta}, {"x_cut", m.geom.x_cut}, {"x_max", m.geom.x_max},
                {"h", m.h},                     {"nodes", nodes},      {"triangles", tris},
                {"tags", m.tags},               {"column_x", m.column_x}, {"column_nodes", m.column_nodes},
                {"strip_triangles", m.strip_triangles}};
}

WedgeMesh mesh_from_json(const json& d) {
    WedgeMesh m;
    m.geom.tan_theta = d.at("tan_theta");
    m.geom.x_cut = d.at("x_cut");
    m.geom.x_max = d.at("x_max");
    m.h = d.at("h");
    for (const auto& n : d.at("nodes")) m.nodes.push_back({n.at(0).get<double>(), n.at(1).get<double>()});
    for (const auto& t : d.at("triangles")) m.triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
    m.tags = d.at("tags").get<std::vector<std::uint8_t>>();
    m.column_x = d.at("column_x").get<std::vector<double>>();
    m.column_nodes = d.at("column_nodes").get<std::vector<std::vector<int>>>();
    m.strip_triangles = d.at("strip_triangles").get<std::vector<std::vector<int>>>();
    if (m.tags.size() != m.nodes.size() || m.strip_triangles.size() + 1 != m.column_x.size()) {
        throw Error("mesh file is inconsistent");
    }
    return m;
}

namespace {

void mode_map(const FieldEvaluator& ev, const Eigen::VectorXd& psi, const std::string& title, const fs::path& path) {
    const WedgeMesh& m = ev.mesh();
    const int nx = 240, ny = 80;
    const double ymax = m.geom.tan_theta * m.geom.x_max;
    std::vector<double> v(static_cast<std::size_t>(nx) * ny, 0.0);
    for (int i = 0; i < nx; ++i) {
        const double x = m.geom.x_cut + (m.geom.x_max - m.geom.x_cut) * (i + 0.5) / nx;
        for (int j = 0; j < ny; ++j) {
            const double y = ymax * (j + 0.5) / ny;
            const int t = ev.locate(x, y);
            if (t < 0) continue;
            const double a = ev.value(psi, t, x, y);
            v[static_cast<std::size_t>(i) * ny + j] = a * a;
        }
    }
    PlotFrame f;
    f.title = title;
    f.x_label = "x";
    f.y_label = "y";
    f.x_min = m.geom.x_cut;
    f.x_max = m.geom.x_max;
    f.y_min = 0.0;
    f.y_max = ymax;
    f.width = 800;
    f.height = 360;
    SvgFigure fig(f);
    fig.heatmap(v, nx, ny);
    fig.lines(LineSeries{{m.geom.x_cut, m.geom.x_max}, {m.geom.tan_theta * m.geom.x_cut, ymax}, "#000000", 1.0, false, ""});
    fig.save(path);
}

} // namespace

StageReport cmd_spectrum(const RunConfig& cfg) {
    return run_stage(cfg, "spectrum", [&](const fs::path& dir, const std::string& hash) {
        // oracle gate on the Dirichlet triangle before the real solve
        const TriangleReport gate = validate_triangle_spectrum(1.0, 1.0 / 40.0, 1, ElementOrder::P1);
        const bool gate_ok = gate.max_rel_error[0] < 0.03 && std::abs(gate.orders[0] - 2.0) <= 0.2;
        write_json(dir / "oracle_gate.json", {{"L", 1.0},
                                              {"h", gate.h},
                                              {"max_rel_error", gate.max_rel_error},
                                              {"orders", gate.orders},
                                              {"passed", gate_ok}});
        if (!gate_ok) throw NumericalError("triangle oracle gate failed; see oracle_gate.json");

        const PhysParams p = cfg.params();
        const SpectrumOptions so = spectrum_options(cfg);
        const Spectrum sp = solve_spectrum(p, so);

        write_json(dir / "mesh.json", mesh_to_json(sp.mesh));
        std::vector<double> flat;
        flat.reserve(sp.pairs.size() * static_cast<std::size_t>(sp.dofs.n_dofs));
        json pairs = json::array();
        double worst = 0.0;
        for (std::size_t i = 0; i < sp.pairs.size(); ++i) {
            const auto& e = sp.pairs[i];
            pairs.push_back({{"id", i}, {"E", e.E}, {"residual", e.residual}, {"norm", e.norm}});
            worst = std::max(worst, e.residual);
            flat.insert(flat.end(), e.psi.data(), e.psi.data() + e.psi.size());
        }
        write_doubles(dir / "eigenvectors.bin", flat);
        json eig = {{"order", order_name(cfg.order)},
                    {"n_dofs", sp.dofs.n_dofs},
                    {"n_free", sp.dofs.n_free},
                    {"vector_file", "eigenvectors.bin"},
                    {"layout", "float64 little-endian, pair-major, n_dofs values per pair; vertex dofs in mesh "
                               "node order, then edge dofs in order of first appearance over triangles"},
                    {"shift", sp.shift},
                    {"target", so.target},
                    {"restarts", sp.restarts},
                    {"factorization", sp.factorization},
                    {"pairs", pairs}};
        write_json(dir / "eigenpairs.json", eig);

        FieldEvaluator ev(sp.mesh, sp.dofs);
        const std::size_t n_maps = std::min<std::size_t>(4, sp.pairs.size());
        for (std::size_t i = 0; i < n_maps; ++i) {
            const auto& e = sp.pairs[i];
            CsvWriter w(dir / ("psi2_" + std::to_string(i) + ".csv"), {"x", "y", "psi2"}, hash);
            for (std::size_t n = 0; n < sp.mesh.n_nodes(); ++n) {
                w << sp.mesh.nodes[n][0] << sp.mesh.nodes[n][1] << e.psi[static_cast<Eigen::Index>(n)] * e.psi[static_cast<Eigen::Index>(n)];
                w.end_row();
            }
            w.close();
            mode_map(ev, e.psi, "|psi|^2, E = " + format_double(e.E), dir / ("mode_" + std::to_string(i) + ".svg"));
        }

        json sens = nullptr;
        if (cfg.sensitivity) {
            SpectrumOptions wide = so;
            wide.x_max = 1.2 * sp.x_max;
            wide.n_pairs = std::min(cfg.pairs, 10);
            wide.max_triangles = std::max<std::size_t>(so.max_triangles, static_cast<std::size_t>(1.5 * sp.mesh.n_triangles()));
            wide.h = sp.h;
            const Spectrum sw = solve_spectrum(p, wide);
            double max_abs = 0.0, max_rel = 0.0;
            json rows = json::array();
            for (std::size_t i = 0; i < static_cast<std::size_t>(wide.n_pairs) && i < sp.pairs.size(); ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& q : sw.pairs) best = std::min(best, std::abs(q.E - sp.pairs[i].E));
                rows.push_back({{"id", i}, {"E", sp.pairs[i].E}, {"shift", best}});
                max_abs = std::max(max_abs, best);
                max_rel = std::max(max_rel, best / std::abs(sp.pairs[i].E));
            }
            sens = {{"x_max", sp.x_max}, {"x_max_wide", wide.x_max}, {"levels", rows},
                    {"max_abs_shift", max_abs}, {"max_rel_shift", max_rel}};
            write_json(dir / "sensitivity.json", sens);
        }

        return json{{"pairs", sp.pairs.size()},
                    {"triangles", sp.mesh.n_triangles()},
                    {"n_dofs", sp.dofs.n_dofs},
                    {"h", sp.h},
                    {"h_coarsened", sp.h_coarsened},
                    {"x_cut", sp.x_cut},
                    {"x_max", sp.x_max},
                    {"max_residual", worst},
                    {"factorization", sp.factorization},
                    {"x_max_sensitivity", sens.is_null() ? json(nullptr) : sens["max_rel_shift"]}};
    });
}

// ----------------------------------------------------------------------------
// bo

StageReport cmd_bo(const RunConfig& cfg) {
    return run_stage(cfg, "bo", [&](const fs::path& dir, const std::string& hash) {
        const PhysParams p = cfg.params();
        const BOGrid g = bo_grid(cfg);
        const BOOptions opts{true, cfg.diagonal_correction};
        const int n_max = cfg.effective_n_max();

        std::vector<ChannelSolution> sols(static_cast<std::size_t>(n_max));
        parallel_for(sols.size(), [&](std::size_t i) {
            sols[i] = solve_channel(static_cast<int>(i) + 1, p, g, cfg.energy, opts);
        });
        std::vector<BOEigenPair> all;
        json warnings = json::array();
        for (auto& s : sols) {
            if (s.resolution_warning && !s.levels.empty()) warnings.push_back(s.levels.front().n);
            for (auto& l : s.levels) all.push_back(std::move(l));
        }
        std::stable_sort(all.begin(), all.end(), [](const BOEigenPair& a, const BOEigenPair& b) { return a.E < b.E; });

        std::vector<double> flat;
        json levels = json::array();
        for (std::size_t i = 0; i < all.size(); ++i) {
            levels.push_back({{"n", all[i].n}, {"nu", all[i].nu}, {"E", all[i].E}, {"offset", flat.size()}});
            flat.insert(flat.end(), all[i].xi.begin(), all[i].xi.end());
        }
        write_doubles(dir / "xi.bin", flat);
        write_json(dir / "levels.json", {{"R_min", g.R_min},
                                         {"R_max", g.R_max},
                                         {"n_points", g.n_points},
                                         {"dR", (g.R_max - g.R_min) / (g.n_points - 1)},
                                         {"n_max", n_max},
                                         {"diagonal_correction", cfg.diagonal_correction},
                                         {"xi_file", "xi.bin"},
                                         {"resolution_warnings", warnings},
                                         {"levels", levels}});

        {
            std::vector<std::string> cols{"R"};
            for (int n = 1; n <= n_max; ++n) cols.push_back("V_" + std::to_string(n));
            CsvWriter w(dir / "veff.csv", cols, hash);
            for (int i = 0; i < g.n_points; i += 10) {
                const double R = g.R_min + (g.R_max - g.R_min) * i / (g.n_points - 1);
                w << R;
                for (int n = 1; n <= n_max; ++n) w << effective_potential(n, R, p, opts);
                w.end_row();
            }
            w.close();
        }
        {
            // profiles of levels within hbar omega of the target energy
            CsvWriter w(dir / "profiles.csv", {"n", "nu", "E", "R", "xi"}, hash);
            const double win = p.hbar() * p.omega();
            for (const auto& l : all) {
                if (std::abs(l.E - cfg.energy) > win) continue;
                for (std::size_t i = 0; i < l.xi.size(); i += 4) {
                    w << l.n << l.nu << l.E << l.R_at(i) << l.xi[i];
                    w.end_row();
                }
            }
            w.close();
        }
        {
            PlotFrame f;
            f.title = "effective potentials, eta = " + format_double(cfg.eta);
            f.x_label = "R";
            f.y_label = "V_eff";
            f.x_min = g.R_min;
            f.x_max = g.R_max;
            f.y_min = 0.0;
            f.y_max = 1.5 * cfg.energy;
            SvgFigure fig(f);
            std::vector<double> R, V;
            for (int i = 0; i < g.n_points; i += 10) R.push_back(g.R_min + (g.R_max - g.R_min) * i / (g.n_points - 1));
            for (int n = 1; n <= std::min(n_max, 12); ++n) {
                V.clear();
                for (double r : R) V.push_back(effective_potential(n, r, p, opts));
                fig.lines(LineSeries{R, V, n % 2 ? "#1f77b4" : "#ff7f0e", 1.0, false, ""});
            }
            fig.lines(LineSeries{{g.R_min, g.R_max}, {cfg.energy, cfg.energy}, "#d62728", 1.0, true, "E"});
            fig.save(dir / "veff.svg");
        }

        // harmonic test hook
        const auto hook = solve_channel(1, p, g, cfg.energy, BOOptions{false, false});
        double worst = 0.0;
        for (int nu = 0; nu < std::min<int>(11, static_cast<int>(hook.levels.size())); ++nu) {
            const double exact = p.hbar() * p.omega() * (nu + 0.5);
            worst = std::max(worst, std::abs(hook.levels[nu].E - exact) / exact);
        }
        write_json(dir / "harmonic_hook.json", {{"max_rel_error_nu_le_10", worst}});

        return json{{"levels", all.size()}, {"n_max", n_max}, {"resolution_warnings", warnings},
                    {"harmonic_hook_max_rel_error", worst}};
    });
}

// ----------------------------------------------------------------------------
// loaders

std::vector<Trajectory> load_trajectories(const fs::path& dir) {
    const CsvTable tr = read_csv(dir / "trajectories.csv");
    const CsvTable ev = read_csv(dir / "events.csv");
    std::vector<Trajectory> out;
    std::map<std::uint64_t, std::size_t> index;
    const int cid = tr.column("traj"), cR = tr.column("R"), cP = tr.column("P"), cr = tr.column("r"),
              cp = tr.column("p"), cd = tr.column("double_count");
    for (std::size_t i = 0; i < tr.rows.size(); ++i) {
        Trajectory t;
        t.id = static_cast<std::uint64_t>(tr.number(i, cid));
        t.initial.R = tr.number(i, cR);
        t.initial.P = tr.number(i, cP);
        t.initial.r = tr.number(i, cr);
        t.initial.p = tr.number(i, cp);
        t.double_count = static_cast<std::size_t>(tr.number(i, cd));
        index[t.id] = out.size();
        out.push_back(std::move(t));
    }
    const int eid = ev.column("traj"), et = ev.column("t"), ek = ev.column("kind"), eR = ev.column("R"),
              eP = ev.column("P"), er = ev.column("r"), ep = ev.column("p"), ed = ev.column("double_flag");
    for (std::size_t i = 0; i < ev.rows.size(); ++i) {
        const auto it = index.find(static_cast<std::uint64_t>(ev.number(i, eid)));
        if (it == index.end()) throw Error("events.csv refers to an unknown trajectory");
        CollisionEvent e;
        e.t = ev.number(i, et);
        const std::string& kind = ev.rows[i][static_cast<std::size_t>(ek)];
        if (kind == to_string(CollisionKind::MovingWall)) {
            e.kind = CollisionKind::MovingWall;
        } else if (kind == to_string(CollisionKind::FixedWall)) {
            e.kind = CollisionKind::FixedWall;
        } else {
            throw Error("events.csv: unknown collision kind '" + kind + "'");
        }
        e.state_after = {e.t, ev.number(i, eR), ev.number(i, eP), ev.number(i, er), ev.number(i, ep)};
        e.double_flag = ev.number(i, ed) != 0.0;
        out[it->second].events.push_back(e);
    }
    return out;
}

StoredSpectrum load_spectrum(const fs::path& dir) {
    StoredSpectrum s;
    s.mesh = mesh_from_json(read_json(dir / "mesh.json"));
    const json eig = read_json(dir / "eigenpairs.json");
    s.order = eig.at("order") == "p1" ? ElementOrder::P1 : ElementOrder::P2;
    const auto n = eig.at("n_dofs").get<std::size_t>();
    const std::vector<double> flat = read_doubles(dir / eig.at("vector_file").get<std::string>());
    const auto& pairs = eig.at("pairs");
    if (flat.size() != n * pairs.size()) throw Error("eigenvector file size does not match eigenpairs.json");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EigenPair e;
        e.E = pairs[i].at("E");
        e.residual = pairs[i].at("residual");
        e.norm = pairs[i].at("norm");
        e.psi = Eigen::Map<const Eigen::VectorXd>(flat.data() + i * n, static_cast<Eigen::Index>(n));
        s.pairs.push_back(std::move(e));
    }
    return s;
}

std::vector<BOEigenPair> load_bo_levels(const fs::path& dir) {
    const json doc = read_json(dir / "levels.json");
    const std::vector<double> flat = read_doubles(dir / doc.at("xi_file").get<std::string>());
    const auto np = doc.at("n_points").get<std::size_t>();
    std::vector<BOEigenPair> out;
    for (const auto& l : doc.at("levels")) {
        BOEigenPair b;
        b.n = l.at("n");
        b.nu = l.at("nu");
        b.E = l.at("E");
        b.R_min = doc.at("R_min");
        b.dR = doc.at("dR");
        const auto off = l.at("offset").get<std::size_t>();
        if (off + np > flat.size()) throw Error("xi file is shorter than levels.json says");
        b.xi.assign(flat.begin() + static_cast<long>(off), flat.begin() + static_cast<long>(off + np));
        out.push_back(std::move(b));
    }
    return out;
}

// ----------------------------------------------------------------------------
// analysis

std::vector<ModeReport> analyze_modes(const PhysParams& params, const WedgeMesh& mesh, const DofMap& dofs,
                                      const std::vector<EigenPair>& pairs, const std::vector<BOEigenPair>& levels,
                                      const PhaseMask& mask, const ModeSettings& st) {
    std::map<int, std::vector<BOEigenPair>> by_channel;
    for (const auto& l : levels) by_channel[l.n].push_back(l);
    const FieldEvaluator ev(mesh, dofs);
    const double sigma = st.sigma > 0.0 ? st.sigma : default_boundary_sigma(params);
    std::vector<ModeReport> out(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        ModeReport& r = out[i];
        r.id = static_cast<int>(i);
        r.E = pairs[i].E;
        const FemLineField field(ev, pairs[i].psi);
        r.channels = channel_decomposition(field, st.x_grid, st.n_max, params);
        r.channels.mode_id = r.id;
        r.channels.E = r.E;
        try {
            r.wall = extract_wall_wavefunction(field, r.channels.dominant, st.x_grid, params);
            r.extracted = true;
            const auto it = by_channel.find(r.channels.dominant);
            if (it != by_channel.end()) r.bo = match_bo_level(r.wall, r.E, it->second);
        } catch (const NumericalError& e) {
            r.extraction_error = e.what();
        }
        const BoundarySamples u = boundary_normal_derivative(ev, pairs[i].psi, params);
        r.husimi = husimi_boundary(u, sigma, st.husimi_chart, params, mesh.h);
        r.cls = classify_mode(r.husimi, mask, st.threshold);
    });
    return out;
}

Representatives select_representatives(const std::vector<ModeReport>& modes, double target) {
    Representatives r;
    auto better = [&](int cand, int cur, bool larger) {
        if (cur < 0) return true;
        const double a = modes[cand].cls.fraction, b = modes[cur].cls.fraction;
        if (a != b) return larger ? a > b : a < b;
        return std::abs(modes[cand].E - target) < std::abs(modes[cur].E - target);
    };
    for (int i = 0; i < static_cast<int>(modes.size()); ++i) {
        if (modes[i].cls.label == ModeClass::Regular) {
            if (better(i, r.regular, true)) r.regular = i;
        } else if (better(i, r.chaotic, false)) {
            r.chaotic = i;
        }
    }
    return r;
}

double nearest_channel_ratio(const PhysParams& params, int n_bar, double R_eval, double R_dot) {
    double r = adiabaticity_ratio(params, n_bar, n_bar + 1, R_eval, R_dot);
    if (n_bar > 1) r = std::max(r, adiabaticity_ratio(params, n_bar, n_bar - 1, R_eval, R_dot));
    return r;
}

namespace {

json mode_json(const ModeReport& m) {
    return json{{"id", m.id},
                {"E", m.E},
                {"n_bar", m.channels.dominant},
                {"dominant_weight", m.channels.dominant_weight},
                {"weights", m.channels.weights},
                {"F", m.channels.F},
                {"PR", m.channels.participation},
                {"captured", m.channels.captured},
                {"truncation_warning", m.channels.truncation_warning},
                {"extracted", m.extracted},
                {"extraction_error", m.extraction_error},
                {"overlap_bo", m.extracted ? json(m.bo.overlap) : json(nullptr)},
                {"l2_error", m.extracted ? json(m.bo.l2_error) : json(nullptr)},
                {"nu_bo", m.bo.nu_overlap},
                {"E_bo", m.bo.E_bo},
                {"nu_energy", m.bo.nu_energy},
                {"E_bo_energy", m.bo.E_bo_energy},
                {"overlap_energy", m.bo.overlap_energy},
                {"classification", to_string(m.cls.label)},
                {"fraction", m.cls.fraction},
                {"unvisited", m.cls.unvisited}};
}

void write_mode_files(const ModeReport& m, const std::string& label, const std::vector<BOEigenPair>& levels,
                      const fs::path& dir, const std::string& hash) {
    const std::string stem = label + "_mode";
    {
        CsvWriter w(dir / ("channels_" + label + ".csv"), {"n", "F", "w", "w_normalized"}, hash);
        const double total = m.channels.captured > 0.0 ? m.channels.captured : 1.0;
        for (std::size_t n = 0; n < m.channels.weights.size(); ++n) {
            w << n + 1 << m.channels.F[n] << m.channels.weights[n] << m.channels.weights[n] / total;
            w.end_row();
        }
        w.close();
        PlotFrame f;
        f.title = label + " mode, E = " + format_double(m.E) + ", channel weights";
        f.x_label = "n";
        f.y_label = "w_n";
        f.x_min = 0.0;
        f.x_max = static_cast<double>(m.channels.weights.size()) + 1.0;
        f.y_min = 0.0;
        f.y_max = 1.05 * std::max(1e-12, *std::max_element(m.channels.weights.begin(), m.channels.weights.end()));
        SvgFigure fig(f);
        std::vector<double> xs;
        for (std::size_t n = 0; n < m.channels.weights.size(); ++n) xs.push_back(static_cast<double>(n + 1));
        fig.bars(xs, m.channels.weights, 0.7);
        fig.save(dir / ("channels_" + label + ".svg"));
    }
    if (m.extracted) {
        const BOEigenPair* xi = nullptr;
        for (const auto& l : levels) {
            if (l.n == m.channels.dominant && l.nu == m.bo.nu_overlap) xi = &l;
        }
        CsvWriter w(dir / ("wall_" + label + ".csv"), {"x", "psi", "xi"}, hash);
        std::vector<double> xs, ps, xv;
        double dot = 0.0;
        for (int i = 0; i < m.wall.grid.n_points; ++i) {
            const double x = m.wall.grid.at(i);
            dot += m.wall.psi[i] * (xi ? xi->value_at(x) : 0.0);
        }
        const double sgn = dot < 0.0 ? -1.0 : 1.0;
        for (int i = 0; i < m.wall.grid.n_points; ++i) {
            const double x = m.wall.grid.at(i);
            const double b = xi ? sgn * xi->value_at(x) : 0.0;
            w << x << m.wall.psi[i] << b;
            w.end_row();
            xs.push_back(x);
            ps.push_back(m.wall.psi[i]);
            xv.push_back(b);
        }
        w.close();
        PlotFrame f;
        f.title = label + " mode, wall wavefunction (n = " + std::to_string(m.channels.dominant) + ")";
        f.x_label = "x";
        f.y_label = "psi";
        f.x_min = m.wall.grid.x_min;
        f.x_max = m.wall.grid.x_max;
        double a = 1e-12;
        for (double v : ps) a = std::max(a, std::abs(v));
        for (double v : xv) a = std::max(a, std::abs(v));
        f.y_min = -1.1 * a;
        f.y_max = 1.1 * a;
        SvgFigure fig(f);
        fig.lines(LineSeries{xs, ps, "#1f77b4", 1.5, false, "extracted"});
        fig.lines(LineSeries{xs, xv, "#d62728", 1.2, true, "Born-Oppenheimer"});
        fig.save(dir / ("wall_" + label + ".svg"));
    }
    {
        const ChartGrid& g = m.husimi.grid;
        CsvWriter w(dir / ("husimi_" + label + ".csv"), {"R", "P_total", "H"}, hash);
        for (int i = 0; i < g.nq; ++i) {
            for (int j = 0; j < g.np; ++j) {
                w << g.q_at(i) << g.p_at(j) << m.husimi.values[static_cast<std::size_t>(i) * g.np + j];
                w.end_row();
            }
        }
        w.close();
        PlotFrame f;
        f.title = label + " mode, boundary Husimi density";
        f.x_label = "R";
        f.y_label = "P + p";
        f.x_min = g.q_min;
        f.x_max = g.q_max;
        f.y_min = g.p_min;
        f.y_max = g.p_max;
        SvgFigure fig(f);
        fig.heatmap(m.husimi.values, g.nq, g.np);
        fig.save(dir / ("husimi_" + label + ".svg"));
    }
    (void)stem;
}

} // namespace

StageReport cmd_analyze(const RunConfig& cfg) {
    const fs::path cdir = cfg.out / "classical", sdir = cfg.out / "spectrum", bdir = cfg.out / "bo";
    for (const auto& d : {cdir, sdir, bdir}) {
        if (!fs::exists(d / "manifest.json")) {
            throw ConfigError("analyze needs the output of an earlier stage: " + d.string() + " is missing");
        }
    }
    return run_stage(cfg, "analysis", [&](const fs::path& dir, const std::string& hash) {
        const PhysParams p = cfg.params();
        const std::vector<Trajectory> ens = load_trajectories(cdir);
        const StoredSpectrum sp = load_spectrum(sdir);
        const std::vector<BOEigenPair> levels = load_bo_levels(bdir);
        const json area = read_json(cdir / "area.json");
        const DofMap dofs = build_dofs(sp.mesh, sp.order, true);
        if (!sp.pairs.empty() && sp.pairs[0].psi.size() != dofs.n_dofs) {
            throw Error("stored eigenvectors do not match the stored mesh");
        }

        const double x_cut = sp.mesh.geom.x_cut, x_max = sp.mesh.geom.x_max;
        const ChartGrid mask_chart = default_impact_chart(p, cfg.energy, x_cut, x_max, cfg.mask_cells, cfg.mask_cells);
        PhaseMask mask = build_phase_mask(ens, mask_chart);
        const std::size_t filled = fill_enclosed_islands(mask);
        ModeSettings st;
        st.x_grid = XGrid{x_cut, x_max, cfg.x_points};
        st.n_max = cfg.effective_n_max();
        st.sigma = cfg.sigma;
        st.husimi_chart = default_impact_chart(p, cfg.energy, x_cut, x_max, cfg.husimi_cells, cfg.husimi_cells);
        st.threshold = cfg.threshold;
        const std::vector<ModeReport> modes = analyze_modes(p, sp.mesh, dofs, sp.pairs, levels, mask, st);

        json mj = json::array();
        for (const auto& m : modes) mj.push_back(mode_json(m));
        write_json(dir / "modes.json", mj);

        {
            CsvWriter w(dir / "mask.csv", {"i", "j", "R", "P_total", "cell"}, hash);
            for (int i = 0; i < mask_chart.nq; ++i) {
                for (int j = 0; j < mask_chart.np; ++j) {
                    const MaskCell c = mask.cells[static_cast<std::size_t>(i) * mask_chart.np + j];
                    w << i << j << mask_chart.q_at(i) << mask_chart.p_at(j)
                      << (c == MaskCell::Island ? "island" : c == MaskCell::Sea ? "sea" : "unvisited");
                    w.end_row();
                }
            }
            w.close();
        }

        const Representatives reps = select_representatives(modes, cfg.energy);
        if (reps.regular >= 0) write_mode_files(modes[reps.regular], "regular", levels, dir, hash);
        if (reps.chaotic >= 0) write_mode_files(modes[reps.chaotic], "chaotic", levels, dir, hash);

        // class statistics
        double ov[2] = {0, 0}, pr[2] = {0, 0};
        int cnt[2] = {0, 0}, ovn[2] = {0, 0};
        for (const auto& m : modes) {
            const int c = m.cls.label == ModeClass::Regular ? 0 : 1;
            ++cnt[c];
            pr[c] += m.channels.participation;
            if (m.extracted) {
                ov[c] += m.bo.overlap;
                ++ovn[c];
            }
        }
        auto mean = [](double s, int n) { return n > 0 ? json(s / n) : json(nullptr); };

        // BO completeness within hbar omega of the target
        {
            CsvWriter w(dir / "bo_matching.csv",
                        {"id", "E_exact", "n_bar", "nu_overlap", "E_bo_overlap", "n_near", "nu_near", "E_bo_near",
                         "distance", "neighbor_gap", "unambiguous"},
                        hash);
            const double win = p.hbar() * p.omega();
            for (const auto& m : modes) {
                if (std::abs(m.E - cfg.energy) > win || levels.empty()) continue;
                std::size_t k = 0;
                for (std::size_t i = 1; i < levels.size(); ++i) {
                    if (std::abs(levels[i].E - m.E) < std::abs(levels[k].E - m.E)) k = i;
                }
                double gap = std::numeric_limits<double>::infinity();
                if (k > 0) gap = std::min(gap, levels[k].E - levels[k - 1].E);
                if (k + 1 < levels.size()) gap = std::min(gap, levels[k + 1].E - levels[k].E);
                const double dist = std::abs(levels[k].E - m.E);
                w << m.id << m.E << m.channels.dominant << m.bo.nu_overlap << m.bo.E_bo << levels[k].n << levels[k].nu
                  << levels[k].E << dist << gap << (dist < gap ? 1 : 0);
                w.end_row();
            }
            w.close();
        }

        // adiabaticity at R0
        const int n_bar = reps.regular >= 0 ? modes[reps.regular].channels.dominant
                                            : (modes.empty() ? 1 : modes[0].channels.dominant);
        json adia;
        try {
            const double R_dot = typical_wall_speed(cfg.wall_speed, p, cfg.energy, n_bar);
            const int N = cfg.effective_n_max();
            CsvWriter w(dir / "adiabaticity.csv", {"n", "m", "coupling", "ratio"}, hash);
            for (int n = 1; n <= N; ++n) {
                for (int m = 1; m <= N; ++m) {
                    if (n == m) continue;
                    w << n << m << coupling_element(n, m, p.R0()) << adiabaticity_ratio(p, n, m, p.R0(), R_dot);
                    w.end_row();
                }
            }
            w.close();
            json entries = json::array();
            for (int m : {n_bar - 1, n_bar + 1}) {
                if (m < 1) continue;
                entries.push_back({{"n", n_bar}, {"m", m}, {"ratio", adiabaticity_ratio(p, n_bar, m, p.R0(), R_dot)}});
            }
            adia = {{"rule", to_string(cfg.wall_speed)}, {"R_eval", p.R0()},      {"R_dot", R_dot},
                    {"n_bar", n_bar},                    {"nearest", entries},    {"ratio", nearest_channel_ratio(p, n_bar, p.R0(), R_dot)}};
        } catch (const NumericalError& e) {
            adia = {{"rule", to_string(cfg.wall_speed)}, {"n_bar", n_bar}, {"error", e.what()}, {"ratio", nullptr}};
        }
        write_json(dir / "adiabaticity.json", adia);

        // Planck cells in the action-angle chart
        const double a = area.at("action_area").at("area");
        const double cell = cfg.planck_cell == PlanckCell::TwoPiHbar ? 2.0 * std::numbers::pi * p.hbar() : p.hbar();
        const PlanckComparison pc = planck_cell_comparison(a, p, cfg.cell_threshold, cell);
        const json planck = {{"area", a},
                             {"chart", "phi,I"},
                             {"cell", cell},
                             {"cell_unit", cfg.planck_cell == PlanckCell::TwoPiHbar ? "2 pi hbar" : "hbar"},
                             {"cells", pc.cells},
                             {"threshold", cfg.cell_threshold},
                             {"verdict", to_string(pc.verdict)}};
        write_json(dir / "planck.json", planck);

        auto rep_json = [&](int i) {
            if (i < 0) return json(nullptr);
            json j = mode_json(modes[i]);
            j.erase("weights");
            j.erase("F");
            return j;
        };
        return json{{"modes", modes.size()},
                    {"regular_modes", cnt[0]},
                    {"chaotic_modes", cnt[1]},
                    {"mask_island_fraction", mask.island_fraction()},
                    {"mask_filled_cells", filled},
                    {"mean_overlap_regular", mean(ov[0], ovn[0])},
                    {"mean_overlap_chaotic", mean(ov[1], ovn[1])},
                    {"mean_PR_regular", mean(pr[0], cnt[0])},
                    {"mean_PR_chaotic", mean(pr[1], cnt[1])},
                    {"regular", rep_json(reps.regular)},
                    {"chaotic", rep_json(reps.chaotic)},
                    {"adiabaticity_ratio", adia["ratio"]},
                    {"planck_cells", pc.cells},
                    {"planck_verdict", to_string(pc.verdict)}};
    });
}

std::vector<StageReport> cmd_all(const RunConfig& cfg) {
    std::vector<StageReport> out;
    out.push_back(cmd_validate(cfg));
    if (!out.back().summary.at("passed").get<bool>()) return out;
    out.push_back(cmd_classical(cfg));
    out.push_back(cmd_spectrum(cfg));
    out.push_back(cmd_bo(cfg));
    out.push_back(cmd_analyze(cfg));
    return out;
}

} // namespace afa
