#include "afa/errors.hpp"
#include "afa/pipeline.hpp"

#include "doctest.h"

#include <fstream>
#include <random>

using namespace afa;
namespace fs = std::filesystem;

namespace {

// Low energy, few pairs: the whole chain runs in seconds.
RunConfig small_config(const fs::path& out) {
    RunConfig c;
    c.eta = 0.1;
    c.energy = 3.0;
    c.trajectories = 3;
    c.events = 400;
    c.pairs = 6;
    c.mask_cells = 24;
    c.husimi_cells = 40;
    c.x_points = 401;
    c.out = out;
    return c;
}

fs::path temp_root(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("afa_pipe_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("full chain on a small configuration") {
    const fs::path root = temp_root("all");
    const RunConfig cfg = small_config(root);
    const auto reports = cmd_all(cfg);
    REQUIRE(reports.size() == 5);
    CHECK(reports[0].summary.at("passed").get<bool>());

    const std::string hash = config_hash(cfg);
    for (const auto& r : reports) {
        INFO(r.stage);
        CHECK(fs::exists(r.dir / "config.ini"));
        CHECK(slurp(r.dir / "config.ini") == canonical_ini(cfg));
        CHECK(fs::exists(r.dir / "summary.json"));
        CHECK(verify_manifest(r.dir).empty());
        // every csv names the producing version and config
        for (const auto& e : fs::directory_iterator(r.dir)) {
            if (e.path().extension() != ".csv") continue;
            const CsvTable t = read_csv(e.path());
            CHECK(t.comment.find("config=" + hash) != std::string::npos);
        }
    }
    for (const char* f : {"events.csv", "trajectories.csv", "section_particle.csv", "section_cm.csv", "area.json",
                          "section_particle.svg", "section_cm.svg"}) {
        CHECK(fs::exists(root / "classical" / f));
    }
    for (const char* f : {"oracle_gate.json", "mesh.json", "eigenpairs.json", "eigenvectors.bin", "psi2_0.csv",
                          "mode_0.svg", "sensitivity.json"}) {
        CHECK(fs::exists(root / "spectrum" / f));
    }
    for (const char* f : {"levels.json", "xi.bin", "veff.csv", "profiles.csv", "veff.svg"}) {
        CHECK(fs::exists(root / "bo" / f));
    }
    for (const char* f : {"modes.json", "mask.csv", "adiabaticity.csv", "adiabaticity.json", "planck.json",
                          "bo_matching.csv"}) {
        CHECK(fs::exists(root / "analysis" / f));
    }

    // stored outputs read back consistently
    const StoredSpectrum sp = load_spectrum(root / "spectrum");
    REQUIRE(sp.pairs.size() == 6);
    // nearest the shift first
    for (std::size_t i = 1; i < sp.pairs.size(); ++i) {
        CHECK(std::abs(sp.pairs[i - 1].E - cfg.energy) <= std::abs(sp.pairs[i].E - cfg.energy));
    }
    const WedgeMesh again = mesh_from_json(mesh_to_json(sp.mesh));
    CHECK(again.nodes == sp.mesh.nodes);
    CHECK(again.triangles == sp.mesh.triangles);

    const auto levels = load_bo_levels(root / "bo");
    REQUIRE_FALSE(levels.empty());
    for (std::size_t i = 1; i < levels.size(); ++i) CHECK(levels[i - 1].E <= levels[i].E);

    const auto ens = load_trajectories(root / "classical");
    REQUIRE(ens.size() == 3);
    for (const auto& t : ens) CHECK(t.events.size() == 400);

    const auto modes = read_json(root / "analysis" / "modes.json");
    CHECK(modes.size() == 6);
    const auto adia = read_json(root / "analysis" / "adiabaticity.json");
    const int n_bar = adia.at("n_bar");
    for (const auto& e : adia.at("nearest")) {
        CHECK(e.at("n") == n_bar);
        CHECK(std::abs(e.at("m").get<int>() - n_bar) == 1);
    }

    // classical rerun with the same seed is byte-identical
    const std::string events = slurp(root / "classical" / "events.csv");
    cmd_classical(cfg);
    CHECK(slurp(root / "classical" / "events.csv") == events);
    fs::remove_all(root);
}

TEST_CASE("failures leave no stage directory") {
    const fs::path root = temp_root("fail");
    RunConfig cfg = small_config(root);
    cfg.events = 50;

    // analyze needs its inputs on disk
    CHECK_THROWS_AS(cmd_analyze(cfg), ConfigError);
    CHECK_FALSE(fs::exists(root / "analysis"));

    cfg.initial = "5 0 0 0";
    CHECK_THROWS_AS(cmd_classical(cfg), ConfigError);
    CHECK_FALSE(fs::exists(root / "classical"));

    // stuck particle: valid input, fails during the run
    cfg.initial = "5 0.01 1 0";
    CHECK_THROWS(cmd_classical(cfg));
    CHECK_FALSE(fs::exists(root / "classical"));

    cfg.initial = "";
    cfg.pairs = 0;
    CHECK_THROWS_AS(cmd_spectrum(cfg), ConfigError);
    CHECK_FALSE(fs::exists(root / "spectrum"));
    fs::remove_all(root);
}

TEST_CASE("representative selection") {
    std::vector<ModeReport> m(4);
    const double E[] = {12.0, 12.1, 11.95, 12.02};
    const double f[] = {0.8, 0.9, 0.2, 0.2};
    for (int i = 0; i < 4; ++i) {
        m[i].E = E[i];
        m[i].cls.fraction = f[i];
        m[i].cls.label = f[i] >= 0.7 ? ModeClass::Regular : ModeClass::Chaotic;
    }
    auto r = select_representatives(m, 12.0);
    CHECK(r.regular == 1);
    CHECK(r.chaotic == 3); // tie on fraction, nearer the target
    for (auto& x : m) x.cls.label = ModeClass::Chaotic;
    r = select_representatives(m, 12.0);
    CHECK(r.regular == -1);
}
