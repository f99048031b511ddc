#include "afa/config.hpp"

#include "afa/errors.hpp"
#include "afa/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <sstream>
#include <vector>

namespace afa {

namespace {

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": not a boolean: '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

const char* order_name(ElementOrder o) { return o == ElementOrder::P1 ? "p1" : "p2"; }
const char* cell_name(PlanckCell c) { return c == PlanckCell::Hbar ? "hbar" : "two_pi_hbar"; }

} // namespace

int RunConfig::open_channels() const {
    const PhysParams p = params();
    int n = 0;
    while (p.channel_energy(n + 1, p.R0()) < energy) ++n;
    return n;
}

ClassicalState RunConfig::initial_state() const {
    std::string t = initial;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream is(t);
    ClassicalState s;
    if (!(is >> s.R >> s.P >> s.r >> s.p)) throw ConfigError("classical.initial: expected four numbers R P r p");
    std::string rest;
    if (is >> rest) throw ConfigError("classical.initial: trailing text '" + rest + "'");
    return s;
}

int RunConfig::effective_n_max() const { return n_max > 0 ? n_max : std::max(20, open_channels() + 10); }

void apply_setting(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    auto D = [&](double& f) { f = to_double(key, v); };
    auto I = [&](int& f) {
        const long long x = to_int(key, v);
        if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(key + ": out of range");
        f = static_cast<int>(x);
    };
    if (key == "physics.eta") D(c.eta);
    else if (key == "physics.M") D(c.M);
    else if (key == "physics.k") D(c.k);
    else if (key == "physics.hbar") D(c.hbar);
    else if (key == "physics.R0") D(c.R0);
    else if (key == "physics.energy") D(c.energy);
    else if (key == "classical.trajectories") I(c.trajectories);
    else if (key == "classical.events") I(c.events);
    else if (key == "classical.seed") {
        const long long x = to_int(key, v);
        if (x < 0) throw ConfigError(key + ": must be non-negative");
        c.seed = static_cast<std::uint64_t>(x);
    } else if (key == "classical.initial") c.initial = v;
    else if (key == "classical.frame") c.frame = v;
    else if (key == "classical.cell_size") D(c.cell_size);
    else if (key == "classical.action_phase_cells") I(c.action_phase_cells);
    else if (key == "classical.action_cell") D(c.action_cell);
    else if (key == "quantum.x_max") D(c.x_max);
    else if (key == "quantum.x_cut") D(c.x_cut);
    else if (key == "quantum.target_h") D(c.target_h);
    else if (key == "quantum.kh") D(c.kh);
    else if (key == "quantum.order") {
        if (v == "p1") c.order = ElementOrder::P1;
        else if (v == "p2") c.order = ElementOrder::P2;
        else throw ConfigError(key + ": expected p1 or p2, got '" + v + "'");
    } else if (key == "quantum.shift") D(c.shift);
    else if (key == "quantum.pairs") I(c.pairs);
    else if (key == "quantum.max_triangles") I(c.max_triangles);
    else if (key == "quantum.grading") D(c.grading);
    else if (key == "quantum.sensitivity") c.sensitivity = to_bool(key, v);
    else if (key == "bo.points") I(c.bo_points);
    else if (key == "bo.diagonal_correction") c.diagonal_correction = to_bool(key, v);
    else if (key == "analysis.n_max") I(c.n_max);
    else if (key == "analysis.sigma") D(c.sigma);
    else if (key == "analysis.threshold") D(c.threshold);
    else if (key == "analysis.cell_threshold") D(c.cell_threshold);
    else if (key == "analysis.planck_cell") {
        if (v == "hbar") c.planck_cell = PlanckCell::Hbar;
        else if (v == "two_pi_hbar") c.planck_cell = PlanckCell::TwoPiHbar;
        else throw ConfigError(key + ": expected hbar or two_pi_hbar, got '" + v + "'");
    } else if (key == "analysis.wall_speed") {
        if (v == "zero_point") c.wall_speed = WallSpeedRule::ZeroPoint;
        else if (v == "energy_share") c.wall_speed = WallSpeedRule::EnergyShare;
        else throw ConfigError(key + ": expected zero_point or energy_share, got '" + v + "'");
    } else if (key == "analysis.mask_cells") I(c.mask_cells);
    else if (key == "analysis.husimi_cells") I(c.husimi_cells);
    else if (key == "analysis.x_points") I(c.x_points);
    else if (key == "output.dir") c.out = v;
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config file: ") + e.what());
    }
    RunConfig cfg = base;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config key '" + section + "' outside a section");
        for (const auto& [name, value] : body) apply_setting(cfg, section + "." + name, value.data());
    }
    return cfg;
}

void validate(const RunConfig& c) {
    std::vector<std::string> bad;
    auto need = [&](bool ok, const char* field, const char* what) {
        if (!ok) bad.push_back(std::string(field) + " " + what);
    };
    need(c.eta > 0.0 && c.eta < 1.0, "physics.eta", "must lie in (0, 1)");
    need(c.M > 0.0, "physics.M", "must be positive");
    need(c.k > 0.0, "physics.k", "must be positive");
    need(c.hbar > 0.0, "physics.hbar", "must be positive");
    need(c.R0 > 0.0, "physics.R0", "must be positive");
    need(c.energy > 0.0, "physics.energy", "must be positive");
    need(c.trajectories >= 1, "classical.trajectories", "must be at least 1");
    need(c.events >= 1, "classical.events", "must be at least 1");
    need(c.frame == "particle" || c.frame == "center_of_mass" || c.frame == "both", "classical.frame",
         "must be particle, center_of_mass or both");
    if (!c.initial.empty()) {
        try {
            const ClassicalState s = c.initial_state();
            need(s.R > 0.0 && s.r >= 0.0 && s.r <= s.R, "classical.initial", "needs 0 <= r <= R and R > 0");
            need(s.P != 0.0 || s.p != 0.0 || s.R != c.R0, "classical.initial", "zero motion, nothing to simulate");
        } catch (const ConfigError& e) {
            bad.push_back(e.what());
        }
    }
    need(c.cell_size > 0.0, "classical.cell_size", "must be positive");
    need(c.action_phase_cells >= 4, "classical.action_phase_cells", "must be at least 4");
    need(c.action_cell >= 0.0, "classical.action_cell", "must be non-negative");
    need(c.x_max == 0.0 || c.x_max > c.R0, "quantum.x_max", "must be 0 (rule) or exceed R0");
    need(c.x_cut < c.R0, "quantum.x_cut", "must be below R0");
    need(c.target_h >= 0.0, "quantum.target_h", "must be non-negative");
    need(c.kh > 0.0 && c.kh <= 3.0, "quantum.kh", "must lie in (0, 3]");
    need(c.pairs >= 1, "quantum.pairs", "must be at least 1");
    need(c.max_triangles >= 1000, "quantum.max_triangles", "must be at least 1000");
    need(c.grading >= 0.0 && c.grading < 1.0, "quantum.grading", "must lie in [0, 1)");
    need(c.bo_points >= 200, "bo.points", "must be at least 200");
    need(c.n_max >= 0, "analysis.n_max", "must be non-negative");
    need(c.sigma >= 0.0, "analysis.sigma", "must be non-negative");
    need(c.threshold > 0.0 && c.threshold < 1.0, "analysis.threshold", "must lie in (0, 1)");
    need(c.cell_threshold > 0.0, "analysis.cell_threshold", "must be positive");
    need(c.mask_cells >= 4, "analysis.mask_cells", "must be at least 4");
    need(c.husimi_cells >= 8, "analysis.husimi_cells", "must be at least 8");
    need(c.x_points >= 101, "analysis.x_points", "must be at least 101");
    need(!c.out.empty(), "output.dir", "must not be empty");
    if (c.eta > 0.0 && c.eta < 1.0 && c.hbar > 0.0 && c.M > 0.0 && c.R0 > 0.0 && c.energy > 0.0 && c.k > 0.0) {
        need(c.open_channels() >= 1, "physics.energy", "is below the lowest channel at R0");
    }
    if (!bad.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& b : bad) msg += "\n  " + b;
        throw ConfigError(msg);
    }
}

std::string canonical_ini(const RunConfig& c) {
    std::ostringstream s;
    auto d = [](double x) { return format_double(x); };
    s << "[physics]\n"
      << "eta = " << d(c.eta) << "\nM = " << d(c.M) << "\nk = " << d(c.k) << "\nhbar = " << d(c.hbar)
      << "\nR0 = " << d(c.R0) << "\nenergy = " << d(c.energy) << "\n\n";
    s << "[classical]\n"
      << "trajectories = " << c.trajectories << "\nevents = " << c.events << "\nseed = " << c.seed
      << "\ninitial = " << c.initial << "\nframe = " << c.frame << "\ncell_size = " << d(c.cell_size)
      << "\naction_phase_cells = " << c.action_phase_cells << "\naction_cell = " << d(c.action_cell) << "\n\n";
    s << "[quantum]\n"
      << "x_max = " << d(c.x_max) << "\nx_cut = " << d(c.x_cut) << "\ntarget_h = " << d(c.target_h)
      << "\nkh = " << d(c.kh) << "\norder = " << order_name(c.order) << "\nshift = " << d(c.shift)
      << "\npairs = " << c.pairs << "\nmax_triangles = " << c.max_triangles << "\ngrading = " << d(c.grading)
      << "\nsensitivity = " << (c.sensitivity ? "true" : "false") << "\n\n";
    s << "[bo]\n"
      << "points = " << c.bo_points << "\ndiagonal_correction = " << (c.diagonal_correction ? "true" : "false")
      << "\n\n";
    s << "[analysis]\n"
      << "n_max = " << c.n_max << "\nsigma = " << d(c.sigma) << "\nthreshold = " << d(c.threshold)
      << "\ncell_threshold = " << d(c.cell_threshold) << "\nplanck_cell = " << cell_name(c.planck_cell)
      << "\nwall_speed = " << to_string(c.wall_speed) << "\nmask_cells = " << c.mask_cells
      << "\nhusimi_cells = " << c.husimi_cells << "\nx_points = " << c.x_points << "\n";
    return s.str();
}

std::string config_hash(const RunConfig& c) { return sha256_hex(canonical_ini(c)).substr(0, 16); }

} // namespace afa
