#pragma once

// Run configuration. Values come from built-in defaults, then an INI file,
// then command-line overrides, in that order of precedence.

#include "afa/analysis.hpp"
#include "afa/classical.hpp"
#include "afa/core_model.hpp"
#include "afa/fem.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace afa {

enum class PlanckCell { Hbar, TwoPiHbar };

struct RunConfig {
    // [physics]
    double eta = 0.01;
    double M = 1.0;
    double k = 1.0;
    double hbar = 0.1;
    double R0 = 5.0;
    double energy = 12.0;

    // [classical]
    int trajectories = 20;
    int events = 5000;         // per trajectory
    std::uint64_t seed = 1;
    std::string initial;        // "R P r p": one trajectory from this state instead of the ensemble
    std::string frame = "both"; // particle | center_of_mass | both
    double cell_size = 0.1;     // island box size in the (R, P) plane
    int action_phase_cells = 64;
    double action_cell = 0.0;   // 0: hbar / 16

    // [quantum]
    double x_max = 0.0;  // 0: truncation rule
    double x_cut = -1.0; // < 0: truncation rule
    double target_h = 0.0;
    double kh = 0.7;
    ElementOrder order = ElementOrder::P2;
    double shift = 0.0;  // 0: energy
    int pairs = 50;
    int max_triangles = 200000;
    double grading = 0.0;
    bool sensitivity = true;

    // [bo]
    int bo_points = 4000;
    bool diagonal_correction = false;

    // [analysis]
    int n_max = 0;       // 0: max(20, open channels + 10)
    double sigma = 0.0;  // 0: sqrt(hbar / (M omega)) / cos(theta)
    double threshold = 0.7;
    double cell_threshold = 2.0;
    PlanckCell planck_cell = PlanckCell::TwoPiHbar;
    WallSpeedRule wall_speed = WallSpeedRule::ZeroPoint;
    int mask_cells = 48;
    int husimi_cells = 120;
    int x_points = 1501;

    // [output], not part of the hash
    std::filesystem::path out = "out";

    PhysParams params() const { return PhysParams::make(eta, M, k, hbar, R0); }
    double effective_shift() const { return shift != 0.0 ? shift : energy; }
    int open_channels() const;
    int effective_n_max() const;
    // Parsed `initial`; throws ConfigError when malformed.
    ClassicalState initial_state() const;
};

// key = "section.name"; throws ConfigError on unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

// Throws ConfigError naming every offending field.
void validate(const RunConfig& cfg);

// INI text of every hashed field in fixed order.
std::string canonical_ini(const RunConfig& cfg);
// First 16 hex digits of the SHA-256 of canonical_ini.
std::string config_hash(const RunConfig& cfg);

} // namespace afa
