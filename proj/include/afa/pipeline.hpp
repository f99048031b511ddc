#pragma once

// Pipeline stages behind the command-line tool. Stage <name> writes into
// <out>/<name>/: a frozen config.ini, its data files, summary.json and a
// manifest.json with content hashes. A stage that throws removes its directory.
//
//   classical  ensemble, sections, island fraction, chaotic areas
//   spectrum   wedge mesh and eigenpairs near the shift
//   bo         channel potentials and Born-Oppenheimer levels
//   analyze    per-mode analysis; reads only the three directories above
//   validate   oracle suite

#include "afa/analysis.hpp"
#include "afa/config.hpp"
#include "afa/exact_solver.hpp"
#include "afa/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace afa {

struct StageReport {
    std::string stage;
    std::filesystem::path dir;
    nlohmann::json summary;
};

StageReport cmd_validate(const RunConfig& cfg);
StageReport cmd_classical(const RunConfig& cfg);
StageReport cmd_spectrum(const RunConfig& cfg);
StageReport cmd_bo(const RunConfig& cfg);
StageReport cmd_analyze(const RunConfig& cfg);
// validate, classical, spectrum, bo, analyze. Stops at the first failed validation.
std::vector<StageReport> cmd_all(const RunConfig& cfg);

// ----------------------------------------------------------------------------
// Readers for stage outputs

std::vector<Trajectory> load_trajectories(const std::filesystem::path& classical_dir);

struct StoredSpectrum {
    WedgeMesh mesh;
    ElementOrder order = ElementOrder::P2;
    std::vector<EigenPair> pairs;
};

StoredSpectrum load_spectrum(const std::filesystem::path& spectrum_dir);
std::vector<BOEigenPair> load_bo_levels(const std::filesystem::path& bo_dir);

nlohmann::json mesh_to_json(const WedgeMesh& mesh);
WedgeMesh mesh_from_json(const nlohmann::json& doc);

// ----------------------------------------------------------------------------
// Per-mode analysis

struct ModeSettings {
    XGrid x_grid;
    int n_max = 20;
    double sigma = 0.0;
    ChartGrid husimi_chart;
    double threshold = 0.7;
};

struct ModeReport {
    int id = 0;
    double E = 0.0;
    ChannelSpectrum channels;
    bool extracted = false;
    std::string extraction_error;
    WallProfile wall;
    BOMatch bo;
    HusimiGrid husimi;
    Classification cls;
};

// Modes are processed on a worker pool and returned in input order.
std::vector<ModeReport> analyze_modes(const PhysParams& params, const WedgeMesh& mesh, const DofMap& dofs,
                                      const std::vector<EigenPair>& pairs, const std::vector<BOEigenPair>& levels,
                                      const PhaseMask& mask, const ModeSettings& settings);

// Regular: the largest island fraction among modes labelled regular; chaotic:
// the smallest among modes labelled chaotic. Ties go to the mode nearest the
// target energy. -1 when a class is empty.
struct Representatives {
    int regular = -1;
    int chaotic = -1;
};

Representatives select_representatives(const std::vector<ModeReport>& modes, double target);

// Largest ratio over (n_bar, n_bar - 1) and (n_bar, n_bar + 1).
double nearest_channel_ratio(const PhysParams& params, int n_bar, double R_eval, double R_dot);

// Half-width of the equatorial band on the energy sphere, in units of sqrt(E).
inline constexpr double kEquatorBand = 0.05;

} // namespace afa
