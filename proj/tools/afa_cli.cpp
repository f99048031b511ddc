// afa: command-line driver for the pipeline stages.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical or other failure
// (including a failed `validate`).

#include "afa/errors.hpp"
#include "afa/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out, seed, eta, hbar, energy, shift, pairs, events;
    std::vector<std::string> set;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "INI file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "ensemble seed");
    sub->add_option("--eta", o.eta, "mass ratio m/M");
    sub->add_option("--hbar", o.hbar, "Planck constant");
    sub->add_option("--energy", o.energy, "total energy");
    sub->add_option("--shift", o.shift, "eigensolver shift (default: energy)");
    sub->add_option("--pairs", o.pairs, "number of eigenpairs");
    sub->add_option("--events", o.events, "collision events per trajectory");
    sub->add_option("--set", o.set, "section.key=value, any config field")->take_all();
}

afa::RunConfig resolve(const Overrides& o) {
    afa::RunConfig cfg;
    if (!o.config.empty()) cfg = afa::load_config(o.config, cfg);
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"output.dir", &o.out},        {"classical.seed", &o.seed},     {"physics.eta", &o.eta},
        {"physics.hbar", &o.hbar},     {"physics.energy", &o.energy},   {"quantum.shift", &o.shift},
        {"quantum.pairs", &o.pairs},   {"classical.events", &o.events},
    };
    for (const auto& s : o.set) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw afa::ConfigError("--set expects section.key=value, got '" + s + "'");
        afa::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, val] : flags) {
        if (*val) afa::apply_setting(cfg, key, **val);
    }
    afa::validate(cfg);
    return cfg;
}

void report(const afa::StageReport& r) {
    std::cout << r.stage << ": " << r.dir.string() << "\n" << r.summary.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Born-Oppenheimer versus exact quantization of a particle and a moving wall"};
    app.require_subcommand(1);
    Overrides o;
    const char* names[][2] = {
        {"validate", "oracle checks: collision algebra, Dirichlet triangle, harmonic hook"},
        {"classical", "classical ensemble, Poincare sections, island fraction"},
        {"spectrum", "finite-element eigenpairs of the wedge"},
        {"bo", "Born-Oppenheimer levels"},
        {"analyze", "per-mode analysis of stored spectrum, levels and trajectories"},
        {"all", "every stage in order"},
    };
    for (const auto& [name, help] : names) add_common(app.add_subcommand(name, help), o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const afa::RunConfig cfg = resolve(o);
        const std::string cmd = app.get_subcommands().front()->get_name();
        bool ok = true;
        if (cmd == "all") {
            for (const auto& r : afa::cmd_all(cfg)) {
                report(r);
                if (r.stage == "validate") ok = r.summary.at("passed").get<bool>();
            }
        } else {
            afa::StageReport r;
            if (cmd == "validate") r = afa::cmd_validate(cfg);
            else if (cmd == "classical") r = afa::cmd_classical(cfg);
            else if (cmd == "spectrum") r = afa::cmd_spectrum(cfg);
            else if (cmd == "bo") r = afa::cmd_bo(cfg);
            else r = afa::cmd_analyze(cfg);
            report(r);
            if (cmd == "validate") ok = r.summary.at("passed").get<bool>();
        }
        if (!ok) {
            std::cerr << "validation failed\n";
            return 3;
        }
        return 0;
    } catch (const afa::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
