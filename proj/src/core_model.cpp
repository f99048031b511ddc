#include "afa/core_model.hpp"

#include "afa/errors.hpp"

#include <string>

namespace afa {

PhysParams PhysParams::make(double eta, double M, double k, double hbar, double R0) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ConfigError("invalid physical parameter: " + what);
        }
    };
    require(std::isfinite(eta) && eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
    require(std::isfinite(M) && M > 0.0, "M must be positive");
    require(std::isfinite(k) && k > 0.0, "k must be positive");
    require(std::isfinite(hbar) && hbar > 0.0, "hbar must be positive");
    require(std::isfinite(R0) && R0 > 0.0, "R0 must be positive");
    return PhysParams(eta, M, k, hbar, R0);
}

double total_energy(const ClassicalState& s, const PhysParams& params) {
    return s.P * s.P / (2.0 * params.M()) + s.p * s.p / (2.0 * params.m()) +
           params.wall_potential(s.R);
}

Velocities elastic_collision(double v, double V, double eta) {
    const double denom = 1.0 + eta;
    return {((eta - 1.0) * v + 2.0 * V) / denom, ((1.0 - eta) * V + 2.0 * eta * v) / denom};
}

WedgePoint to_wedge(double R, double r, const PhysParams& params) {
    if (!(R >= 0.0) || !(r >= 0.0)) {
        throw GeometryError("to_wedge: negative coordinate");
    }
    if (r > R) {
        throw GeometryError("to_wedge: particle outside the box (r > R)");
    }
    return {R, std::sqrt(params.eta()) * r};
}

PhysicalPoint from_wedge(double x, double y, const PhysParams& params) {
    if (!(x >= 0.0) || !(y >= 0.0)) {
        throw GeometryError("from_wedge: negative coordinate");
    }
    const double r = y / std::sqrt(params.eta());
    // allow rounding at the wedge edge
    if (r > x * (1.0 + 1e-12)) {
        throw GeometryError("from_wedge: point above the wedge edge");
    }
    return {x, r};
}

} // namespace afa
