#include "qhall/pump.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qhall/error.hpp"

namespace qhall {

PumpDirection PumpSchedule::direction() const {
    if (rate < 0.0) {
        return PumpDirection::forward;
    }
    if (rate > 0.0) {
        return PumpDirection::backward;
    }
    return PumpDirection::none;
}

double PumpSchedule::cycle_period() const {
    return rate == 0.0 ? std::numeric_limits<double>::infinity() : kTwoPi / std::abs(rate);
}

PumpSchedule PumpSchedule::forward(double speed, double duration, double phi0) {
    return {phi0, -std::abs(speed), duration};
}

PumpSchedule PumpSchedule::backward(double speed, double duration, double phi0) {
    return {phi0, std::abs(speed), duration};
}

PumpSchedule PumpSchedule::still(double duration, double phi0) { return {phi0, 0.0, duration}; }

const char* to_string(PumpDirection d) {
    switch (d) {
        case PumpDirection::forward:
            return "forward";
        case PumpDirection::backward:
            return "backward";
        case PumpDirection::none:
            return "none";
    }
    return "none";
}

void validate(const PumpSchedule& schedule) {
    if (!std::isfinite(schedule.phi0) || !std::isfinite(schedule.rate)) {
        throw InvalidArgument("pump schedule: phi0 and rate must be finite");
    }
    if (!(schedule.duration > 0.0) || !std::isfinite(schedule.duration)) {
        throw InvalidArgument("pump schedule: duration must be > 0");
    }
}

Trajectory pump_evolve(const ChainSpec& chain, const PumpSchedule& schedule, const StateVector& psi0,
                       const PumpOptions& options) {
    validate(chain);
    validate(schedule);
    if (psi0.dim() != chain.n_sites) {
        throw InvalidArgument("pump_evolve: initial state dimension differs from chain length");
    }
    if (!(options.dt > 0.0) || options.dt > schedule.duration / 100.0 * (1.0 + 1e-12)) {
        throw InvalidArgument("pump_evolve: dt must satisfy 0 < dt <= duration / 100");
    }
    if (options.record_every < 1) {
        throw InvalidArgument("pump_evolve: record_every must be >= 1");
    }
    const auto steps = static_cast<long>(std::llround(schedule.duration / options.dt));
    const int n = chain.n_sites;

    Trajectory traj;
    const long stored = steps / options.record_every + 2;
    traj.times.reserve(static_cast<size_t>(stored));
    std::vector<RVector> rows;
    rows.reserve(static_cast<size_t>(stored));
    traj.times.push_back(0.0);
    rows.push_back(psi0.amplitudes().cwiseAbs2());

    CVector psi = psi0.amplitudes();
    CVector phased(n);
    ChainSpec at = chain;
    for (long s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) * options.dt;
        at.phi = schedule.phase_at(t + 0.5 * options.dt);
        const Eigensystem eig = eigensolve(build_aah_chain(at).matrix());
        const CVector c = eig.vectors.adjoint() * psi;
        for (int m = 0; m < n; ++m) {
            phased[m] = c[m] * std::polar(1.0, -kTwoPi * eig.values[m] * options.dt);
        }
        psi = eig.vectors * phased;
        if ((s + 1) % options.record_every == 0 || s + 1 == steps) {
            traj.times.push_back(static_cast<double>(s + 1) * options.dt);
            rows.push_back(psi.cwiseAbs2());
        }
    }
    traj.probabilities.resize(static_cast<Eigen::Index>(rows.size()), n);
    for (size_t r = 0; r < rows.size(); ++r) {
        traj.probabilities.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    }
    return traj;
}

PumpStart prepare_pump_initial(const ChainSpec& chain_at_phi0, int center_site, PumpInitial mode, bool strict,
                               int sites_per_cell, double min_weight) {
    validate(chain_at_phi0);
    const int n = chain_at_phi0.n_sites;
    if (center_site < 1 || center_site > n) {
        throw InvalidArgument("prepare_pump_initial: center site " + std::to_string(center_site) +
                              " outside the chain");
    }
    if (sites_per_cell < 1) {
        throw InvalidArgument("prepare_pump_initial: sites_per_cell must be >= 1");
    }
    const int band_states = std::max(1, n / sites_per_cell);
    const Eigensystem eig = eigensolve(build_aah_chain(chain_at_phi0).matrix());
    const CMatrix lowest = eig.vectors.leftCols(band_states);
    CVector e = CVector::Zero(n);
    e[center_site - 1] = 1.0;
    CVector projected = lowest * (lowest.adjoint() * e);
    const double weight = projected.squaredNorm();

    if (mode == PumpInitial::basis_state) {
        if (strict && weight < min_weight) {
            throw LocalizationTooWeak("prepare_pump_initial: central site keeps only " + std::to_string(weight) +
                                      " of its weight in the lowest band");
        }
        return {StateVector::basis(n, center_site - 1), weight};
    }
    if (weight < 1e-12) {
        throw LocalizationTooWeak("prepare_pump_initial: central site has no lowest-band weight");
    }
    projected /= std::sqrt(weight);
    return {StateVector(std::move(projected)), weight};
}

PumpedCharge pumped_charge(const Trajectory& traj, const PumpSchedule& schedule, int origin_site,
                           int sites_per_cell) {
    validate(schedule);
    const auto dx = center_of_mass(traj, origin_site, sites_per_cell);
    PumpedCharge out;
    if (!dx.empty()) {
        out.endpoint = dx.back();
    }
    const double period = schedule.cycle_period();
    if (std::isfinite(period) && !traj.times.empty()) {
        const double t_end = traj.times.back();
        for (int c = 1; c * period <= t_end + 1e-12; ++c) {
            const double target = c * period;
            // Linear interpolation between the recorded samples around the boundary.
            size_t hi = 1;
            while (hi + 1 < traj.times.size() && traj.times[hi] < target) {
                ++hi;
            }
            double value = dx.back();
            if (traj.times.size() >= 2) {
                const size_t lo = hi - 1;
                const double span = traj.times[hi] - traj.times[lo];
                const double w = span > 0.0 ? std::clamp((target - traj.times[lo]) / span, 0.0, 1.0) : 1.0;
                value = (1.0 - w) * dx[lo] + w * dx[hi];
            }
            out.per_cycle.push_back(value);
            out.cycle_times.push_back(target);
        }
    }
    out.incomplete_cycle = out.per_cycle.empty();
    return out;
}

}  // namespace qhall
