#pragma once

#include <vector>

#include "qhall/evolve.hpp"
#include "qhall/model.hpp"

namespace qhall {

enum class PumpDirection { forward, backward, none };

// Linear sweep phi(t) = phi0 + rate * t. A decreasing phi (rate < 0) moves the
// lowest-band excitation towards larger site index: that is the forward pump.
struct PumpSchedule {
    double phi0 = 5.0 * kPi / 3.0;   // rad
    double rate = 0.0;               // rad/us
    double duration = 0.5;           // us

    PumpDirection direction() const;
    double phase_at(double t) const { return phi0 + rate * t; }
    // Time to sweep one full 2*pi cycle (infinite when rate == 0).
    double cycle_period() const;

    static PumpSchedule forward(double speed, double duration, double phi0 = 5.0 * kPi / 3.0);
    static PumpSchedule backward(double speed, double duration, double phi0 = 5.0 * kPi / 3.0);
    static PumpSchedule still(double duration, double phi0 = 5.0 * kPi / 3.0);
};

void validate(const PumpSchedule& schedule);

const char* to_string(PumpDirection d);

// Default pump step, 0.1 ns.
inline constexpr double kDefaultPumpStep = 1e-4;

struct PumpOptions {
    double dt = kDefaultPumpStep;   // us; must not exceed duration / 100
    int record_every = 1;           // store every n-th step (the final step is always stored)
};

// Piecewise-constant stepping with H evaluated at the midpoint phase of each
// step and the exact exponential applied per step. `chain.phi` is ignored.
Trajectory pump_evolve(const ChainSpec& chain, const PumpSchedule& schedule, const StateVector& psi0,
                       const PumpOptions& options = {});

enum class PumpInitial {
    basis_state,     // excitation on the central site
    lowest_band,     // projection of the central site onto the lowest band
};

struct PumpStart {
    StateVector state;
    double lowest_band_weight;   // |P_lowest e_center|^2
};

// Lowest band: the n_sites / sites_per_cell lowest eigenstates of the open chain at phi0.
// `strict` raises LocalizationTooWeak when the central site keeps less than
// `min_weight` of its probability inside the lowest band.
PumpStart prepare_pump_initial(const ChainSpec& chain_at_phi0, int center_site, PumpInitial mode,
                               bool strict = false, int sites_per_cell = 3, double min_weight = 0.9);

struct PumpedCharge {
    std::vector<double> per_cycle;       // delta_x at each completed 2*pi cycle
    std::vector<double> cycle_times;     // us
    double endpoint = 0.0;               // delta_x at the last sample
    bool incomplete_cycle = false;       // no full cycle covered
};

PumpedCharge pumped_charge(const Trajectory& traj, const PumpSchedule& schedule, int origin_site,
                           int sites_per_cell = 3);

}  // namespace qhall
