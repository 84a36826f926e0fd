#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qhall/linalg.hpp"
#include "qhall/model.hpp"

namespace qhall {

// Times are in microseconds and energies in MHz, so the propagator is
// exp(-i * 2*pi * H * t).

class StateVector {
public:
    // Throws InvalidArgument unless |norm - 1| <= 1e-12.
    explicit StateVector(CVector amplitudes);

    static StateVector basis(int dim, int index);

    int dim() const { return static_cast<int>(amplitudes_.size()); }
    const CVector& amplitudes() const { return amplitudes_; }

private:
    CVector amplitudes_;
};

struct Trajectory {
    std::vector<double> times;                 // us
    RMatrix probabilities;                     // rows: times, cols: sites
    std::optional<CMatrix> amplitudes;         // rows: times, cols: sites

    int samples() const { return static_cast<int>(times.size()); }
    int sites() const { return static_cast<int>(probabilities.cols()); }
    std::vector<double> row(int t) const;
};

// Uniform grid 0, dt, ..., t_max (inclusive when t_max is a multiple of dt).
std::vector<double> time_grid(double t_max, double dt);

struct EvolveOptions {
    double gamma = 0.0;          // 1/us, uniform amplitude envelope exp(-gamma t)
    bool keep_amplitudes = false;
};

Trajectory evolve_state(const Hamiltonian& h, const StateVector& psi0, std::span<const double> times,
                        const EvolveOptions& options = {});

// Same, reusing a precomputed eigensystem of h.
Trajectory evolve_state(const Eigensystem& eig, const StateVector& psi0, std::span<const double> times,
                        const EvolveOptions& options = {});

// Amplitudes at a single time.
CVector propagate(const Eigensystem& eig, const CVector& psi0, double t);

// Single-site excitation walk on a uniform grid. Defaults: 1 us window, 2 ns step.
Trajectory quantum_walk(const Hamiltonian& h, SiteLabel initial_site, double t_max = 1.0, double dt = 0.002,
                        double gamma = 0.0);

// sum_j sqrt(p_j q_j).
double distribution_fidelity(std::span<const double> p, std::span<const double> q);

// delta_x(t) = sum_j P_j(t) (j - j0) / sites_per_cell over the chain index.
// For a ladder the chain index is the rung and both legs contribute.
std::vector<double> center_of_mass(const Trajectory& traj, const Hamiltonian& h, int origin_site,
                                   int sites_per_cell);

// Chain-only variant: site j of column j-1.
std::vector<double> center_of_mass(const Trajectory& traj, int origin_site, int sites_per_cell);

// Mean over time of P_site(t).
double time_averaged_occupation(const Trajectory& traj, int site_index);

}  // namespace qhall
