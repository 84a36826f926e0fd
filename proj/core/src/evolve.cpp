#include "qhall/evolve.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "qhall/error.hpp"

namespace qhall {

StateVector::StateVector(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() == 0) {
        throw InvalidArgument("StateVector: empty amplitude vector");
    }
    const double norm = amplitudes_.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-12) {
        throw InvalidArgument("StateVector: norm " + std::to_string(norm) + " differs from 1");
    }
}

StateVector StateVector::basis(int dim, int index) {
    if (index < 0 || index >= dim) {
        throw InvalidArgument("basis state index " + std::to_string(index) + " outside [0, " +
                              std::to_string(dim) + ")");
    }
    CVector v = CVector::Zero(dim);
    v[index] = 1.0;
    return StateVector(std::move(v));
}

std::vector<double> Trajectory::row(int t) const {
    std::vector<double> out(static_cast<size_t>(probabilities.cols()));
    for (Eigen::Index j = 0; j < probabilities.cols(); ++j) {
        out[static_cast<size_t>(j)] = probabilities(t, j);
    }
    return out;
}

std::vector<double> time_grid(double t_max, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt) || !(t_max >= 0.0) || !std::isfinite(t_max)) {
        throw InvalidArgument("time_grid: need dt > 0 and t_max >= 0");
    }
    const auto steps = static_cast<long>(std::floor(t_max / dt + 1e-9));
    std::vector<double> t(static_cast<size_t>(steps) + 1);
    for (long k = 0; k <= steps; ++k) {
        t[static_cast<size_t>(k)] = static_cast<double>(k) * dt;
    }
    return t;
}

CVector propagate(const Eigensystem& eig, const CVector& psi0, double t) {
    const CVector c = eig.vectors.adjoint() * psi0;
    CVector phased(c.size());
    for (Eigen::Index n = 0; n < c.size(); ++n) {
        phased[n] = c[n] * std::polar(1.0, -kTwoPi * eig.values[n] * t);
    }
    return eig.vectors * phased;
}

Trajectory evolve_state(const Eigensystem& eig, const StateVector& psi0, std::span<const double> times,
                        const EvolveOptions& options) {
    const Eigen::Index dim = eig.values.size();
    if (psi0.dim() != dim) {
        throw InvalidArgument("evolve_state: state dimension " + std::to_string(psi0.dim()) +
                              " differs from Hamiltonian dimension " + std::to_string(dim));
    }
    if (!(options.gamma >= 0.0) || !std::isfinite(options.gamma)) {
        throw InvalidArgument("evolve_state: gamma must be finite and >= 0");
    }
    for (size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= 0.0) || (k > 0 && times[k] < times[k - 1])) {
            throw InvalidArgument("evolve_state: times must be non-negative and ascending");
        }
    }

    const CVector c = eig.vectors.adjoint() * psi0.amplitudes();
    const auto n_t = static_cast<Eigen::Index>(times.size());
    Trajectory traj;
    traj.times.assign(times.begin(), times.end());
    traj.probabilities.resize(n_t, dim);
    CMatrix amps;
    if (options.keep_amplitudes) {
        amps.resize(n_t, dim);
    }
    CVector phased(dim);
    for (Eigen::Index k = 0; k < n_t; ++k) {
        const double t = times[static_cast<size_t>(k)];
        for (Eigen::Index n = 0; n < dim; ++n) {
            phased[n] = c[n] * std::polar(1.0, -kTwoPi * eig.values[n] * t);
        }
        CVector psi = eig.vectors * phased;
        if (options.gamma > 0.0) {
            psi *= std::exp(-options.gamma * t);
        }
        traj.probabilities.row(k) = psi.cwiseAbs2().transpose();
        if (options.keep_amplitudes) {
            amps.row(k) = psi.transpose();
        }
    }
    if (options.keep_amplitudes) {
        traj.amplitudes = std::move(amps);
    }
    return traj;
}

Trajectory evolve_state(const Hamiltonian& h, const StateVector& psi0, std::span<const double> times,
                        const EvolveOptions& options) {
    if (psi0.dim() != h.dim()) {
        throw InvalidArgument("evolve_state: state dimension " + std::to_string(psi0.dim()) +
                              " differs from Hamiltonian dimension " + std::to_string(h.dim()));
    }
    return evolve_state(eigensolve(h.matrix()), psi0, times, options);
}

Trajectory quantum_walk(const Hamiltonian& h, SiteLabel initial_site, double t_max, double dt, double gamma) {
    const int start = h.index_of(initial_site);
    const auto times = time_grid(t_max, dt);
    return evolve_state(h, StateVector::basis(h.dim(), start), times, {.gamma = gamma});
}

double distribution_fidelity(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw InvalidArgument("distribution_fidelity: length mismatch");
    }
    double sp = 0.0;
    double sq = 0.0;
    double f = 0.0;
    for (size_t j = 0; j < p.size(); ++j) {
        if (p[j] < 0.0 || q[j] < 0.0 || !std::isfinite(p[j]) || !std::isfinite(q[j])) {
            throw InvalidArgument("distribution_fidelity: negative or non-finite probability at index " +
                                  std::to_string(j));
        }
        sp += p[j];
        sq += q[j];
        f += std::sqrt(p[j] * q[j]);
    }
    if (sp > 1.0 + 1e-9 || sq > 1.0 + 1e-9) {
        throw InvalidArgument("distribution_fidelity: distribution sums above 1");
    }
    return f;
}

std::vector<double> center_of_mass(const Trajectory& traj, const Hamiltonian& h, int origin_site,
                                   int sites_per_cell) {
    if (traj.sites() != h.dim()) {
        throw InvalidArgument("center_of_mass: trajectory and Hamiltonian dimensions differ");
    }
    if (sites_per_cell < 1) {
        throw InvalidArgument("center_of_mass: sites_per_cell must be >= 1");
    }
    if (origin_site < 1 || origin_site > h.length()) {
        throw InvalidArgument("center_of_mass: origin site " + std::to_string(origin_site) + " outside the lattice");
    }
    std::vector<double> dx(static_cast<size_t>(traj.samples()), 0.0);
    for (int k = 0; k < traj.samples(); ++k) {
        double acc = 0.0;
        for (int i = 0; i < h.dim(); ++i) {
            acc += traj.probabilities(k, i) * (h.labels()[static_cast<size_t>(i)].index - origin_site);
        }
        dx[static_cast<size_t>(k)] = acc / sites_per_cell;
    }
    return dx;
}

std::vector<double> center_of_mass(const Trajectory& traj, int origin_site, int sites_per_cell) {
    if (sites_per_cell < 1) {
        throw InvalidArgument("center_of_mass: sites_per_cell must be >= 1");
    }
    if (origin_site < 1 || origin_site > traj.sites()) {
        throw InvalidArgument("center_of_mass: origin site " + std::to_string(origin_site) + " outside the lattice");
    }
    std::vector<double> dx(static_cast<size_t>(traj.samples()), 0.0);
    for (int k = 0; k < traj.samples(); ++k) {
        double acc = 0.0;
        for (int j = 1; j <= traj.sites(); ++j) {
            acc += traj.probabilities(k, j - 1) * (j - origin_site);
        }
        dx[static_cast<size_t>(k)] = acc / sites_per_cell;
    }
    return dx;
}

double time_averaged_occupation(const Trajectory& traj, int site_index) {
    if (site_index < 0 || site_index >= traj.sites()) {
        throw InvalidArgument("time_averaged_occupation: site index out of range");
    }
    if (traj.samples() == 0) {
        return 0.0;
    }
    return traj.probabilities.col(site_index).mean();
}

}  // namespace qhall
