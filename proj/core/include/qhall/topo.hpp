#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qhall/linalg.hpp"
#include "qhall/model.hpp"
#include "qhall/spectro.hpp"

namespace qhall {

enum class BlochKind { chain3, ladder6 };

// Momentum-space Hamiltonian of the b = +-1/3 chain (3 sublattices) or ladder
// (3 sublattices x 2 legs), basis (1up, 2up, 3up, 1down, 2down, 3down).
struct BlochModel {
    BlochKind kind = BlochKind::chain3;
    double j_par = 8.0;
    double j_par2 = 0.8;
    double j_perp = 0.0;
    double j_cross = 0.0;
    double delta_up = 12.0;
    double delta_down = 12.0;
    // Only +1/3 and -1/3 are supported; -1/3 reverses the flux.
    double b = 1.0 / 3.0;

    int bands() const { return kind == BlochKind::chain3 ? 3 : 6; }

    static BlochModel chain(double j_par, double j_par2, double delta);
    static BlochModel ladder(double j_par, double j_par2, double j_perp, double j_cross, double delta_up,
                             double delta_down);
};

void validate(const BlochModel& model);

CMatrix bloch_hamiltonian(const BlochModel& model, double k, double phi);

struct TorusGrid {
    int nk = 60;
    int nphi = 60;
};

// Smallest direct gap between bands g and g+1 (g is 1-based) over the torus,
// refined from the coarse grid minimum by local zoom search.
struct GapInfo {
    int gap = 0;
    double min_gap = 0.0;
    double k = 0.0;
    double phi = 0.0;
    bool closed = false;
};

// Direct gaps below this are treated as closures.
inline constexpr double kGapClosureTolerance = 1e-6;

std::vector<GapInfo> scan_gaps(const BlochModel& model, const TorusGrid& grid = {});

// Per-band energy extrema over the torus (grid sampled).
struct BandEdges {
    std::vector<double> min;
    std::vector<double> max;
};
BandEdges band_edges(const BlochModel& model, const TorusGrid& grid = {});

struct ChernOptions {
    // Multiply every eigenvector by a random phase before computing links.
    std::optional<std::uint64_t> random_gauge_seed;
    bool check_gap = true;
    int threads = 1;
};

// Chern number of bands [first, last] (1-based, inclusive) from link variables
// of occupied-subspace overlap determinants on an nk x nphi torus grid.
// Throws GapClosure when a separating gap closes.
int chern_number(const BlochModel& model, int first_band, int last_band, const TorusGrid& grid,
                 const ChernOptions& options = {});

struct BandGroup {
    int first = 1;
    int last = 1;
    int chern = 0;
};

struct ParityResult {
    double phi = 0.0;
    int filled_bands = 0;
    int negative_at_0 = 0;
    int negative_at_pi = 0;
    int invariant = 0;
};

struct ChernReport {
    TorusGrid grid;
    std::vector<BandGroup> groups;
    std::vector<std::optional<int>> per_band;   // empty slot: band not isolated
    std::vector<std::optional<int>> gap_sums;   // index g-1 for gap g; empty: gap closed
    std::vector<GapInfo> gaps;
    std::vector<ParityResult> parity;
    std::string sign_convention;
};

ChernReport chern_report(const BlochModel& model, const TorusGrid& grid = {}, int threads = 1);

// Sum of band Chern numbers below the gap above `filled_bands` (e^2/h = 1).
int hall_conductivity(const ChernReport& report, int filled_bands);

// The antidiagonal 6x6 inversion operator.
CMatrix inversion_operator();

// max |P H(k) P^-1 - H(-k)|.
double inversion_residual(const BlochModel& model, double phi, double k);

// |N1 - N2| from negative inversion parities of the lowest `filled_bands`
// eigenstates at k = 0 (N1) and k = pi (N2).
ParityResult parity_invariant(const BlochModel& model, double phi, int filled_bands);

struct EdgeState {
    double energy = 0.0;
    std::vector<double> left_weight;    // per leg, first unit cell
    std::vector<double> right_weight;   // per leg, last unit cell
    double left() const;
    double right() const;
};

// Eigenstates of an open-boundary Hamiltonian with energy inside [lo, hi],
// annotated with their weight on the first and last unit cell of each leg.
std::vector<EdgeState> edge_state_report(const Hamiltonian& h_open, double lo, double hi, int cell_size = 3);

struct EdgeCrossings {
    int left_up = 0;
    int left_down = 0;
    int right_up = 0;
    int right_down = 0;
    int left_net() const { return left_up - left_down; }
    int right_net() const { return right_up - right_down; }
};

// Signed crossings of the reference energy by open-boundary eigenvalues while
// phi sweeps [0, 2pi), attributed to the edge carrying more end-cell weight.
EdgeCrossings count_edge_crossings(const HamiltonianFamily& family, double reference_energy, int phi_points,
                                   int cell_size = 3);

}  // namespace qhall
