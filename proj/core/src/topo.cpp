#include "qhall/topo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qhall/error.hpp"
#include "qhall/parallel.hpp"

namespace qhall {

namespace {

// Orientation of the plaquette sum relative to the link-product phase. Chosen
// so that a gap whose left-edge branch rises with phi carries positive Hall
// conductivity (checked against open chains in the tests).
constexpr double kOrientation = -1.0;

constexpr const char* kSignConvention =
    "sigma > 0 when the left-edge in-gap branch of the open chain has dE/dphi > 0";

void check_grid(const TorusGrid& grid) {
    if (grid.nk < 2 || grid.nphi < 2) {
        throw InvalidArgument("torus grid needs nk >= 2 and nphi >= 2");
    }
}

double grid_k(const TorusGrid& grid, int i) { return kTwoPi * i / grid.nk; }
double grid_phi(const TorusGrid& grid, int j) { return kTwoPi * j / grid.nphi; }

double direct_gap(const BlochModel& model, int gap, double k, double phi) {
    const RVector e = eigenvalues(bloch_hamiltonian(model, k, phi));
    return e[gap] - e[gap - 1];
}

struct GridSpectrum {
    TorusGrid grid;
    std::vector<RVector> values;   // index i * nphi + j
};

GridSpectrum sample_spectrum(const BlochModel& model, const TorusGrid& grid) {
    GridSpectrum s{grid, {}};
    s.values.resize(static_cast<size_t>(grid.nk) * grid.nphi);
    for (int i = 0; i < grid.nk; ++i) {
        for (int j = 0; j < grid.nphi; ++j) {
            s.values[static_cast<size_t>(i) * grid.nphi + j] =
                eigenvalues(bloch_hamiltonian(model, grid_k(grid, i), grid_phi(grid, j)));
        }
    }
    return s;
}

GapInfo refine_gap(const BlochModel& model, const GridSpectrum& spec, int gap) {
    const auto& grid = spec.grid;
    auto at = [&](int i, int j) {
        i = (i % grid.nk + grid.nk) % grid.nk;
        j = (j % grid.nphi + grid.nphi) % grid.nphi;
        const RVector& e = spec.values[static_cast<size_t>(i) * grid.nphi + j];
        return e[gap] - e[gap - 1];
    };
    struct Seed {
        double value;
        int i;
        int j;
    };
    std::vector<Seed> seeds;
    for (int i = 0; i < grid.nk; ++i) {
        for (int j = 0; j < grid.nphi; ++j) {
            const double v = at(i, j);
            bool local_min = true;
            for (int di = -1; di <= 1 && local_min; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    if ((di != 0 || dj != 0) && at(i + di, j + dj) < v) {
                        local_min = false;
                        break;
                    }
                }
            }
            if (local_min) {
                seeds.push_back({v, i, j});
            }
        }
    }
    std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
        return a.value < b.value || (a.value == b.value && (a.i < b.i || (a.i == b.i && a.j < b.j)));
    });
    if (seeds.size() > 6) {
        seeds.resize(6);
    }

    GapInfo best{gap, std::numeric_limits<double>::infinity(), 0.0, 0.0, false};
    for (const auto& seed : seeds) {
        double k = grid_k(grid, seed.i);
        double phi = grid_phi(grid, seed.j);
        double value = seed.value;
        double step_k = kTwoPi / grid.nk;
        double step_phi = kTwoPi / grid.nphi;
        for (int iter = 0; iter < 64; ++iter) {
            double next_k = k;
            double next_phi = phi;
            for (int a = -2; a <= 2; ++a) {
                for (int c = -2; c <= 2; ++c) {
                    const double kk = k + 0.5 * a * step_k;
                    const double pp = phi + 0.5 * c * step_phi;
                    const double v = direct_gap(model, gap, kk, pp);
                    if (v < value) {
                        value = v;
                        next_k = kk;
                        next_phi = pp;
                    }
                }
            }
            k = next_k;
            phi = next_phi;
            step_k *= 0.5;
            step_phi *= 0.5;
        }
        if (value < best.min_gap) {
            best.min_gap = value;
            best.k = reduce_phase(k);
            best.phi = reduce_phase(phi);
        }
    }
    best.closed = best.min_gap < kGapClosureTolerance;
    return best;
}

// Eigenvectors on the grid, optionally with random column phases.
std::vector<CMatrix> sample_states(const BlochModel& model, const TorusGrid& grid,
                                   const std::optional<std::uint64_t>& gauge_seed) {
    std::vector<CMatrix> states(static_cast<size_t>(grid.nk) * grid.nphi);
    for (int i = 0; i < grid.nk; ++i) {
        for (int j = 0; j < grid.nphi; ++j) {
            states[static_cast<size_t>(i) * grid.nphi + j] =
                eigensolve(bloch_hamiltonian(model, grid_k(grid, i), grid_phi(grid, j))).vectors;
        }
    }
    if (gauge_seed) {
        std::mt19937_64 rng(*gauge_seed);
        std::uniform_real_distribution<double> angle(0.0, kTwoPi);
        for (auto& v : states) {
            for (Eigen::Index n = 0; n < v.cols(); ++n) {
                v.col(n) *= std::polar(1.0, angle(rng));
            }
        }
    }
    return states;
}

Complex link(const CMatrix& a, const CMatrix& b, int first, int count) {
    const CMatrix overlap = a.middleCols(first, count).adjoint() * b.middleCols(first, count);
    if (count == 1) {
        return overlap(0, 0);
    }
    return overlap.determinant();
}

}  // namespace

BlochModel BlochModel::chain(double j_par, double j_par2, double delta) {
    BlochModel m;
    m.kind = BlochKind::chain3;
    m.j_par = j_par;
    m.j_par2 = j_par2;
    m.j_perp = 0.0;
    m.j_cross = 0.0;
    m.delta_up = delta;
    m.delta_down = delta;
    return m;
}

BlochModel BlochModel::ladder(double j_par, double j_par2, double j_perp, double j_cross, double delta_up,
                              double delta_down) {
    BlochModel m;
    m.kind = BlochKind::ladder6;
    m.j_par = j_par;
    m.j_par2 = j_par2;
    m.j_perp = j_perp;
    m.j_cross = j_cross;
    m.delta_up = delta_up;
    m.delta_down = delta_down;
    return m;
}

void validate(const BlochModel& model) {
    for (double v : {model.j_par, model.j_par2, model.j_perp, model.j_cross, model.delta_up, model.delta_down}) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("Bloch model parameters must be finite");
        }
    }
    if (std::abs(std::abs(model.b) - 1.0 / 3.0) > 1e-12) {
        throw InvalidArgument("Bloch model supports b = +-1/3 only");
    }
}

CMatrix bloch_hamiltonian(const BlochModel& model, double k, double phi) {
    const int legs = model.kind == BlochKind::chain3 ? 1 : 2;
    const int dim = 3 * legs;
    const Complex e = std::polar(1.0, -k);   // e^{-ik}
    const double jp = model.j_par;
    const double jt = model.j_par2;
    CMatrix h = CMatrix::Zero(dim, dim);
    const double deltas[2] = {model.delta_up, model.delta_down};
    for (int leg = 0; leg < legs; ++leg) {
        const int o = 3 * leg;
        for (int l = 1; l <= 3; ++l) {
            h(o + l - 1, o + l - 1) = onsite_potential(deltas[leg], model.b, l, phi);
        }
        h(o + 0, o + 1) = jp + jt * e;
        h(o + 0, o + 2) = jp * e + jt;
        h(o + 1, o + 2) = jp + jt * e;
    }
    if (legs == 2) {
        const double jx = model.j_cross;
        h(0, 3) = model.j_perp;
        h(1, 4) = model.j_perp;
        h(2, 5) = model.j_perp;
        h(0, 4) = jx;
        h(0, 5) = jx * e;
        h(1, 3) = jx;
        h(1, 5) = jx;
        h(2, 3) = jx * std::conj(e);
        h(2, 4) = jx;
    }
    for (int r = 0; r < dim; ++r) {
        for (int c = r + 1; c < dim; ++c) {
            h(c, r) = std::conj(h(r, c));
        }
    }
    return h;
}

std::vector<GapInfo> scan_gaps(const BlochModel& model, const TorusGrid& grid) {
    validate(model);
    check_grid(grid);
    const GridSpectrum spec = sample_spectrum(model, grid);
    std::vector<GapInfo> gaps;
    for (int g = 1; g < model.bands(); ++g) {
        gaps.push_back(refine_gap(model, spec, g));
    }
    return gaps;
}

BandEdges band_edges(const BlochModel& model, const TorusGrid& grid) {
    validate(model);
    check_grid(grid);
    const GridSpectrum spec = sample_spectrum(model, grid);
    BandEdges edges;
    edges.min.assign(static_cast<size_t>(model.bands()), std::numeric_limits<double>::infinity());
    edges.max.assign(static_cast<size_t>(model.bands()), -std::numeric_limits<double>::infinity());
    for (const auto& e : spec.values) {
        for (int n = 0; n < model.bands(); ++n) {
            edges.min[static_cast<size_t>(n)] = std::min(edges.min[static_cast<size_t>(n)], e[n]);
            edges.max[static_cast<size_t>(n)] = std::max(edges.max[static_cast<size_t>(n)], e[n]);
        }
    }
    return edges;
}

int chern_number(const BlochModel& model, int first_band, int last_band, const TorusGrid& grid,
                 const ChernOptions& options) {
    validate(model);
    check_grid(grid);
    const int bands = model.bands();
    if (first_band < 1 || last_band > bands || first_band > last_band) {
        throw InvalidArgument("chern_number: band range [" + std::to_string(first_band) + ", " +
                              std::to_string(last_band) + "] invalid for " + std::to_string(bands) + " bands");
    }
    if (options.check_gap && (first_band > 1 || last_band < bands)) {
        const auto gaps = scan_gaps(model, grid);
        for (int g : {first_band - 1, last_band}) {
            if (g >= 1 && g < bands && gaps[static_cast<size_t>(g - 1)].closed) {
                throw GapClosure(g, gaps[static_cast<size_t>(g - 1)].min_gap);
            }
        }
    }
    const auto states = sample_states(model, grid, options.random_gauge_seed);
    const int first = first_band - 1;
    const int count = last_band - first_band + 1;
    auto state = [&](int i, int j) -> const CMatrix& {
        return states[static_cast<size_t>(i % grid.nk) * grid.nphi + static_cast<size_t>(j % grid.nphi)];
    };
    std::vector<double> row_sums(static_cast<size_t>(grid.nk), 0.0);
    parallel_for(grid.nk, options.threads, [&](int i) {
        double acc = 0.0;
        for (int j = 0; j < grid.nphi; ++j) {
            const CMatrix& a = state(i, j);
            const CMatrix& b = state(i + 1, j);
            const CMatrix& c = state(i + 1, j + 1);
            const CMatrix& d = state(i, j + 1);
            const Complex loop = link(a, b, first, count) * link(b, c, first, count) * link(c, d, first, count) *
                                 link(d, a, first, count);
            acc += std::arg(loop);
        }
        row_sums[static_cast<size_t>(i)] = acc;
    });
    double total = 0.0;
    for (double r : row_sums) {
        total += r;
    }
    const double c = kOrientation * total / kTwoPi;
    const double rounded = std::round(c);
    if (std::abs(c - rounded) > 1e-6) {
        throw NumericError("chern_number: plaquette sum " + std::to_string(c) + " is not integral");
    }
    return static_cast<int>(rounded) + 0;
}

ChernReport chern_report(const BlochModel& model, const TorusGrid& grid, int threads) {
    ChernReport report;
    report.grid = grid;
    report.gaps = scan_gaps(model, grid);
    report.sign_convention = kSignConvention;
    const int bands = model.bands();
    report.per_band.assign(static_cast<size_t>(bands), std::nullopt);
    report.gap_sums.assign(static_cast<size_t>(bands - 1), std::nullopt);

    int start = 1;
    for (int g = 1; g <= bands; ++g) {
        const bool boundary = g == bands || !report.gaps[static_cast<size_t>(g - 1)].closed;
        if (!boundary) {
            continue;
        }
        ChernOptions options;
        options.check_gap = false;
        options.threads = threads;
        const int c = chern_number(model, start, g, grid, options);
        report.groups.push_back({start, g, c});
        if (start == g) {
            report.per_band[static_cast<size_t>(g - 1)] = c;
        }
        start = g + 1;
    }
    int running = 0;
    for (const auto& group : report.groups) {
        running += group.chern;
        if (group.last < bands) {
            report.gap_sums[static_cast<size_t>(group.last - 1)] = running;
        }
    }
    return report;
}

int hall_conductivity(const ChernReport& report, int filled_bands) {
    const int bands = static_cast<int>(report.per_band.size());
    if (filled_bands < 0 || filled_bands > bands) {
        throw InvalidArgument("hall_conductivity: filling " + std::to_string(filled_bands) + " outside [0, " +
                              std::to_string(bands) + "]");
    }
    if (filled_bands == 0) {
        return 0;
    }
    if (filled_bands == bands) {
        int total = 0;
        for (const auto& g : report.groups) {
            total += g.chern;
        }
        return total;
    }
    const auto& sum = report.gap_sums[static_cast<size_t>(filled_bands - 1)];
    if (!sum) {
        const auto& gap = report.gaps[static_cast<size_t>(filled_bands - 1)];
        throw GapClosure(filled_bands, gap.min_gap);
    }
    return *sum;
}

CMatrix inversion_operator() {
    CMatrix p = CMatrix::Zero(6, 6);
    for (int i = 0; i < 6; ++i) {
        p(i, 5 - i) = 1.0;
    }
    return p;
}

double inversion_residual(const BlochModel& model, double phi, double k) {
    if (model.kind != BlochKind::ladder6) {
        throw InvalidArgument("inversion_residual: requires the ladder6 model");
    }
    const CMatrix p = inversion_operator();
    const CMatrix lhs = p * bloch_hamiltonian(model, k, phi) * p.adjoint();
    return (lhs - bloch_hamiltonian(model, -k, phi)).cwiseAbs().maxCoeff();
}

ParityResult parity_invariant(const BlochModel& model, double phi, int filled_bands) {
    validate(model);
    if (model.kind != BlochKind::ladder6) {
        throw InvalidArgument("parity_invariant: requires the ladder6 model");
    }
    if (filled_bands < 0 || filled_bands > 6) {
        throw InvalidArgument("parity_invariant: filling outside [0, 6]");
    }
    double residual = 0.0;
    for (double k : {0.0, kPi, 0.37, 1.21, 2.03, 2.89, 4.4, 5.7}) {
        residual = std::max(residual, inversion_residual(model, phi, k));
    }
    if (residual > 1e-9) {
        throw SymmetryBroken("parity_invariant: inversion residual " + std::to_string(residual) +
                             " at phi = " + std::to_string(phi));
    }
    const CMatrix p = inversion_operator();
    ParityResult result;
    result.phi = phi;
    result.filled_bands = filled_bands;
    int negatives[2] = {0, 0};
    const double ks[2] = {0.0, kPi};
    for (int s = 0; s < 2; ++s) {
        const Eigensystem eig = eigensolve(bloch_hamiltonian(model, ks[s], phi));
        const double scale = 1.0 + eig.values.cwiseAbs().maxCoeff();
        const double degenerate = 1e-8 * scale;
        if (filled_bands > 0 && filled_bands < 6 &&
            eig.values[filled_bands] - eig.values[filled_bands - 1] < degenerate) {
            throw NumericError("parity_invariant: filling " + std::to_string(filled_bands) +
                               " splits a degenerate level at k = " + std::to_string(ks[s]));
        }
        int n = 0;
        while (n < filled_bands) {
            int m = n + 1;
            while (m < filled_bands && eig.values[m] - eig.values[m - 1] < degenerate) {
                ++m;
            }
            const CMatrix block = eig.vectors.middleCols(n, m - n);
            const CMatrix projected = block.adjoint() * p * block;
            const RVector parities = eigenvalues(0.5 * (projected + projected.adjoint()));
            for (Eigen::Index q = 0; q < parities.size(); ++q) {
                if (std::abs(std::abs(parities[q]) - 1.0) > 1e-6) {
                    throw NonQuantizedParity("parity_invariant: parity " + std::to_string(parities[q]) +
                                             " at k = " + std::to_string(ks[s]));
                }
                if (parities[q] < 0.0) {
                    ++negatives[s];
                }
            }
            n = m;
        }
    }
    result.negative_at_0 = negatives[0];
    result.negative_at_pi = negatives[1];
    result.invariant = std::abs(negatives[0] - negatives[1]);
    return result;
}

double EdgeState::left() const {
    double s = 0.0;
    for (double w : left_weight) {
        s += w;
    }
    return s;
}

double EdgeState::right() const {
    double s = 0.0;
    for (double w : right_weight) {
        s += w;
    }
    return s;
}

namespace {

EdgeState annotate(const Hamiltonian& h, const CVector& v, double energy, int cell_size) {
    const int legs = h.legs();
    const int length = h.length();
    EdgeState state;
    state.energy = energy;
    state.left_weight.assign(static_cast<size_t>(legs), 0.0);
    state.right_weight.assign(static_cast<size_t>(legs), 0.0);
    for (int i = 0; i < h.dim(); ++i) {
        const auto& label = h.labels()[static_cast<size_t>(i)];
        const int slot = h.kind() == LatticeKind::hofstadter ? label.leg - 1 : label.leg;
        const double w = std::norm(v[i]);
        if (label.index <= cell_size) {
            state.left_weight[static_cast<size_t>(slot)] += w;
        }
        if (label.index > length - cell_size) {
            state.right_weight[static_cast<size_t>(slot)] += w;
        }
    }
    return state;
}

}  // namespace

std::vector<EdgeState> edge_state_report(const Hamiltonian& h_open, double lo, double hi, int cell_size) {
    if (cell_size < 1) {
        throw InvalidArgument("edge_state_report: cell_size must be >= 1");
    }
    const Eigensystem eig = eigensolve(h_open.matrix());
    std::vector<EdgeState> out;
    for (Eigen::Index n = 0; n < eig.values.size(); ++n) {
        if (eig.values[n] >= lo && eig.values[n] <= hi) {
            out.push_back(annotate(h_open, eig.vectors.col(n), eig.values[n], cell_size));
        }
    }
    return out;
}

EdgeCrossings count_edge_crossings(const HamiltonianFamily& family, double reference_energy, int phi_points,
                                   int cell_size) {
    if (phi_points < 8) {
        throw InvalidArgument("count_edge_crossings: need at least 8 phi points");
    }
    struct Sample {
        Hamiltonian h;
        Eigensystem eig;
        int below;
    };
    auto sample = [&](int p) {
        const double phi = kTwoPi * p / phi_points;
        Hamiltonian h = family(phi);
        Eigensystem eig = eigensolve(h.matrix());
        int below = 0;
        while (below < eig.values.size() && eig.values[below] < reference_energy) {
            ++below;
        }
        return Sample{std::move(h), std::move(eig), below};
    };

    EdgeCrossings out;
    Sample prev = sample(0);
    for (int p = 1; p <= phi_points; ++p) {
        Sample next = sample(p % phi_points);
        if (next.below != prev.below) {
            const bool up = next.below < prev.below;
            const int lo = std::min(prev.below, next.below);
            const int hi = std::max(prev.below, next.below);
            for (int n = lo; n < hi; ++n) {
                const EdgeState a = annotate(prev.h, prev.eig.vectors.col(n), prev.eig.values[n], cell_size);
                const EdgeState b = annotate(next.h, next.eig.vectors.col(n), next.eig.values[n], cell_size);
                const bool left = a.left() + b.left() >= a.right() + b.right();
                if (left) {
                    (up ? out.left_up : out.left_down) += 1;
                } else {
                    (up ? out.right_up : out.right_down) += 1;
                }
            }
        }
        prev = std::move(next);
    }
    return out;
}

}  // namespace qhall
