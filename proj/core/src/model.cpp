#include "qhall/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qhall/error.hpp"

namespace qhall {

namespace {

void require_finite(double value, const char* field) {
    if (!std::isfinite(value)) {
        throw InvalidArgument(std::string(field) + " must be finite");
    }
}

// Accumulates hoppings so that H(j, i) is always conj(H(i, j)).
class HermitianBuilder {
public:
    explicit HermitianBuilder(int dim) : h_(CMatrix::Zero(dim, dim)) {}

    void hop(int i, int j, Complex amplitude) {
        if (i == j) {
            h_(i, i) += 2.0 * amplitude.real();
            return;
        }
        h_(i, j) += amplitude;
        h_(j, i) += std::conj(amplitude);
    }

    void set_bond(int i, int j, double value) {
        h_(i, j) = value;
        h_(j, i) = value;
    }

    void set_onsite(int i, double value) { h_(i, i) = value; }
    void add_onsite(int i, double value) { h_(i, i) += value; }

    CMatrix take() { return std::move(h_); }

private:
    CMatrix h_;
};

int ladder_index(int n_rungs, SiteLabel s) { return s.leg * n_rungs + (s.index - 1); }

void check_ladder_label(const LadderSpec& spec, SiteLabel s, const char* what) {
    if (s.leg < 0 || s.leg > 1 || s.index < 1 || s.index > spec.n_rungs) {
        throw InvalidArgument(std::string("ladder override ") + what + " references site (leg " +
                              std::to_string(s.leg) + ", rung " + std::to_string(s.index) +
                              ") outside the lattice");
    }
}

}  // namespace

Hamiltonian::Hamiltonian(CMatrix entries, std::vector<SiteLabel> labels, LatticeKind kind)
    : entries_(std::move(entries)), labels_(std::move(labels)), kind_(kind) {
    if (entries_.rows() != entries_.cols()) {
        throw InvalidArgument("Hamiltonian: matrix is not square");
    }
    if (static_cast<Eigen::Index>(labels_.size()) != entries_.rows()) {
        throw InvalidArgument("Hamiltonian: label count differs from dimension");
    }
    if (entries_.size() > 0 && hermiticity_defect(entries_) != 0.0) {
        throw InvalidArgument("Hamiltonian: matrix is not exactly Hermitian");
    }
}

int Hamiltonian::legs() const {
    int legs = 0;
    for (const auto& l : labels_) {
        legs = std::max(legs, kind_ == LatticeKind::hofstadter ? l.leg : l.leg + 1);
    }
    return legs;
}

int Hamiltonian::length() const {
    int n = 0;
    for (const auto& l : labels_) {
        n = std::max(n, l.index);
    }
    return n;
}

std::optional<int> Hamiltonian::find(SiteLabel label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) {
        return std::nullopt;
    }
    return static_cast<int>(it - labels_.begin());
}

int Hamiltonian::index_of(SiteLabel label) const {
    if (auto i = find(label)) {
        return *i;
    }
    throw InvalidArgument("site (leg " + std::to_string(label.leg) + ", index " + std::to_string(label.index) +
                          ") is not part of the lattice");
}

double onsite_potential(double delta, double b, int j, double phi) {
    return delta * std::cos(kTwoPi * b * j + phi);
}

void validate(const ChainSpec& spec) {
    if (spec.n_sites < 1) {
        throw InvalidArgument("n_sites must be >= 1");
    }
    require_finite(spec.j_par, "j_par");
    require_finite(spec.j_par2, "j_par2");
    require_finite(spec.delta, "delta");
    require_finite(spec.b, "b");
    require_finite(spec.phi, "phi");
}

void validate(const LadderSpec& spec) {
    if (spec.n_rungs < 1) {
        throw InvalidArgument("n_rungs must be >= 1");
    }
    require_finite(spec.j_par, "j_par");
    require_finite(spec.j_par2, "j_par2");
    require_finite(spec.j_perp, "j_perp");
    require_finite(spec.j_cross, "j_cross");
    require_finite(spec.delta_up, "delta_up");
    require_finite(spec.delta_down, "delta_down");
    require_finite(spec.b, "b");
    require_finite(spec.phi, "phi");
    for (const auto& bond : spec.overrides.bonds) {
        check_ladder_label(spec, bond.a, "bond");
        check_ladder_label(spec, bond.b, "bond");
        require_finite(bond.value, "bond override value");
        if (bond.a == bond.b) {
            throw InvalidArgument("ladder bond override joins a site to itself");
        }
    }
    for (const auto& pot : spec.overrides.potentials) {
        check_ladder_label(spec, pot.site, "potential");
        require_finite(pot.value, "potential override value");
    }
}

void validate(const HofstadterSpec& spec) {
    if (spec.nx < 1 || spec.ny < 1) {
        throw InvalidArgument("nx and ny must be >= 1");
    }
    require_finite(spec.t_x, "t_x");
    require_finite(spec.t_y, "t_y");
    require_finite(spec.b, "b");
}

Hamiltonian build_aah_chain(const ChainSpec& spec) {
    validate(spec);
    const int n = spec.n_sites;
    const double phi = reduce_phase(spec.phi);
    HermitianBuilder h(n);
    std::vector<SiteLabel> labels;
    labels.reserve(n);
    for (int j = 1; j <= n; ++j) {
        labels.push_back({0, j});
        h.set_onsite(j - 1, onsite_potential(spec.delta, spec.b, j, phi));
        if (j + 1 <= n) {
            h.hop(j - 1, j, spec.j_par);
        }
        if (j + 2 <= n) {
            h.hop(j - 1, j + 1, spec.j_par2);
        }
    }
    return {h.take(), std::move(labels), LatticeKind::chain};
}

Hamiltonian build_ladder(const LadderSpec& spec) {
    validate(spec);
    const int n = spec.n_rungs;
    const double phi = reduce_phase(spec.phi);
    HermitianBuilder h(2 * n);
    std::vector<SiteLabel> labels;
    labels.reserve(2 * n);
    const double deltas[2] = {spec.delta_up, spec.delta_down};
    for (int leg = 0; leg < 2; ++leg) {
        for (int j = 1; j <= n; ++j) {
            labels.push_back({leg, j});
        }
    }
    auto at = [n](int leg, int j) { return ladder_index(n, {leg, j}); };
    for (int j = 1; j <= n; ++j) {
        for (int leg = 0; leg < 2; ++leg) {
            h.set_onsite(at(leg, j), onsite_potential(deltas[leg], spec.b, j, phi));
            if (j + 1 <= n) {
                h.hop(at(leg, j), at(leg, j + 1), spec.j_par);
            }
            if (j + 2 <= n) {
                h.hop(at(leg, j), at(leg, j + 2), spec.j_par2);
            }
        }
        h.hop(at(0, j), at(1, j), spec.j_perp);
        if (j + 1 <= n) {
            h.hop(at(0, j), at(1, j + 1), spec.j_cross);
            h.hop(at(1, j), at(0, j + 1), spec.j_cross);
        }
    }
    for (const auto& bond : spec.overrides.bonds) {
        h.set_bond(ladder_index(n, bond.a), ladder_index(n, bond.b), bond.value);
    }
    for (const auto& pot : spec.overrides.potentials) {
        h.set_onsite(ladder_index(n, pot.site), pot.value);
    }
    return {h.take(), std::move(labels), LatticeKind::ladder};
}

Hamiltonian build_hofstadter(const HofstadterSpec& spec) {
    validate(spec);
    const int nx = spec.nx;
    const int ny = spec.ny;
    HermitianBuilder h(nx * ny);
    std::vector<SiteLabel> labels;
    labels.reserve(nx * ny);
    auto at = [nx](int x, int y) { return (y - 1) * nx + (x - 1); };
    for (int y = 1; y <= ny; ++y) {
        for (int x = 1; x <= nx; ++x) {
            labels.push_back({y, x});
        }
    }
    for (int y = 1; y <= ny; ++y) {
        for (int x = 1; x <= nx; ++x) {
            if (x + 1 <= nx) {
                h.hop(at(x, y), at(x + 1, y), spec.t_x);
            }
            const Complex peierls = spec.t_y * std::polar(1.0, kTwoPi * spec.b * x);
            if (y + 1 <= ny) {
                h.hop(at(x, y), at(x, y + 1), peierls);
            } else if (spec.boundary_y == Boundary::periodic) {
                // Wrap link y = ny -> 1; for ny == 1 this folds into the diagonal.
                h.hop(at(x, y), at(x, 1), peierls);
            }
        }
    }
    return {h.take(), std::move(labels), LatticeKind::hofstadter};
}

double check_dimensional_reduction(const HofstadterSpec& spec) {
    validate(spec);
    if (spec.boundary_y != Boundary::periodic) {
        throw InvalidArgument("dimensional reduction requires a periodic y boundary");
    }
    const RVector full = eigenvalues(build_hofstadter(spec).matrix());

    std::vector<double> reduced;
    reduced.reserve(static_cast<size_t>(spec.nx) * spec.ny);
    for (int m = 0; m < spec.ny; ++m) {
        ChainSpec chain;
        chain.n_sites = spec.nx;
        chain.j_par = spec.t_x;
        chain.j_par2 = 0.0;
        chain.delta = 2.0 * spec.t_y;
        chain.b = spec.b;
        chain.phi = kTwoPi * m / spec.ny;
        const RVector e = eigenvalues(build_aah_chain(chain).matrix());
        reduced.insert(reduced.end(), e.data(), e.data() + e.size());
    }
    std::sort(reduced.begin(), reduced.end());

    double mismatch = 0.0;
    for (Eigen::Index i = 0; i < full.size(); ++i) {
        mismatch = std::max(mismatch, std::abs(full[i] - reduced[static_cast<size_t>(i)]));
    }
    return mismatch;
}

}  // namespace qhall
