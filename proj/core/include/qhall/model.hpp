#pragma once

#include <optional>
#include <vector>

#include "qhall/linalg.hpp"

namespace qhall {

// All couplings and potentials are linear frequencies in MHz.

enum class LatticeKind { chain, ladder, hofstadter };

// Position of a basis state. `leg` is 0 for a chain, 0 (up) / 1 (down) for a
// ladder and the 1-based y coordinate for a Hofstadter lattice; `index` is the
// 1-based site, rung or x coordinate.
struct SiteLabel {
    int leg = 0;
    int index = 1;

    friend bool operator==(const SiteLabel&, const SiteLabel&) = default;
};

struct ChainSpec {
    int n_sites = 15;
    double j_par = 8.0;
    double j_par2 = 0.8;
    double delta = 12.0;
    double b = 1.0 / 3.0;
    double phi = 0.0;
};

struct BondOverride {
    SiteLabel a;
    SiteLabel b;
    double value = 0.0;
};

struct PotentialOverride {
    SiteLabel site;
    double value = 0.0;
};

// Measured per-bond couplings or per-site potentials replacing the uniform values.
struct LadderOverrides {
    std::vector<BondOverride> bonds;
    std::vector<PotentialOverride> potentials;

    bool empty() const { return bonds.empty() && potentials.empty(); }
};

struct LadderSpec {
    int n_rungs = 15;
    double j_par = 8.0;
    double j_par2 = 0.8;
    double j_perp = 7.0;
    double j_cross = 1.6;
    double delta_up = 12.0;
    double delta_down = 12.0;
    double b = 1.0 / 3.0;
    double phi = 0.0;
    LadderOverrides overrides;
};

enum class Boundary { open, periodic };

struct HofstadterSpec {
    int nx = 15;
    int ny = 12;
    double t_x = 8.0;
    double t_y = 6.0;
    double b = 1.0 / 3.0;
    Boundary boundary_y = Boundary::periodic;
};

// Dense single-excitation Hamiltonian. Immutable once built; entries satisfy
// H == H^dagger exactly.
class Hamiltonian {
public:
    Hamiltonian(CMatrix entries, std::vector<SiteLabel> labels, LatticeKind kind);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const CMatrix& matrix() const { return entries_; }
    const std::vector<SiteLabel>& labels() const { return labels_; }
    LatticeKind kind() const { return kind_; }

    // Number of legs (1 for a chain, 2 for a ladder, ny for Hofstadter).
    int legs() const;
    // Sites per leg.
    int length() const;

    // 0-based basis index of a label; throws InvalidArgument if absent.
    int index_of(SiteLabel label) const;
    std::optional<int> find(SiteLabel label) const;

private:
    CMatrix entries_;
    std::vector<SiteLabel> labels_;
    LatticeKind kind_;
};

// delta * cos(2*pi*b*j + phi) with 1-based j.
double onsite_potential(double delta, double b, int j, double phi);

Hamiltonian build_aah_chain(const ChainSpec& spec);
Hamiltonian build_ladder(const LadderSpec& spec);
Hamiltonian build_hofstadter(const HofstadterSpec& spec);

// Largest |E_2D - E_1D| between the sorted Hofstadter spectrum and the sorted
// union of the AAH chains (J = t_x, Delta = 2 t_y, phi = k_y) over
// k_y = 2*pi*m/ny. Requires a periodic y boundary.
double check_dimensional_reduction(const HofstadterSpec& spec);

// Spec validation; throw InvalidArgument naming the offending field.
void validate(const ChainSpec& spec);
void validate(const LadderSpec& spec);
void validate(const HofstadterSpec& spec);

}  // namespace qhall
