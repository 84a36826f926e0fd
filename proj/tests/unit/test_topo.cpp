#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qhall/error.hpp"
#include "qhall/topo.hpp"

using namespace qhall;

namespace {

BlochModel chain3() { return BlochModel::chain(8, 0.8, 12); }
BlochModel same_delta() { return BlochModel::ladder(8, 0.8, 7, 1.6, 12, 12); }
BlochModel opposite_delta() { return BlochModel::ladder(8, 0.8, 7, 1.6, 12, -12); }

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("decoupled ladder6 is the diagonal of six cosines") {
    const BlochModel m = BlochModel::ladder(0, 0, 0, 0, 12, -5);
    const double phi = 0.77, k = 1.9;
    const CMatrix h = bloch_hamiltonian(m, k, phi);
    for (int l = 1; l <= 3; ++l) {
        CHECK(h(l - 1, l - 1).real() == doctest::Approx(12 * std::cos(2 * kPi * l / 3 + phi)));
        CHECK(h(l + 2, l + 2).real() == doctest::Approx(-5 * std::cos(2 * kPi * l / 3 + phi)));
    }
    CHECK(max_abs(h - CMatrix(h.diagonal().asDiagonal())) == 0.0);
}

TEST_CASE("Bloch matrices are Hermitian and periodic") {
    std::mt19937_64 rng(100);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (const BlochModel& m : {chain3(), same_delta(), opposite_delta()}) {
        for (int i = 0; i < 100; ++i) {
            const double k = u(rng), phi = u(rng);
            const CMatrix h = bloch_hamiltonian(m, k, phi);
            CHECK(max_abs(h - h.adjoint()) < 1e-12);
            CHECK(max_abs(h - bloch_hamiltonian(m, k + kTwoPi, phi)) < 1e-12);
            CHECK(max_abs(h - bloch_hamiltonian(m, k, phi + kTwoPi)) < 1e-12);
        }
    }
}

TEST_CASE("chain3 matches the 3x3 block of a ladder without rungs") {
    const BlochModel l = BlochModel::ladder(8, 0.8, 0, 0, 12, 12);
    for (double k : {0.0, 0.6, 2.5}) {
        const CMatrix big = bloch_hamiltonian(l, k, 1.2);
        CHECK(max_abs(big.topLeftCorner(3, 3) - bloch_hamiltonian(chain3(), k, 1.2)) < 1e-14);
    }
}

TEST_CASE("inversion symmetry of the same-delta ladder") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    for (int i = 0; i < 50; ++i) {
        CHECK(inversion_residual(same_delta(), 2 * kPi / 3, u(rng)) < 1e-12);
        CHECK(inversion_residual(same_delta(), 5 * kPi / 3, u(rng)) < 1e-12);
    }
    const CMatrix p = inversion_operator();
    CHECK(max_abs(p * p - CMatrix::Identity(6, 6)) == 0.0);
    CHECK(inversion_residual(opposite_delta(), 2 * kPi / 3, 0.7) > 1e-3);
    CHECK_THROWS_AS(inversion_residual(chain3(), 0, 0), InvalidArgument);
}

TEST_CASE("chain3 Chern numbers") {
    const BlochModel m = chain3();
    const int c1 = chern_number(m, 1, 1, {60, 60});
    CHECK(std::abs(c1) == 1);
    CHECK(chern_number(m, 1, 3, {30, 30}) == 0);
    const ChernReport r = chern_report(m);
    REQUIRE(r.gap_sums.size() == 2);
    REQUIRE(r.gap_sums[0].has_value());
    CHECK(*r.gap_sums[0] == 1);
    CHECK(std::abs(*r.gap_sums[0]) == 1);
    CHECK(!r.sign_convention.empty());
}

TEST_CASE("link-determinant Chern numbers match a U(1) plaquette oracle") {
    auto compare = [](const BlochModel& m) {
        const auto fam = [&m](double k, double phi) { return bloch_hamiltonian(m, k, phi); };
        const ChernReport r = chern_report(m, {40, 40});
        for (int b = 0; b < m.bands(); ++b) {
            if (!r.per_band[static_cast<size_t>(b)]) {
                continue;
            }
            CAPTURE(b);
            CHECK(*r.per_band[static_cast<size_t>(b)] == oracle::abelian_chern(fam, b, 40));
        }
    };
    compare(chain3());
    compare(same_delta());
    compare(opposite_delta());
}

TEST_CASE("grid stability, sum rule and gauge invariance") {
    for (const BlochModel& m : {chain3(), same_delta(), opposite_delta()}) {
        const ChernReport base = chern_report(m, {30, 30}, 4);
        int total = 0;
        for (const auto& g : base.groups) {
            total += g.chern;
        }
        CHECK(total == 0);
        for (int n : {60, 120}) {
            const ChernReport r = chern_report(m, {n, n}, 4);
            CHECK(r.per_band == base.per_band);
            CHECK(r.gap_sums == base.gap_sums);
        }
        int acc = 0;
        for (size_t g = 0; g < base.gap_sums.size(); ++g) {
            if (base.per_band[g]) {
                acc += *base.per_band[g];
                if (base.gap_sums[g]) {
                    CHECK(*base.gap_sums[g] == acc);
                }
            }
        }
        for (const auto& g : base.groups) {
            ChernOptions opt;
            for (std::uint64_t seed : {1u, 2u, 3u}) {
                opt.random_gauge_seed = seed;
                CHECK(chern_number(m, g.first, g.last, {30, 30}, opt) == g.chern);
            }
        }
    }
}

TEST_CASE("reversing the flux negates every Chern number") {
    for (BlochModel m : {chain3(), same_delta(), opposite_delta()}) {
        const ChernReport a = chern_report(m, {40, 40});
        m.b = -m.b;
        const ChernReport b = chern_report(m, {40, 40});
        REQUIRE(a.groups.size() == b.groups.size());
        for (size_t i = 0; i < a.groups.size(); ++i) {
            CHECK(a.groups[i].first == b.groups[i].first);
            CHECK(a.groups[i].chern == -b.groups[i].chern);
        }
    }
}

TEST_CASE("bilayer phases") {
    const ChernReport same = chern_report(same_delta());
    CHECK(hall_conductivity(same, 3) == 0);
    const ChernReport opp = chern_report(opposite_delta());
    int largest = 0;
    for (const auto& s : opp.gap_sums) {
        if (s) {
            largest = std::max(largest, std::abs(*s));
        }
    }
    MESSAGE("opposite-delta largest |sigma| = " << largest);
    CHECK(largest >= 2);
}

TEST_CASE("hall_conductivity bounds") {
    const ChernReport r = chern_report(chain3());
    CHECK(hall_conductivity(r, 0) == 0);
    CHECK(hall_conductivity(r, 3) == 0);
    CHECK_THROWS_AS(hall_conductivity(r, -1), InvalidArgument);
    CHECK_THROWS_AS(hall_conductivity(r, 4), InvalidArgument);
}

TEST_CASE("a closed gap is reported, not integrated") {
    const BlochModel flat = BlochModel::chain(8, 0.8, 0);
    CHECK_THROWS_AS(chern_number(flat, 1, 1, {30, 30}), GapClosure);
    const ChernReport r = chern_report(flat, {30, 30});
    CHECK(r.gaps[0].closed);
    CHECK(!r.gap_sums[0].has_value());
    CHECK_THROWS_AS(chern_number(chain3(), 0, 1, {30, 30}), InvalidArgument);
    BlochModel bad = chain3();
    bad.b = 0.25;
    CHECK_THROWS_AS(chern_report(bad), InvalidArgument);
}

TEST_CASE("parity invariant of the same-delta ladder") {
    const ParityResult half = parity_invariant(same_delta(), 2 * kPi / 3, 3);
    CHECK(half.invariant == 1);
    const ParityResult quarter = parity_invariant(same_delta(), 2 * kPi / 3, 1);
    CHECK(quarter.invariant == 1);
    CHECK(parity_invariant(same_delta(), 5 * kPi / 3, 3).invariant == 1);
    CHECK_THROWS_AS(parity_invariant(opposite_delta(), 2 * kPi / 3, 3), SymmetryBroken);
    CHECK_THROWS_AS(parity_invariant(chain3(), 2 * kPi / 3, 1), InvalidArgument);
}

TEST_CASE("parity invariant of the decoupled ladder vanishes") {
    // H(k) does not depend on k, so N1 == N2 by construction. Only fillings
    // that sit in a real gap of the flat levels are well posed.
    const BlochModel zero = BlochModel::ladder(0, 0, 0, 0, 12, 12);
    CHECK(parity_invariant(zero, 2 * kPi / 3, 4).invariant == 0);
    CHECK(parity_invariant(zero, 5 * kPi / 3, 2).invariant == 0);
    const ParityResult p = parity_invariant(zero, 2 * kPi / 3, 4);
    CHECK(p.negative_at_0 == p.negative_at_pi);
}

TEST_CASE("edge states") {
    ChainSpec flat;
    flat.delta = 0;
    for (const EdgeState& s : edge_state_report(build_aah_chain(flat), -40, 40)) {
        CHECK(std::max(s.left(), s.right()) < 0.5);
    }

    ChainSpec s;
    s.phi = 2 * kPi / 3;
    const auto states = edge_state_report(build_aah_chain(s), -40, 40);
    REQUIRE(states.size() == 15);
    // phi = 2 pi / 3 is mirror symmetric, so the two edge modes hybridize and
    // each one splits its weight between both ends.
    double best = 0;
    for (const EdgeState& e : states) {
        best = std::max(best, e.left() + e.right());
    }
    CHECK(best > 0.5);

    CHECK(edge_state_report(build_aah_chain(s), 100, 200).empty());
}

TEST_CASE("ladder mid-gap states live on the ends of both legs") {
    LadderSpec s;
    s.phi = 2 * kPi / 3;
    double lo = -1e9, hi = 1e9;
    for (int i = 0; i < 200; ++i) {
        const RVector v = eigenvalues(bloch_hamiltonian(same_delta(), kTwoPi * i / 200, s.phi));
        lo = std::max(lo, v[2]);
        hi = std::min(hi, v[3]);
    }
    REQUIRE(hi > lo);
    const auto states = edge_state_report(build_ladder(s), lo, hi);
    REQUIRE(!states.empty());
    bool both = false;
    for (const EdgeState& st : states) {
        REQUIRE(st.left_weight.size() == 2);
        const auto& l = st.left_weight;
        const auto& r = st.right_weight;
        if (l[0] > 0.1 && l[1] > 0.1 && r[0] > 0.1 && r[1] > 0.1 && st.left() + st.right() > 0.5) {
            both = true;
        }
    }
    CHECK(both);
}

TEST_CASE("bulk-edge correspondence for chain3") {
    const BlochModel m = chain3();
    const ChernReport r = chern_report(m);
    const BandEdges e = band_edges(m);
    ChainSpec spec;
    const HamiltonianFamily fam = [spec](double phi) mutable {
        spec.phi = phi;
        return build_aah_chain(spec);
    };
    for (int g = 1; g <= 2; ++g) {
        const double ref = 0.5 * (e.max[static_cast<size_t>(g - 1)] + e.min[static_cast<size_t>(g)]);
        const EdgeCrossings c = count_edge_crossings(fam, ref, 400);
        REQUIRE(r.gap_sums[static_cast<size_t>(g - 1)].has_value());
        const int sigma = *r.gap_sums[static_cast<size_t>(g - 1)];
        CAPTURE(g);
        CHECK(std::abs(c.left_net()) == std::abs(sigma));
        CHECK(c.left_net() == sigma);
        CHECK(c.right_net() == -sigma);
    }
}
