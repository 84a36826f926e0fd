#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qhall/error.hpp"
#include "qhall/readout.hpp"

using namespace qhall;

namespace {

ReadoutFidelities random_fidelities(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.85, 0.995);
    ReadoutFidelities f;
    for (int i = 0; i < n; ++i) {
        f.sites.push_back({u(rng), u(rng)});
    }
    return f;
}

std::vector<double> random_occupations(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(static_cast<size_t>(n));
    for (double& v : p) {
        v = u(rng);
    }
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) {
        v /= s;
    }
    return p;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        v[static_cast<size_t>(i)] = a + (b - a) * i / (n - 1);
    }
    return v;
}

}  // namespace

TEST_CASE("corrupt_readout") {
    const std::vector<QubitProbs> truth{{0.3, 0.7}, {0.0, 1.0}, {0.5, 0.5}};
    ReadoutFidelities ideal{{{1, 1}, {1, 1}, {1, 1}}};
    const auto same = corrupt_readout(truth, ideal);
    for (size_t i = 0; i < truth.size(); ++i) {
        CHECK(same[i].p0 == truth[i].p0);
        CHECK(same[i].p1 == truth[i].p1);
    }
    ReadoutFidelities f{{{1, 1}, {1, 0.9}, {0.975, 0.937}}};
    const auto m = corrupt_readout(truth, f);
    CHECK(m[1].p1 == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(m[2].p1 == doctest::Approx(0.481).epsilon(1e-14));
    CHECK(m[2].p0 + m[2].p1 == doctest::Approx(1.0));
}

TEST_CASE("mitigation inverts corruption exactly") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const ReadoutFidelities f = random_fidelities(30, rng);
        const auto truth = occupations_to_qubits(random_occupations(30, rng));
        const MitigatedReadout back = mitigate_readout(corrupt_readout(truth, f), f);
        for (size_t i = 0; i < truth.size(); ++i) {
            CHECK(std::abs(back.probs[i].p1 - truth[i].p1) < 1e-12);
            CHECK(std::abs(back.probs[i].p0 - truth[i].p0) < 1e-12);
        }
        CHECK(back.clamp_max < 1e-12);
    }
}

TEST_CASE("clamping is recorded") {
    ReadoutFidelities f{{{0.9, 0.9}}};
    const std::vector<QubitProbs> measured{{0.95, 0.05}};   // below the 0.1 floor
    const MitigatedReadout m = mitigate_readout(measured, f);
    CHECK(m.probs[0].p1 == 0.0);
    CHECK(m.probs[0].p0 == 1.0);
    CHECK(m.clamp_max == doctest::Approx(0.0625));
    CHECK(m.clamp_total == doctest::Approx(0.125));
}

TEST_CASE("singular confusion") {
    const std::vector<QubitProbs> measured{{0.5, 0.5}};
    for (double eps : {1e-2, 1e-4, 1e-8}) {
        ReadoutFidelities f{{{0.5 + eps, 0.5 + eps}}};
        CHECK_NOTHROW(mitigate_readout(measured, f));
    }
    ReadoutFidelities f{{{0.5, 0.5}}};
    CHECK_THROWS_AS(mitigate_readout(measured, f), SingularConfusion);
    ReadoutFidelities g{{{0.4, 0.5}}};
    CHECK_THROWS_AS(validate(g), SingularConfusion);
    CHECK_NOTHROW(validate(g, false));
    ReadoutFidelities h{{{1.2, 0.9}}};
    CHECK_THROWS_AS(validate(h), InvalidArgument);
}

TEST_CASE("sample_shots basics") {
    const std::vector<double> point{1, 0, 0};
    const auto c = sample_shots(point, 1000, 77);
    REQUIRE(c.size() == 4);
    CHECK(c[0] == 1000);
    CHECK(c[1] + c[2] + c[3] == 0);
    const std::vector<double> p{0.2, 0.1, 0.4};
    CHECK(sample_shots(p, 5000, 9) == sample_shots(p, 5000, 9));
    CHECK(sample_shots(p, 5000, 9) != sample_shots(p, 5000, 10));
    CHECK_THROWS_AS(sample_shots(std::vector<double>{-0.1, 0.5}, 10, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_shots(std::vector<double>{0.7, 0.5}, 10, 1), InvalidArgument);
    CHECK(sample_shots(p, 0, 1) == std::vector<std::int64_t>{0, 0, 0, 0});
}

TEST_CASE("sample_shots matches the multinomial at 1e6 shots") {
    const std::vector<double> p{0.31, 0.02, 0.17, 0.25, 0.1};   // vacuum 0.15
    const std::int64_t n = 1000000;
    const auto c = sample_shots(p, n, 2024);
    std::vector<double> full = p;
    full.push_back(1 - std::accumulate(p.begin(), p.end(), 0.0));
    for (size_t i = 0; i < full.size(); ++i) {
        const double freq = static_cast<double>(c[i]) / static_cast<double>(n);
        CAPTURE(i);
        CHECK(std::abs(freq - full[i]) < 5 * oracle::binomial_sigma(full[i], static_cast<double>(n)));
    }
}

TEST_CASE("relabeling outcomes relabels the counts") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> p = random_occupations(8, rng);
        std::vector<size_t> perm(8);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> q(8);
        for (size_t i = 0; i < 8; ++i) {
            q[perm[i]] = p[i];
        }
        const auto a = sample_shots(p, 3000, 100 + static_cast<std::uint64_t>(trial));
        const auto b = sample_shots(q, 3000, 100 + static_cast<std::uint64_t>(trial));
        for (size_t i = 0; i < 8; ++i) {
            CHECK(b[perm[i]] == a[i]);
        }
        CHECK(a.back() == b.back());
    }
}

TEST_CASE("derived seeds are distinct and stable") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("3000-shot readout chain recovers occupations within 3 sigma") {
    std::mt19937_64 rng(15);
    const ReadoutFidelities f = random_fidelities(15, rng);
    const std::int64_t n = 3000;
    int inside = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto occ = random_occupations(15, rng);
        const auto truth = occupations_to_qubits(occ);
        const auto measured_true = corrupt_readout(truth, f);
        const MitigatedReadout m = mitigate_readout(measure_register(occ, f, n, seed), f);
        for (size_t j = 0; j < 15; ++j) {
            const double det = f.sites[j].f0 + f.sites[j].f1 - 1;
            const double sigma = oracle::binomial_sigma(measured_true[j].p1, static_cast<double>(n)) / det;
            inside += std::abs(m.probs[j].p1 - truth[j].p1) <= 3 * sigma ? 1 : 0;
            ++total;
        }
    }
    const double frac = static_cast<double>(inside) / total;
    MESSAGE("fraction within 3 sigma: " << frac);
    CHECK(frac >= 0.99);   // 0.9973 expected
}

TEST_CASE("measure_register with perfect readout reproduces the multinomial draw") {
    const std::vector<double> occ{0.5, 0.3, 0.2};
    ReadoutFidelities ideal{{{1, 1}, {1, 1}, {1, 1}}};
    const auto m = measure_register(occ, ideal, 10000, 3);
    double total = 0;
    for (const auto& q : m) {
        total += q.p1;
        CHECK(q.p0 + q.p1 == doctest::Approx(1.0));
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(measure_register(occ, ideal, 10000, 3)[0].p1 == m[0].p1);
}

TEST_CASE("crosstalk correction") {
    const RVector z = RVector::LinSpaced(5, -1, 1);
    CHECK((apply_crosstalk_correction(z, CrosstalkMatrix::identity(5)) - z).cwiseAbs().maxCoeff() == 0.0);

    RMatrix two(2, 2);
    two << 1, 0.04, 0.04, 1;
    RVector target(2);
    target << 1, 0;
    const RVector applied = apply_crosstalk_correction(target, CrosstalkMatrix(two));
    const RVector direct = RMatrix(two.inverse()) * target;   // 2x2 closed form through Eigen
    const double det = 1 - 0.04 * 0.04;
    CHECK(applied[0] == doctest::Approx(1 / det).epsilon(1e-14));
    CHECK(applied[1] == doctest::Approx(-0.04 / det).epsilon(1e-14));
    CHECK((applied - direct).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(applied[0] == doctest::Approx(1.0016).epsilon(1e-4));
    CHECK(applied[1] == doctest::Approx(-0.0401).epsilon(1e-3));

    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> off(-0.045, 0.045);
    std::uniform_real_distribution<double> val(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        RMatrix m = RMatrix::Identity(30, 30);
        for (int i = 0; i < 30; ++i) {
            for (int j = 0; j < 30; ++j) {
                if (i != j) {
                    m(i, j) = off(rng) * 0.999;
                }
            }
        }
        RVector t(30);
        for (int i = 0; i < 30; ++i) {
            t[i] = val(rng);
        }
        const RVector a = apply_crosstalk_correction(t, CrosstalkMatrix(m));
        CHECK((m * a - t).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("crosstalk matrix validation") {
    RMatrix big = RMatrix::Identity(2, 2);
    big(0, 1) = 0.05;
    CHECK_THROWS_AS(CrosstalkMatrix{big}, InvalidArgument);
    RMatrix diag = RMatrix::Identity(2, 2);
    diag(1, 1) = 0.9;
    CHECK_THROWS_AS(CrosstalkMatrix{diag}, InvalidArgument);
    CHECK_THROWS_AS(CrosstalkMatrix{RMatrix::Identity(2, 3)}, InvalidArgument);
    CHECK_THROWS_AS(apply_crosstalk_correction(RVector::Zero(3), CrosstalkMatrix::identity(2)), InvalidArgument);
}

TEST_CASE("settling predistortion") {
    const SettlingModel model;   // alpha 0.05, beta 0.9, t_d 155.45 us
    const double dt = 0.01;
    const auto times = linspace(0, 10, 1001);
    const double target = 1.0;

    const std::vector<double> step(times.size(), target);
    const auto raw = settling_response(step, model, dt);
    const auto drive = settling_predistort(target, model, times);
    const auto fixed = settling_response(drive, model, dt);

    double raw_err = 0, fixed_err = 0, round_trip = 0;
    for (size_t k = 0; k < times.size(); ++k) {
        raw_err = std::max(raw_err, std::abs(raw[k] - raw[0]));
        fixed_err = std::max(fixed_err, std::abs(fixed[k] - fixed[0]));
        if (times[k] >= 0.1) {
            round_trip = std::max(round_trip, std::abs(fixed[k] - target) / target);
        }
    }
    MESSAGE("flatness uncorrected " << raw_err << ", corrected " << fixed_err);
    CHECK(raw_err > 0);
    CHECK(fixed_err * 10 <= raw_err);
    CHECK(round_trip < 0.01);

    SettlingModel slow = model;
    slow.t_d = 1e9;
    for (double w : settling_predistort(target, slow, times)) {
        CHECK(w == doctest::Approx(target).epsilon(1e-6));
    }

    SettlingModel fast = model;
    fast.t_d = 0.004;
    CHECK_THROWS_AS(settling_predistort(target, fast, times), UnstableFilter);
    SettlingModel bad = model;
    bad.t_d = 0;
    CHECK_THROWS_AS(validate(bad), InvalidArgument);
}

TEST_CASE("settling fit recovers the decay constant") {
    const SettlingModel truth;
    const auto times = linspace(0, 600, 121);
    std::vector<double> p;
    for (double t : times) {
        p.push_back(truth.curve(t));
    }
    const SettlingModel fit = fit_settling(times, p);
    CHECK(std::abs(fit.t_d - truth.t_d) / truth.t_d < 0.02);
    CHECK(fit.alpha == doctest::Approx(truth.alpha).epsilon(0.02));
    CHECK(fit.beta == doctest::Approx(truth.beta).epsilon(0.02));
}
