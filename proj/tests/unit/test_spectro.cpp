#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qhall/error.hpp"
#include "qhall/evolve.hpp"
#include "qhall/spectro.hpp"

using namespace qhall;

namespace {

ResponseSeries tone(std::vector<std::pair<double, double>> parts, int n, double dt, double gamma = 0) {
    ResponseSeries s;
    s.times = sample_times(n, dt);
    s.gamma = gamma;
    for (double t : s.times) {
        Complex v = 0;
        for (auto [f, w] : parts) {
            v += w * std::polar(1.0, -2 * kPi * f * t);
        }
        s.values.push_back(v * std::exp(-gamma * t));
    }
    return s;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        v[static_cast<size_t>(i)] = a + (b - a) * i / (n - 1);
    }
    return v;
}

Hamiltonian chain(double delta, double phi) {
    ChainSpec s;
    s.delta = delta;
    s.phi = phi;
    return build_aah_chain(s);
}

double fwhm_for(double gamma) {
    // 20 us window keeps the rectangular-window width (~0.044 MHz) well below
    // the smallest decay width tested.
    const double dt = 0.002;
    const int n = 10000;
    const auto grid = linspace(3.0, 7.0, 801);
    const auto p = ft_power(detrend(tone({{5.0, 1.0}}, n, dt, gamma)), grid);
    return oracle::lorentzian_fwhm(grid, p);
}

}  // namespace

TEST_CASE("one-site response") {
    CMatrix m(1, 1);
    m(0, 0) = 3.5;
    const Hamiltonian h(m, {{0, 1}}, LatticeKind::chain);
    const auto times = sample_times(50, 0.01);
    const double gamma = 0.8;
    const ResponseSeries chi = response_function(h, {0, 1}, times, gamma);
    CHECK(std::abs(chi.values[0] - Complex(1, 0)) < 1e-12);
    for (size_t k = 0; k < times.size(); ++k) {
        const Complex expected = (2.0 * std::polar(1.0, -2 * kPi * 3.5 * times[k]) - 1.0) * std::exp(-gamma * times[k]);
        CHECK(std::abs(chi.values[k] - expected) < 1e-13);
    }
}

TEST_CASE("response bounded and consistent with the evolved overlap") {
    const Hamiltonian h = chain(12, 2 * kPi / 3);
    const auto times = sample_times(500, 0.002);
    const ResponseSeries chi = response_function(h, {0, 8}, times);
    const Trajectory tr = evolve_state(h, StateVector::basis(15, 7), times, {0.0, true});
    for (size_t k = 0; k < times.size(); ++k) {
        // |chi + 1| = 2 |<psi0|psi(t)>| <= 2; |chi| itself can exceed 1.
        CHECK(std::abs(chi.values[k] + 1.0) <= 2 + 1e-9);
        const Complex overlap = (*tr.amplitudes)(static_cast<Eigen::Index>(k), 7);
        CHECK(std::abs(chi.values[k] - (2.0 * overlap - 1.0)) < 1e-12);
    }
    CHECK_THROWS_AS(response_function(h, {0, 16}, times), InvalidArgument);
}

TEST_CASE("detrend") {
    ResponseSeries c;
    c.times = sample_times(64, 0.01);
    c.values.assign(64, Complex(0.3, -2.0));
    for (const Complex& v : detrend(c).values) {
        CHECK(std::abs(v) < 1e-15);
    }
    const ResponseSeries pure = tone({{5.0, 1.0}}, 500, 0.002);
    const ResponseSeries d = detrend(pure);
    for (size_t k = 0; k < pure.values.size(); ++k) {
        CHECK(std::abs(d.values[k] - pure.values[k]) < 1e-12);
    }
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    ResponseSeries r;
    r.times = sample_times(333, 0.003);
    for (int i = 0; i < 333; ++i) {
        r.values.emplace_back(g(rng) + 4, g(rng) - 1);
    }
    Complex mean = 0;
    for (const Complex& v : detrend(r).values) {
        mean += v;
    }
    CHECK(std::abs(mean / 333.0) < 1e-14);
}

TEST_CASE("ft_power agrees with a term-by-term DFT") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    ResponseSeries r;
    r.times = sample_times(400, 0.0025);
    for (int i = 0; i < 400; ++i) {
        r.values.emplace_back(g(rng), g(rng));
    }
    const auto grid = linspace(-150, 150, 97);
    const auto p = ft_power(r, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
        CHECK(p[i] == doctest::Approx(oracle::dft_power(r.values, 0.0025, grid[i])).epsilon(1e-10));
    }
}

TEST_CASE("single tone peaks at its frequency") {
    const auto grid = padded_frequencies(500, 0.002, 8, 40);
    const auto p = ft_power(detrend(tone({{5.0, 1.0}}, 500, 0.002)), grid);
    const auto imax = std::max_element(p.begin(), p.end()) - p.begin();
    CHECK(std::abs(grid[static_cast<size_t>(imax)] - 5.0) <= 1.0);
    const auto peaks = extract_peaks(p, grid, 0.1);
    REQUIRE(peaks.size() == 1);
    CHECK(std::abs(peaks[0] - 5.0) < 0.2);
}

TEST_CASE("two tones") {
    const auto grid = padded_frequencies(500, 0.002, 8, 40);
    const auto p = ft_power(detrend(tone({{4.0, 1.0}, {-7.0, 1.0}}, 500, 0.002)), grid);
    const auto peaks = extract_peaks(p, grid, 0.1);
    REQUIRE(peaks.size() == 2);
    CHECK(std::abs(peaks[0] + 7.0) < 0.2);
    CHECK(std::abs(peaks[1] - 4.0) < 0.2);
}

TEST_CASE("eigenstate response has one dominant peak") {
    const Hamiltonian h = chain(12, 0.9);
    const Eigensystem es = eigensolve(h.matrix());
    // A site-localized response built from a single eigen-component.
    ResponseSeries chi;
    chi.times = sample_times(500, 0.002);
    for (double t : chi.times) {
        chi.values.push_back(2.0 * std::polar(1.0, -2 * kPi * es.values[3] * t) - 1.0);
    }
    const auto grid = padded_frequencies(500, 0.002, 8, 40);
    const auto peaks = extract_peaks(ft_power(detrend(chi), grid), grid, 0.1);
    REQUIRE(peaks.size() == 1);
    CHECK(std::abs(peaks[0] - es.values[3]) < 1.0);
}

TEST_CASE("extract_peaks edge cases") {
    const std::vector<double> f{0, 1, 2, 3};
    CHECK(extract_peaks(std::vector<double>{0, 0, 0, 0}, f, 0.1).empty());
    CHECK(extract_peaks(std::vector<double>{}, std::vector<double>{}, 0.1).empty());
    CHECK_THROWS_AS(extract_peaks(std::vector<double>{0, 1, 0, 0}, f, 0.0), InvalidArgument);
    CHECK_THROWS_AS(extract_peaks(std::vector<double>{0, 1, 0, 0}, f, 1.0), InvalidArgument);
}

TEST_CASE("ft_power errors") {
    ResponseSeries r = tone({{1.0, 1.0}}, 100, 0.01);
    const std::vector<double> out_of_band{10.0, 60.0};
    CHECK_THROWS_AS(ft_power(r, out_of_band), InvalidArgument);
    r.times[50] += 1e-4;
    const std::vector<double> ok{0.0};
    CHECK_THROWS_AS(ft_power(r, ok), InvalidArgument);
}

TEST_CASE("discrete Parseval on the canonical grid") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (double dt : {0.002, 0.004}) {
        const int n = 500;
        ResponseSeries r;
        r.times = sample_times(n, dt);
        for (int i = 0; i < n; ++i) {
            r.values.emplace_back(g(rng), g(rng));
        }
        const ResponseSeries d = detrend(r);
        const auto grid = fft_frequencies(n, dt);
        const auto p = ft_power(d, grid);
        const double window = n * dt;
        const double df = 1.0 / window;
        double lhs = 0, rhs = 0;
        for (double v : p) {
            lhs += v * df;
        }
        for (const Complex& v : d.values) {
            rhs += std::norm(v) * dt / window;
        }
        // With T = 1 us the bin width is 1 MHz and both sides coincide; for
        // other windows the left side carries an extra factor 1/T.
        CAPTURE(dt);
        CHECK(lhs * window == doctest::Approx(rhs).epsilon(1e-6));
        if (std::abs(window - 1.0) < 1e-12) {
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
        }
    }
}

TEST_CASE("decoherence broadens peaks as a Lorentzian") {
    double previous = 0;
    for (double gamma : {0.5, 1.0, 2.0}) {
        const double w = fwhm_for(gamma);
        const double expected = 2 * gamma / (2 * kPi);
        CAPTURE(gamma);
        CAPTURE(w);
        CHECK(std::abs(w - expected) <= 0.25 * expected);
        CHECK(w >= previous);
        previous = w;
    }
}

TEST_CASE("band scan: delta 0 has no phi dependence") {
    const HamiltonianFamily fam = [](double phi) { return chain(0, phi); };
    BandScanOptions opt;
    opt.times = sample_times(500, 0.002);
    opt.freq_grid = padded_frequencies(500, 0.002, 2, 25);
    const auto phis = linspace(0, kTwoPi, 7);
    const SpectrumMap map = band_scan(fam, phis, opt);
    for (int r = 1; r < map.intensity.rows(); ++r) {
        CHECK((map.intensity.row(r) - map.intensity.row(0)).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(map.intensity.minCoeff() >= 0);
}

TEST_CASE("band scan: additive over targets, thread independent, normalized") {
    const HamiltonianFamily fam = [](double phi) { return chain(12, phi); };
    BandScanOptions opt;
    opt.times = sample_times(500, 0.002);
    opt.freq_grid = padded_frequencies(500, 0.002, 2, 25);
    const auto phis = linspace(0, kTwoPi, 9);
    opt.targets = {{0, 2}, {0, 9}};
    const SpectrumMap both = band_scan(fam, phis, opt);
    opt.targets = {{0, 2}};
    const SpectrumMap a = band_scan(fam, phis, opt);
    opt.targets = {{0, 9}};
    const SpectrumMap b = band_scan(fam, phis, opt);
    CHECK((both.intensity - a.intensity - b.intensity).cwiseAbs().maxCoeff() < 1e-15);

    opt.targets.clear();
    const SpectrumMap serial = band_scan(fam, phis, opt);
    opt.threads = 4;
    const SpectrumMap parallel = band_scan(fam, phis, opt);
    CHECK(serial.intensity == parallel.intensity);

    opt.normalize = true;
    const SpectrumMap norm = band_scan(fam, phis, opt);
    CHECK(norm.normalized);
    for (int r = 0; r < norm.intensity.rows(); ++r) {
        CHECK(norm.intensity.row(r).maxCoeff() == doctest::Approx(1.0));
    }
}

TEST_CASE("peaks track exact eigenvalues over a 60-point phi grid") {
    const HamiltonianFamily fam = [](double phi) { return chain(12, phi); };
    BandScanOptions opt;
    opt.times = sample_times(500, 0.002);
    opt.freq_grid = padded_frequencies(500, 0.002, 8, 40);
    std::vector<double> phis;
    for (int m = 0; m < 60; ++m) {
        phis.push_back(kTwoPi * m / 60);
    }
    opt.threads = 4;
    const SpectrumMap map = band_scan(fam, phis, opt);
    double worst = 0;
    for (int m = 0; m < 60; ++m) {
        const RVector levels = eigenvalues(chain(12, phis[static_cast<size_t>(m)]).matrix());
        std::vector<double> power(static_cast<size_t>(map.intensity.cols()));
        for (int c = 0; c < map.intensity.cols(); ++c) {
            power[static_cast<size_t>(c)] = map.intensity(m, c);
        }
        const auto peaks = extract_peaks(power, map.freq_grid, 0.1);
        CHECK(!peaks.empty());
        const auto dev = nearest_level_deviation(peaks, to_std(levels));
        double mean = 0;
        for (double d : dev) {
            worst = std::max(worst, d);
            mean += d / static_cast<double>(dev.size());
        }
        CHECK(mean <= 0.5);
    }
    MESSAGE("worst peak deviation " << worst << " MHz");
    CHECK(worst < 0.5);
}
