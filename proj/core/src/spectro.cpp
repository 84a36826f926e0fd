#include "qhall/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qhall/error.hpp"
#include "qhall/parallel.hpp"

namespace qhall {

namespace {

double uniform_step(std::span<const double> times) {
    if (times.size() < 2) {
        throw InvalidArgument("response series needs at least two samples");
    }
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) {
        throw InvalidArgument("time grid must be strictly ascending");
    }
    for (size_t k = 1; k < times.size(); ++k) {
        const double step = times[k] - times[k - 1];
        if (std::abs(step - dt) > 1e-9 * dt + 1e-12) {
            throw InvalidArgument("time grid is not uniform at sample " + std::to_string(k));
        }
    }
    return dt;
}

}  // namespace

ResponseSeries response_function(const Eigensystem& eig, int target_index, std::span<const double> times,
                                 double gamma) {
    const auto dim = eig.values.size();
    if (target_index < 0 || target_index >= dim) {
        throw InvalidArgument("response_function: target index " + std::to_string(target_index) + " out of range");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("response_function: gamma must be finite and >= 0");
    }
    if (times.size() >= 2) {
        uniform_step(times);
    }
    ResponseSeries out;
    out.times.assign(times.begin(), times.end());
    out.gamma = gamma;
    out.values.resize(times.size());
    // |c_n|^2 = |<v_n|e_target>|^2 is the squared row entry of the eigenvector matrix.
    RVector weight(dim);
    for (Eigen::Index n = 0; n < dim; ++n) {
        weight[n] = std::norm(eig.vectors(target_index, n));
    }
    for (size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        Complex overlap = 0.0;
        for (Eigen::Index n = 0; n < dim; ++n) {
            overlap += weight[n] * std::polar(1.0, -kTwoPi * eig.values[n] * t);
        }
        out.values[k] = (2.0 * overlap - 1.0) * std::exp(-gamma * t);
    }
    return out;
}

ResponseSeries response_function(const Hamiltonian& h, SiteLabel target, std::span<const double> times,
                                 double gamma) {
    const int index = h.index_of(target);
    ResponseSeries out = response_function(eigensolve(h.matrix()), index, times, gamma);
    out.target = target;
    return out;
}

ResponseSeries detrend(const ResponseSeries& chi) {
    ResponseSeries out = chi;
    if (chi.values.empty()) {
        return out;
    }
    Complex mean = 0.0;
    for (const auto& v : chi.values) {
        mean += v;
    }
    mean /= static_cast<double>(chi.values.size());
    for (auto& v : out.values) {
        v -= mean;
    }
    return out;
}

std::vector<double> sample_times(int n, double dt) {
    if (n < 1 || !(dt > 0.0)) {
        throw InvalidArgument("sample_times: need n >= 1 and dt > 0");
    }
    std::vector<double> t(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        t[static_cast<size_t>(k)] = k * dt;
    }
    return t;
}

std::vector<double> fft_frequencies(int n, double dt) {
    if (n < 1 || !(dt > 0.0)) {
        throw InvalidArgument("fft_frequencies: need n >= 1 and dt > 0");
    }
    const double window = n * dt;
    std::vector<double> f;
    f.reserve(static_cast<size_t>(n));
    for (int m = -n / 2; m < n - n / 2; ++m) {
        f.push_back(m / window);
    }
    return f;
}

std::vector<double> padded_frequencies(int n, double dt, int pad, double f_max) {
    if (n < 1 || !(dt > 0.0) || pad < 1 || !(f_max > 0.0)) {
        throw InvalidArgument("padded_frequencies: need n >= 1, dt > 0, pad >= 1, f_max > 0");
    }
    const double df = 1.0 / (pad * n * dt);
    const double nyquist = 0.5 / dt;
    const double limit = std::min(f_max, nyquist);
    const auto m_max = static_cast<long>(std::floor(limit / df + 1e-9));
    std::vector<double> f;
    f.reserve(static_cast<size_t>(2 * m_max + 1));
    for (long m = -m_max; m <= m_max; ++m) {
        f.push_back(static_cast<double>(m) * df);
    }
    return f;
}

std::vector<double> ft_power(const ResponseSeries& chi, std::span<const double> freq_grid) {
    const double dt = uniform_step(chi.times);
    if (chi.values.size() != chi.times.size()) {
        throw InvalidArgument("ft_power: value and time counts differ");
    }
    const double nyquist = 0.5 / dt;
    const auto n = chi.values.size();
    const double window = static_cast<double>(n) * dt;
    const double t0 = chi.times.front();
    std::vector<double> power(freq_grid.size());
    for (size_t i = 0; i < freq_grid.size(); ++i) {
        const double f = freq_grid[i];
        if (std::abs(f) > nyquist * (1.0 + 1e-12)) {
            throw InvalidArgument("ft_power: frequency " + std::to_string(f) + " MHz outside the Nyquist band");
        }
        // Horner evaluation of sum_k x_k z^k with z = exp(i 2 pi f dt).
        const Complex z = std::polar(1.0, kTwoPi * f * dt);
        Complex acc = 0.0;
        for (size_t k = n; k-- > 0;) {
            acc = acc * z + chi.values[k];
        }
        const Complex amplitude = acc * std::polar(1.0, kTwoPi * f * t0) * (dt / window);
        power[i] = std::norm(amplitude);
    }
    return power;
}

SpectrumMap band_scan(const HamiltonianFamily& family, std::span<const double> phi_grid,
                      const BandScanOptions& options) {
    if (phi_grid.empty()) {
        throw InvalidArgument("band_scan: empty phi grid");
    }
    if (options.freq_grid.empty()) {
        throw InvalidArgument("band_scan: empty frequency grid");
    }
    if (options.times.size() < 2) {
        throw InvalidArgument("band_scan: time grid needs at least two samples");
    }
    SpectrumMap map;
    map.phi_grid.assign(phi_grid.begin(), phi_grid.end());
    map.freq_grid = options.freq_grid;
    map.intensity = RMatrix::Zero(static_cast<Eigen::Index>(phi_grid.size()),
                                  static_cast<Eigen::Index>(options.freq_grid.size()));
    map.normalized = options.normalize;

    parallel_for(static_cast<int>(phi_grid.size()), options.threads, [&](int p) {
        const Hamiltonian h = family(phi_grid[static_cast<size_t>(p)]);
        const Eigensystem eig = eigensolve(h.matrix());
        std::vector<int> targets;
        if (options.targets.empty()) {
            for (int i = 0; i < h.dim(); ++i) {
                targets.push_back(i);
            }
        } else {
            for (const auto& label : options.targets) {
                targets.push_back(h.index_of(label));
            }
        }
        RVector column = RVector::Zero(static_cast<Eigen::Index>(options.freq_grid.size()));
        for (int target : targets) {
            const ResponseSeries chi = detrend(response_function(eig, target, options.times, options.gamma));
            const auto power = ft_power(chi, options.freq_grid);
            for (size_t f = 0; f < power.size(); ++f) {
                column[static_cast<Eigen::Index>(f)] += power[f];
            }
        }
        if (options.normalize) {
            const double peak = column.maxCoeff();
            if (peak > 0.0) {
                column /= peak;
            }
        }
        map.intensity.row(p) = column.transpose();
    });
    return map;
}

std::vector<double> extract_peaks(std::span<const double> power, std::span<const double> freq_grid,
                                  double rel_threshold) {
    if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
        throw InvalidArgument("extract_peaks: rel_threshold must lie in (0, 1)");
    }
    if (power.size() != freq_grid.size()) {
        throw InvalidArgument("extract_peaks: power and frequency lengths differ");
    }
    std::vector<double> peaks;
    if (power.size() < 3) {
        return peaks;
    }
    const double top = *std::max_element(power.begin(), power.end());
    if (!(top > 0.0)) {
        return peaks;
    }
    const double floor = rel_threshold * top;
    for (size_t i = 1; i + 1 < power.size(); ++i) {
        const double a = power[i - 1];
        const double b = power[i];
        const double c = power[i + 1];
        if (!(b > a && b >= c && b > floor)) {
            continue;
        }
        const double curvature = a - 2.0 * b + c;
        double offset = 0.0;
        if (curvature < 0.0) {
            offset = std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
        }
        const double step = offset >= 0.0 ? freq_grid[i + 1] - freq_grid[i] : freq_grid[i] - freq_grid[i - 1];
        peaks.push_back(freq_grid[i] + offset * step);
    }
    std::sort(peaks.begin(), peaks.end());
    return peaks;
}

std::vector<double> nearest_level_deviation(std::span<const double> peaks, std::span<const double> levels) {
    std::vector<double> out;
    out.reserve(peaks.size());
    for (double p : peaks) {
        double best = std::numeric_limits<double>::infinity();
        for (double e : levels) {
            best = std::min(best, std::abs(p - e));
        }
        out.push_back(best);
    }
    return out;
}

}  // namespace qhall
