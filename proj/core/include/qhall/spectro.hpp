#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qhall/linalg.hpp"
#include "qhall/model.hpp"

namespace qhall {

// chi(t) = <sigma_x(t)> + i <sigma_y(t)> of the target qubit after a local
// (|0> + |1>)/sqrt(2) preparation, in the single-excitation picture.
struct ResponseSeries {
    std::vector<double> times;     // us, uniform
    std::vector<Complex> values;
    SiteLabel target;
    double gamma = 0.0;            // 1/us
};

// chi(t) = (2 sum_n |c_n|^2 exp(-i 2 pi E_n t) - 1) exp(-gamma t), c_n = <v_n|target>.
ResponseSeries response_function(const Hamiltonian& h, SiteLabel target, std::span<const double> times,
                                 double gamma = 0.0);
ResponseSeries response_function(const Eigensystem& eig, int target_index, std::span<const double> times,
                                 double gamma = 0.0);

// Subtracts the complex time-average over the window.
ResponseSeries detrend(const ResponseSeries& chi);

// Sampling grid t_k = k dt, k = 0..n-1 (window T = n dt).
std::vector<double> sample_times(int n, double dt);

// Canonical DFT frequencies m / T for m = -n/2 .. n/2 - 1.
std::vector<double> fft_frequencies(int n, double dt);

// Zero-padded plotting grid with spacing 1 / (pad T), restricted to |f| <= f_max.
std::vector<double> padded_frequencies(int n, double dt, int pad, double f_max);

// |A(f)|^2 with A(f) = (1/T) sum_k chi(t_k) exp(+i 2 pi f t_k) dt, T = n dt.
// A component exp(-i 2 pi E t) peaks at f = E.
std::vector<double> ft_power(const ResponseSeries& chi, std::span<const double> freq_grid);

struct SpectrumMap {
    std::vector<double> phi_grid;    // rad
    std::vector<double> freq_grid;   // MHz
    RMatrix intensity;               // rows: phi, cols: freq
    bool normalized = false;
};

using HamiltonianFamily = std::function<Hamiltonian(double phi)>;

struct BandScanOptions {
    std::vector<SiteLabel> targets;  // empty: every site
    std::vector<double> times;       // uniform sampling grid
    std::vector<double> freq_grid;
    double gamma = 0.0;
    bool normalize = false;          // per-column max scaled to 1
    int threads = 1;
};

// I_phi(f) = sum over targets of |A_j(f)|^2 of the detrended response.
SpectrumMap band_scan(const HamiltonianFamily& family, std::span<const double> phi_grid,
                      const BandScanOptions& options);

// Local maxima above rel_threshold * max(power), refined by 3-point parabolic
// interpolation, ascending. Empty when nothing qualifies.
std::vector<double> extract_peaks(std::span<const double> power, std::span<const double> freq_grid,
                                  double rel_threshold);

// Distance from each peak to its nearest value in `levels`.
std::vector<double> nearest_level_deviation(std::span<const double> peaks, std::span<const double> levels);

}  // namespace qhall
