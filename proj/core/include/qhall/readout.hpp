#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "qhall/linalg.hpp"

namespace qhall {

// Assignment fidelities of one qubit: F0 = P(read 0 | prepared 0), F1 = P(read 1 | prepared 1).
struct SiteFidelity {
    double f0 = 1.0;
    double f1 = 1.0;
    bool operator==(const SiteFidelity&) const = default;
};

struct ReadoutFidelities {
    std::vector<SiteFidelity> sites;
};

// Throws InvalidArgument for values outside [0, 1]; with `require_invertible`
// also SingularConfusion when F0 + F1 <= 1 for some site.
void validate(const ReadoutFidelities& fid, bool require_invertible = true);

struct QubitProbs {
    double p0 = 1.0;
    double p1 = 0.0;
};

// Applies [[F0, 1 - F1], [1 - F0, F1]] to (p0, p1) per site.
std::vector<QubitProbs> corrupt_readout(std::span<const QubitProbs> truth, const ReadoutFidelities& fid);

struct MitigatedReadout {
    std::vector<QubitProbs> probs;     // clamped to [0, 1]
    double clamp_total = 0.0;          // sum of |raw - clamped| over all entries
    double clamp_max = 0.0;            // largest single adjustment
};

// Per-site inverse of the confusion matrix (tensor-product inversion).
MitigatedReadout mitigate_readout(std::span<const QubitProbs> measured, const ReadoutFidelities& fid);

// Single-excitation occupations -> per-site (1 - P_j, P_j).
std::vector<QubitProbs> occupations_to_qubits(std::span<const double> occupations);

// Independent stream for task `index` derived from a base seed (SplitMix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Multinomial draw over the sites plus a vacuum outcome holding 1 - sum(p).
// Returns counts of length p.size() + 1 (vacuum last). One uniform variate is
// consumed per shot and mapped through the cumulative distribution taken in
// canonical order: descending probability, ties by index. Relabeling outcomes
// with distinct probabilities therefore relabels the counts and nothing else.
std::vector<std::int64_t> sample_shots(std::span<const double> probabilities, std::int64_t n_shots,
                                       std::uint64_t seed);

// Per-shot emulation of the register readout: one multinomial draw of the
// excited site (or vacuum), then independent confusion flips on every qubit.
// Returns the measured per-site (P0, P1) frequencies.
std::vector<QubitProbs> measure_register(std::span<const double> occupations, const ReadoutFidelities& fid,
                                         std::int64_t n_shots, std::uint64_t seed);

// Z_sensed = M * Z_applied. Unit diagonal; off-diagonals below 4.5 %.
class CrosstalkMatrix {
public:
    explicit CrosstalkMatrix(RMatrix m);
    static CrosstalkMatrix identity(int n);

    int size() const { return static_cast<int>(m_.rows()); }
    const RMatrix& matrix() const { return m_; }

private:
    RMatrix m_;
};

inline constexpr double kMaxCrosstalk = 0.045;

// Solves M * z_applied = z_target.
RVector apply_crosstalk_correction(const RVector& z_target, const CrosstalkMatrix& m);

// First-order settling of a DC-blocked line: a step input is sensed as
// alpha (1 + exp(-t / t_d)) + beta, i.e. it droops by the fraction
// alpha / (2 alpha + beta) with time constant t_d.
struct SettlingModel {
    double alpha = 0.05;
    double beta = 0.9;
    double t_d = 155.45;   // us

    double droop() const;
    double curve(double t) const { return alpha * (1.0 + std::exp(-t / t_d)) + beta; }
};

void validate(const SettlingModel& model);

// Sensed waveform for a drive `waveform` sampled at spacing dt:
// y[k] = w[k] - droop * L[k], L[k] = l L[k-1] + (1 - l) w[k-1], l = exp(-dt / t_d).
std::vector<double> settling_response(std::span<const double> waveform, const SettlingModel& model, double dt);

// Drive whose sensed response is the flat step `target` for all samples.
std::vector<double> settling_predistort(double target, const SettlingModel& model, std::span<const double> times);

// Recovers (alpha, beta, t_d) from noise-free samples of the curve by a
// linear fit of log|P(t_{k+1}) - P(t_k)| against t_k.
SettlingModel fit_settling(std::span<const double> times, std::span<const double> p1);

}  // namespace qhall
