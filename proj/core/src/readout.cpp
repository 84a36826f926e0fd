#include "qhall/readout.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "qhall/error.hpp"

namespace qhall {

namespace {

void check_sizes(size_t probs, const ReadoutFidelities& fid) {
    if (probs != fid.sites.size()) {
        throw InvalidArgument("readout: " + std::to_string(probs) + " qubits but " +
                              std::to_string(fid.sites.size()) + " fidelity entries");
    }
}

double unit_uniform(std::mt19937_64& rng) { return std::generate_canonical<double, 53>(rng); }

}  // namespace

void validate(const ReadoutFidelities& fid, bool require_invertible) {
    for (size_t j = 0; j < fid.sites.size(); ++j) {
        const auto& s = fid.sites[j];
        if (!(s.f0 >= 0.0 && s.f0 <= 1.0 && s.f1 >= 0.0 && s.f1 <= 1.0)) {
            throw InvalidArgument("readout fidelity of qubit " + std::to_string(j + 1) + " outside [0, 1]");
        }
        if (require_invertible && s.f0 + s.f1 <= 1.0) {
            throw SingularConfusion("confusion matrix of qubit " + std::to_string(j + 1) +
                                    " is singular (F0 + F1 <= 1)");
        }
    }
}

std::vector<QubitProbs> corrupt_readout(std::span<const QubitProbs> truth, const ReadoutFidelities& fid) {
    check_sizes(truth.size(), fid);
    validate(fid, false);
    std::vector<QubitProbs> out(truth.size());
    for (size_t j = 0; j < truth.size(); ++j) {
        const auto& f = fid.sites[j];
        const auto& p = truth[j];
        out[j].p0 = f.f0 * p.p0 + (1.0 - f.f1) * p.p1;
        out[j].p1 = (1.0 - f.f0) * p.p0 + f.f1 * p.p1;
    }
    return out;
}

MitigatedReadout mitigate_readout(std::span<const QubitProbs> measured, const ReadoutFidelities& fid) {
    check_sizes(measured.size(), fid);
    validate(fid, true);
    MitigatedReadout out;
    out.probs.resize(measured.size());
    for (size_t j = 0; j < measured.size(); ++j) {
        const auto& f = fid.sites[j];
        const double det = f.f0 + f.f1 - 1.0;
        const double m0 = measured[j].p0;
        const double m1 = measured[j].p1;
        const double raw[2] = {(f.f1 * m0 - (1.0 - f.f1) * m1) / det, (f.f0 * m1 - (1.0 - f.f0) * m0) / det};
        double clamped[2];
        for (int b = 0; b < 2; ++b) {
            clamped[b] = std::clamp(raw[b], 0.0, 1.0);
            const double shift = std::abs(raw[b] - clamped[b]);
            out.clamp_total += shift;
            out.clamp_max = std::max(out.clamp_max, shift);
        }
        out.probs[j] = {clamped[0], clamped[1]};
    }
    return out;
}

std::vector<QubitProbs> occupations_to_qubits(std::span<const double> occupations) {
    std::vector<QubitProbs> out(occupations.size());
    for (size_t j = 0; j < occupations.size(); ++j) {
        out[j] = {1.0 - occupations[j], occupations[j]};
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

struct OutcomeTable {
    std::vector<int> order;          // canonical outcome order
    std::vector<double> cumulative;  // cumulative probability along `order`
};

OutcomeTable outcome_table(std::span<const double> probabilities) {
    double total = 0.0;
    for (size_t j = 0; j < probabilities.size(); ++j) {
        const double p = probabilities[j];
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw InvalidArgument("sample_shots: probability at index " + std::to_string(j) +
                                  " is negative or non-finite");
        }
        total += p;
    }
    if (total > 1.0 + 1e-9) {
        throw InvalidArgument("sample_shots: probabilities sum to " + std::to_string(total) + " > 1");
    }
    std::vector<double> p(probabilities.begin(), probabilities.end());
    p.push_back(std::max(0.0, 1.0 - total));
    OutcomeTable t;
    t.order.resize(p.size());
    std::iota(t.order.begin(), t.order.end(), 0);
    std::stable_sort(t.order.begin(), t.order.end(), [&](int a, int b) { return p[static_cast<size_t>(a)] > p[static_cast<size_t>(b)]; });
    double acc = 0.0;
    for (int o : t.order) {
        acc += p[static_cast<size_t>(o)];
        t.cumulative.push_back(acc);
    }
    return t;
}

int draw(const OutcomeTable& t, double u) {
    const double scaled = u * t.cumulative.back();
    auto it = std::upper_bound(t.cumulative.begin(), t.cumulative.end(), scaled);
    auto pos = static_cast<size_t>(it - t.cumulative.begin());
    // Skip zero-probability outcomes that share the final cumulative value.
    pos = std::min(pos, t.cumulative.size() - 1);
    return t.order[pos];
}

}  // namespace

std::vector<std::int64_t> sample_shots(std::span<const double> probabilities, std::int64_t n_shots,
                                       std::uint64_t seed) {
    if (n_shots < 0) {
        throw InvalidArgument("sample_shots: negative shot count");
    }
    const OutcomeTable table = outcome_table(probabilities);
    std::vector<std::int64_t> counts(probabilities.size() + 1, 0);
    std::mt19937_64 rng(seed);
    for (std::int64_t s = 0; s < n_shots; ++s) {
        ++counts[static_cast<size_t>(draw(table, unit_uniform(rng)))];
    }
    return counts;
}

std::vector<QubitProbs> measure_register(std::span<const double> occupations, const ReadoutFidelities& fid,
                                         std::int64_t n_shots, std::uint64_t seed) {
    check_sizes(occupations.size(), fid);
    validate(fid, false);
    if (n_shots < 1) {
        throw InvalidArgument("measure_register: need at least one shot");
    }
    const OutcomeTable table = outcome_table(occupations);
    const size_t n = occupations.size();
    std::vector<std::int64_t> ones(n, 0);
    std::mt19937_64 rng(seed);
    for (std::int64_t s = 0; s < n_shots; ++s) {
        const auto excited = static_cast<size_t>(draw(table, unit_uniform(rng)));
        for (size_t j = 0; j < n; ++j) {
            const double p_read_one = j == excited ? fid.sites[j].f1 : 1.0 - fid.sites[j].f0;
            if (unit_uniform(rng) < p_read_one) {
                ++ones[j];
            }
        }
    }
    std::vector<QubitProbs> out(n);
    for (size_t j = 0; j < n; ++j) {
        const double p1 = static_cast<double>(ones[j]) / static_cast<double>(n_shots);
        out[j] = {1.0 - p1, p1};
    }
    return out;
}

CrosstalkMatrix::CrosstalkMatrix(RMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
        throw InvalidArgument("crosstalk matrix must be square and non-empty");
    }
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
        for (Eigen::Index j = 0; j < m_.cols(); ++j) {
            const double v = m_(i, j);
            if (!std::isfinite(v)) {
                throw InvalidArgument("crosstalk matrix has a non-finite entry");
            }
            if (i == j && v != 1.0) {
                throw InvalidArgument("crosstalk matrix diagonal must be exactly 1 (row " + std::to_string(i + 1) +
                                      ")");
            }
            if (i != j && std::abs(v) >= kMaxCrosstalk) {
                throw InvalidArgument("crosstalk entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                      ") exceeds 4.5 %");
            }
        }
    }
    Eigen::FullPivLU<RMatrix> lu(m_);
    if (!lu.isInvertible()) {
        throw SingularMatrix("crosstalk matrix is singular");
    }
}

CrosstalkMatrix CrosstalkMatrix::identity(int n) { return CrosstalkMatrix(RMatrix::Identity(n, n)); }

RVector apply_crosstalk_correction(const RVector& z_target, const CrosstalkMatrix& m) {
    if (z_target.size() != m.size()) {
        throw InvalidArgument("crosstalk correction: target has " + std::to_string(z_target.size()) +
                              " lines, matrix has " + std::to_string(m.size()));
    }
    Eigen::FullPivLU<RMatrix> lu(m.matrix());
    if (!lu.isInvertible()) {
        throw SingularMatrix("crosstalk matrix is singular");
    }
    RVector applied = lu.solve(z_target);
    // One step of iterative refinement keeps the residual at rounding level.
    applied += lu.solve(z_target - m.matrix() * applied);
    return applied;
}

double SettlingModel::droop() const { return alpha / (2.0 * alpha + beta); }

void validate(const SettlingModel& model) {
    if (!(model.t_d > 0.0) || !std::isfinite(model.t_d)) {
        throw InvalidArgument("settling model: t_d must be > 0");
    }
    if (!std::isfinite(model.alpha) || !std::isfinite(model.beta) || 2.0 * model.alpha + model.beta == 0.0) {
        throw InvalidArgument("settling model: alpha, beta must be finite with 2 alpha + beta != 0");
    }
}

std::vector<double> settling_response(std::span<const double> waveform, const SettlingModel& model, double dt) {
    validate(model);
    if (!(dt > 0.0)) {
        throw InvalidArgument("settling_response: dt must be > 0");
    }
    const double a = model.droop();
    const double l = std::exp(-dt / model.t_d);
    std::vector<double> y(waveform.size());
    double low = 0.0;
    for (size_t k = 0; k < waveform.size(); ++k) {
        if (k > 0) {
            low = l * low + (1.0 - l) * waveform[k - 1];
        }
        y[k] = waveform[k] - a * low;
    }
    return y;
}

std::vector<double> settling_predistort(double target, const SettlingModel& model, std::span<const double> times) {
    validate(model);
    if (times.empty()) {
        return {};
    }
    double dt = model.t_d;
    if (times.size() >= 2) {
        dt = times[1] - times[0];
        if (!(dt > 0.0)) {
            throw InvalidArgument("settling_predistort: times must ascend");
        }
    }
    if (dt > 2.0 * model.t_d) {
        throw UnstableFilter("settling_predistort: dt exceeds 2 t_d");
    }
    const double a = model.droop();
    const double l = std::exp(-dt / model.t_d);
    const double pole = l + (1.0 - l) * a;
    if (std::abs(pole) >= 1.0) {
        throw UnstableFilter("settling_predistort: inverse filter pole " + std::to_string(pole) + " is unstable");
    }
    // Exact inverse of settling_response: w[k] = target + a L[k].
    std::vector<double> w(times.size());
    double low = 0.0;
    for (size_t k = 0; k < times.size(); ++k) {
        if (k > 0) {
            low = l * low + (1.0 - l) * w[k - 1];
        }
        w[k] = target + a * low;
    }
    return w;
}

SettlingModel fit_settling(std::span<const double> times, std::span<const double> p1) {
    if (times.size() != p1.size() || times.size() < 4) {
        throw InvalidArgument("fit_settling: need at least four (t, P1) samples");
    }
    const double h = times[1] - times[0];
    if (!(h > 0.0)) {
        throw InvalidArgument("fit_settling: times must ascend");
    }
    // P(t_{k+1}) - P(t_k) = alpha exp(-t_k / T)(exp(-h / T) - 1): its log is linear in t_k.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, sign = 0.0;
    const size_t m = times.size() - 1;
    for (size_t k = 0; k < m; ++k) {
        const double d = p1[k + 1] - p1[k];
        if (d == 0.0) {
            throw NumericError("fit_settling: flat segment, decay not resolvable");
        }
        sign += d;
        const double x = times[k];
        const double y = std::log(std::abs(d));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(m);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    if (!(slope < 0.0)) {
        throw NumericError("fit_settling: samples do not decay");
    }
    SettlingModel model;
    model.t_d = -1.0 / slope;
    const double scale = std::exp(intercept) / (1.0 - std::exp(-h / model.t_d));
    model.alpha = sign < 0.0 ? scale : -scale;
    double residual = 0.0;
    for (size_t k = 0; k < times.size(); ++k) {
        residual += p1[k] - model.alpha * (1.0 + std::exp(-times[k] / model.t_d));
    }
    model.beta = residual / static_cast<double>(times.size());
    return model;
}

}  // namespace qhall
