#include "qhall/app/runner.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>

#include "qhall/error.hpp"
#include "qhall/evolve.hpp"
#include "qhall/parallel.hpp"
#include "qhall/pump.hpp"
#include "qhall/readout.hpp"
#include "qhall/spectro.hpp"
#include "qhall/topo.hpp"

#ifndef QHALL_VERSION
#define QHALL_VERSION "0.0.0"
#endif

namespace qhall::app {

const char* code_version() { return QHALL_VERSION; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v, const char* spec = "%.4g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<double> phi_grid(int points) {
    std::vector<double> phis(static_cast<size_t>(points));
    for (int m = 0; m < points; ++m) {
        phis[static_cast<size_t>(m)] = kTwoPi * m / points;
    }
    return phis;
}

int sample_count(double t_max, double dt) { return static_cast<int>(std::lround(t_max / dt)); }

std::vector<double> leg_and_rung(const Hamiltonian& h, int i) {
    const auto& l = h.labels()[static_cast<size_t>(i)];
    return {static_cast<double>(l.leg), static_cast<double>(l.index)};
}

class Runner {
public:
    Runner(const ExperimentConfig& c, const RunOptions& o, ResultBundle& b) : cfg_(c), opt_(o), out_(b) {}

    void run_case(size_t ci) {
        const auto& cc = cfg_.cases[ci];
        switch (cfg_.experiment) {
            case Experiment::band_scan: scan(cc); break;
            case Experiment::walk: walks(ci); break;
            case Experiment::pump: pump(ci); break;
            case Experiment::bilayer_scan:
                scan(cc);
                invariants(cc);
                walks(ci);
                break;
            case Experiment::invariants: invariants(cc); break;
            case Experiment::reduction_check: reduction(cc); break;
        }
    }

private:
    void scan(const CaseConfig& cc) {
        const auto& s = cfg_.scan;
        const int n = sample_count(s.t_max_us, s.dt_us);
        const auto phis = phi_grid(s.phi_points);
        BandScanOptions bo;
        bo.targets = cc.targets;
        bo.times = sample_times(n, s.dt_us);
        bo.freq_grid = padded_frequencies(n, s.dt_us, s.zero_pad, s.f_max_mhz);
        bo.gamma = s.gamma_per_us;
        bo.normalize = s.normalize;
        bo.threads = opt_.threads;
        const ModelConfig& model = cc.model;
        const HamiltonianFamily family = [&model](double phi) { return model.build(phi); };
        const SpectrumMap map = band_scan(family, phis, bo);

        std::vector<RVector> levels(phis.size());
        parallel_for(static_cast<int>(phis.size()), opt_.threads,
                     [&](int m) { levels[static_cast<size_t>(m)] = eigenvalues(family(phis[static_cast<size_t>(m)]).matrix()); });

        Table spec{cc.name + "_spectrum",
                   {{"phi", "rad"}, {"freq", "MHz"}, {"intensity", s.normalize ? "1" : "arb"}},
                   {},
                   "sum over targets of |A_j(f)|^2 of the detrended response; " + std::to_string(n) +
                       " samples, dt " + num(s.dt_us) + " us, zero padding x" + std::to_string(s.zero_pad) +
                       (s.normalize ? ", each phi column scaled to max 1" : ""),
                   {PlotKind::heatmap, 0, 1, 2, -1, {}, cc.name + ": I_phi(f)"}};
        Table lv{cc.name + "_levels", {{"phi", "rad"}, {"level", "1"}, {"energy", "MHz"}}, {},
                 "exact eigenvalues of the open-boundary Hamiltonian", {PlotKind::lines, 0, 2, 0, 1, {}, cc.name + ": levels"}};
        Table pk{cc.name + "_peaks",
                 {{"phi", "rad"}, {"peak", "MHz"}, {"nearest_level", "MHz"}, {"deviation", "MHz"}},
                 {},
                 "local maxima above " + num(s.rel_threshold) + " of the column maximum, parabolic refinement",
                 {}};
        double worst = 0.0, total = 0.0, lo = INFINITY, hi = -INFINITY;
        size_t count = 0;
        for (size_t m = 0; m < phis.size(); ++m) {
            for (size_t f = 0; f < map.freq_grid.size(); ++f) {
                spec.add({phis[m], map.freq_grid[f], map.intensity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f))});
            }
            const RVector& e = levels[m];
            for (Eigen::Index q = 0; q < e.size(); ++q) {
                lv.add({phis[m], static_cast<double>(q + 1), e[q]});
            }
            lo = std::min(lo, e.minCoeff());
            hi = std::max(hi, e.maxCoeff());
            const RVector row = map.intensity.row(static_cast<Eigen::Index>(m)).transpose();
            const auto peaks = extract_peaks(std::span<const double>(row.data(), static_cast<size_t>(row.size())),
                                             map.freq_grid, s.rel_threshold);
            const auto lvls = to_std(e);
            for (double p : peaks) {
                double nearest = lvls.front();
                for (double x : lvls) {
                    if (std::abs(x - p) < std::abs(nearest - p)) {
                        nearest = x;
                    }
                }
                const double dev = std::abs(p - nearest);
                pk.add({phis[m], p, nearest, dev});
                worst = std::max(worst, dev);
                total += dev;
                ++count;
            }
        }
        out_.summary.push_back(cc.name + ": " + std::to_string(count) + " peaks over " +
                               std::to_string(phis.size()) + " phi points, max deviation " + num(worst) +
                               " MHz, mean " + num(count ? total / count : 0.0) + " MHz; levels in [" + num(lo) +
                               ", " + num(hi) + "] MHz");
        out_.tables.push_back(std::move(spec));
        out_.tables.push_back(std::move(lv));
        out_.tables.push_back(std::move(pk));
    }

    std::vector<SiteLabel> walk_starts(const CaseConfig& cc) const {
        if (!cc.initial_sites.empty()) {
            return cc.initial_sites;
        }
        return {SiteLabel{0, (cc.model.n_sites + 1) / 2}};
    }

    void walks(size_t ci) {
        const auto& cc = cfg_.cases[ci];
        const auto& w = cfg_.walk;
        const Hamiltonian h = cc.model.build();
        const Eigensystem eig = eigensolve(h.matrix());
        const auto times = time_grid(w.t_max_us, w.dt_us);
        const auto starts = walk_starts(cc);
        const LatticeKind lattice = cc.model.lattice;
        const int cell = 3;

        Table summary{cc.name + "_walk_summary",
                      {{"initial_qubit", "1"},
                       {"initial_leg", "1"},
                       {"initial_rung", "1"},
                       {"mean_initial_occupation", "1"},
                       {"max_late_return", "1"},
                       {"mean_edge_cell_weight", "1"}},
                      {},
                      "late return: max P_initial(t) for t > " + num(w.late_time_us) +
                          " us; edge cell: first and last 3 rungs of every leg",
                      {}};
        const ReadoutFidelities fid =
            cfg_.readout.enabled && uses_readout(cfg_.experiment) ? resolve_fidelities(cfg_.readout) : ReadoutFidelities{};

        for (size_t si = 0; si < starts.size(); ++si) {
            const int idx = h.index_of(starts[si]);
            const Trajectory traj = evolve_state(eig, StateVector::basis(h.dim(), idx), times,
                                                 EvolveOptions{w.gamma_per_us, false});
            const std::string tag = cc.name + "_walk_" + format_site(starts[si], lattice);
            Table occ{tag,
                      {{"time", "us"}, {"qubit", "1"}, {"leg", "1"}, {"rung", "1"}, {"probability", "1"}},
                      {},
                      "exact propagation from a single excitation on qubit " + format_site(starts[si], lattice) +
                          (w.gamma_per_us > 0 ? ", amplitude envelope exp(-" + num(w.gamma_per_us) + " t)" : ""),
                      {PlotKind::heatmap, 0, 1, 4, -1, {}, tag}};
            double late = 0.0, edge = 0.0;
            for (size_t t = 0; t < traj.times.size(); ++t) {
                for (int q = 0; q < h.dim(); ++q) {
                    const auto lr = leg_and_rung(h, q);
                    const double p = traj.probabilities(static_cast<Eigen::Index>(t), q);
                    occ.add({traj.times[t], static_cast<double>(q + 1), lr[0], lr[1], p});
                    if (lr[1] <= cell || lr[1] > h.length() - cell) {
                        edge += p;
                    }
                }
                if (traj.times[t] > w.late_time_us + 1e-12) {
                    late = std::max(late, traj.probabilities(static_cast<Eigen::Index>(t), idx));
                }
            }
            const auto lr = leg_and_rung(h, idx);
            summary.add({static_cast<double>(idx + 1), lr[0], lr[1], time_averaged_occupation(traj, idx), late,
                         edge / static_cast<double>(traj.times.size())});
            out_.tables.push_back(std::move(occ));
            if (!fid.sites.empty()) {
                out_.tables.push_back(readout_table(tag, traj, fid, ci * 1000 + si));
            }
        }
        for (const auto& row : summary.rows) {
            out_.summary.push_back(cc.name + ": walk from qubit " + format_number(row[0]) + " mean initial occupation " +
                                   num(row[3]) + ", max late return " + num(row[4]));
        }
        out_.tables.push_back(std::move(summary));
    }

    Table readout_table(const std::string& tag, const Trajectory& traj, const ReadoutFidelities& fid,
                        std::uint64_t task) const {
        Table t{tag + "_readout",
                {{"time", "us"}, {"qubit", "1"}, {"p_true", "1"}, {"p_measured", "1"}, {"p_mitigated", "1"}, {"clamp", "1"}},
                {},
                std::to_string(cfg_.readout.shots) +
                    " shots per time sample: one draw of the excited qubit (or vacuum), independent confusion flips, "
                    "per-qubit inverse confusion with clamping",
                {PlotKind::heatmap, 0, 1, 4, -1, {}, tag + " (mitigated)"}};
        const std::uint64_t base = derive_seed(cfg_.seed, task);
        const int dim = static_cast<int>(traj.probabilities.cols());
        for (size_t k = 0; k < traj.times.size(); ++k) {
            std::vector<double> occ(static_cast<size_t>(dim));
            for (int q = 0; q < dim; ++q) {
                occ[static_cast<size_t>(q)] = traj.probabilities(static_cast<Eigen::Index>(k), q);
            }
            const auto measured = measure_register(occ, fid, cfg_.readout.shots, derive_seed(base, k));
            const auto mitigated = mitigate_readout(measured, fid);
            for (int q = 0; q < dim; ++q) {
                const auto qs = static_cast<size_t>(q);
                t.add({traj.times[k], static_cast<double>(q + 1), occ[qs], measured[qs].p1, mitigated.probs[qs].p1,
                       mitigated.clamp_total});
            }
        }
        return t;
    }

    void pump(size_t ci) {
        const auto& cc = cfg_.cases[ci];
        const auto& p = cfg_.pump;
        const ChainSpec chain = cc.model.chain(p.phi0_rad);
        const PumpStart start = prepare_pump_initial(chain, p.center_site, p.initial, p.strict_localization);

        struct Run {
            PumpSchedule schedule;
            Trajectory traj;
            std::vector<double> dx;
            PumpedCharge charge;
        };
        std::vector<Run> runs(p.directions.size());
        parallel_for(static_cast<int>(runs.size()), opt_.threads, [&](int i) {
            Run& r = runs[static_cast<size_t>(i)];
            switch (p.directions[static_cast<size_t>(i)]) {
                case PumpDirection::forward: r.schedule = PumpSchedule::forward(p.speed_rad_per_us, p.duration_us, p.phi0_rad); break;
                case PumpDirection::backward: r.schedule = PumpSchedule::backward(p.speed_rad_per_us, p.duration_us, p.phi0_rad); break;
                case PumpDirection::none: r.schedule = PumpSchedule::still(p.duration_us, p.phi0_rad); break;
            }
            r.traj = pump_evolve(chain, r.schedule, start.state, PumpOptions{p.dt_us, p.record_every});
            r.dx = center_of_mass(r.traj, p.center_site, 3);
            r.charge = pumped_charge(r.traj, r.schedule, p.center_site, 3);
        });

        auto code = [](PumpDirection d) {
            return d == PumpDirection::forward ? 1.0 : d == PumpDirection::backward ? -1.0 : 0.0;
        };
        std::vector<double> markers;
        if (p.speed_rad_per_us > 0.0) {
            const double period = kTwoPi / p.speed_rad_per_us;
            for (double t = period; t <= p.duration_us + 1e-12; t += period) {
                markers.push_back(t);
            }
        }
        Table com{cc.name + "_pump_com",
                  {{"time", "us"}, {"direction", "1"}, {"phi", "rad"}, {"delta_x", "cells"}},
                  {},
                  "centre of mass relative to site " + std::to_string(p.center_site) +
                      " in 3-site cells; direction +1 forward (phi decreasing), -1 backward, 0 static; start " +
                      (p.initial == PumpInitial::basis_state ? "basis state" : "lowest-band projection") +
                      " (lowest-band weight " + num(start.lowest_band_weight) + ")",
                  {PlotKind::lines, 0, 3, 0, 1, markers, cc.name + ": pumped centre of mass"}};
        Table summary{cc.name + "_pump_summary",
                      {{"direction", "1"}, {"speed", "rad/us"}, {"endpoint_delta_x", "cells"}, {"first_cycle_delta_x", "cells"}, {"first_cycle_time", "us"}},
                      {},
                      "first cycle: delta_x interpolated at the first full 2 pi sweep (nan if not reached)",
                      {}};
        const ReadoutFidelities fid = cfg_.readout.enabled ? resolve_fidelities(cfg_.readout) : ReadoutFidelities{};
        for (size_t i = 0; i < runs.size(); ++i) {
            const Run& r = runs[i];
            const double d = code(p.directions[i]);
            for (size_t k = 0; k < r.traj.times.size(); ++k) {
                com.add({r.traj.times[k], d, r.schedule.phase_at(r.traj.times[k]), r.dx[k]});
            }
            const double first = r.charge.per_cycle.empty() ? kNaN : r.charge.per_cycle.front();
            const double first_t = r.charge.cycle_times.empty() ? kNaN : r.charge.cycle_times.front();
            summary.add({d, r.schedule.rate, r.charge.endpoint, first, first_t});
            out_.summary.push_back(cc.name + ": " + to_string(p.directions[i]) + " pump endpoint delta_x " +
                                   num(r.charge.endpoint) +
                                   (r.charge.per_cycle.empty() ? " (no full cycle)" : ", first cycle " + num(first)));
            const std::string tag = cc.name + "_pump_" + to_string(p.directions[i]);
            Table occ{tag, {{"time", "us"}, {"site", "1"}, {"probability", "1"}}, {},
                      "occupations under the " + std::string(to_string(p.directions[i])) + " schedule",
                      {PlotKind::heatmap, 0, 1, 2, -1, {}, tag}};
            for (size_t k = 0; k < r.traj.times.size(); ++k) {
                for (Eigen::Index q = 0; q < r.traj.probabilities.cols(); ++q) {
                    occ.add({r.traj.times[k], static_cast<double>(q + 1), r.traj.probabilities(static_cast<Eigen::Index>(k), q)});
                }
            }
            out_.tables.push_back(std::move(occ));
            if (!fid.sites.empty()) {
                out_.tables.push_back(readout_table(tag, r.traj, fid, ci * 1000 + i));
            }
        }
        out_.tables.push_back(std::move(com));
        out_.tables.push_back(std::move(summary));
    }

    BlochModel bloch(const ModelConfig& m) const {
        BlochModel bm = m.lattice == LatticeKind::chain
                            ? BlochModel::chain(m.j_par_mhz, m.j_par2_mhz, m.delta_mhz)
                            : BlochModel::ladder(m.j_par_mhz, m.j_par2_mhz, m.j_perp_mhz, m.j_cross_mhz, m.delta_up_mhz,
                                                 m.delta_down_mhz);
        bm.b = m.b > 0 ? 1.0 / 3.0 : -1.0 / 3.0;
        return bm;
    }

    void invariants(const CaseConfig& cc) {
        const auto& t = cfg_.topology;
        const BlochModel bm = bloch(cc.model);
        const TorusGrid grid{t.nk, t.nphi};
        const ChernReport report = chern_report(bm, grid, opt_.threads);
        const BandEdges edges = band_edges(bm, grid);

        Table groups{cc.name + "_chern_bands", {{"first_band", "1"}, {"last_band", "1"}, {"chern", "1"}}, {},
                     "link-determinant Chern numbers on a " + std::to_string(t.nk) + " x " + std::to_string(t.nphi) +
                         " (k, phi) grid; bands joined where a gap closes; " + report.sign_convention,
                     {}};
        for (const auto& g : report.groups) {
            groups.add({static_cast<double>(g.first), static_cast<double>(g.last), static_cast<double>(g.chern)});
        }
        Table gaps{cc.name + "_gaps",
                   {{"gap", "1"}, {"min_direct_gap", "MHz"}, {"k", "rad"}, {"phi", "rad"}, {"closed", "1"}, {"hall_sum", "e^2/h"}},
                   {},
                   "direct gap above band g minimised over the torus; hall_sum is nan where the gap closes",
                   {}};
        std::string sums;
        for (size_t g = 0; g < report.gaps.size(); ++g) {
            const auto& gi = report.gaps[g];
            const auto& s = report.gap_sums[g];
            gaps.add({static_cast<double>(gi.gap), gi.min_gap, gi.k, gi.phi, gi.closed ? 1.0 : 0.0,
                      s ? static_cast<double>(*s) : kNaN});
            sums += (g ? ", " : "") + (s ? std::to_string(*s) : std::string("closed"));
        }
        Table be{cc.name + "_band_edges", {{"band", "1"}, {"min", "MHz"}, {"max", "MHz"}}, {},
                 "band extrema over the torus grid", {}};
        for (size_t n = 0; n < edges.min.size(); ++n) {
            be.add({static_cast<double>(n + 1), edges.min[n], edges.max[n]});
        }
        out_.summary.push_back(cc.name + ": Hall sums per gap [" + sums + "]");

        if (t.parity) {
            Table par{cc.name + "_parity",
                      {{"phi", "rad"}, {"filled_bands", "1"}, {"negative_at_0", "1"}, {"negative_at_pi", "1"}, {"N", "1"}},
                      {},
                      "inversion parities of the filled Bloch states at k = 0 and k = pi",
                      {}};
            double residual = 0.0;
            for (double phi : {kTwoPi / 3.0, 5.0 * kPi / 3.0}) {
                for (double k : {0.0, 0.5, 1.3, kPi, 4.1}) {
                    residual = std::max(residual, inversion_residual(bm, phi, k));
                }
                for (const auto& gi : report.gaps) {
                    if (gi.closed) {
                        continue;
                    }
                    const ParityResult pr = parity_invariant(bm, phi, gi.gap);
                    par.add({phi, static_cast<double>(gi.gap), static_cast<double>(pr.negative_at_0),
                             static_cast<double>(pr.negative_at_pi), static_cast<double>(pr.invariant)});
                    out_.summary.push_back(cc.name + ": parity invariant N = " + std::to_string(pr.invariant) +
                                           " at phi = " + num(phi) + ", " + std::to_string(gi.gap) + " filled bands");
                }
            }
            out_.summary.push_back(cc.name + ": inversion residual " + num(residual, "%.3g"));
            out_.tables.push_back(std::move(par));
        }

        if (t.edge_phi_points > 0) {
            Table ec{cc.name + "_edge_crossings",
                     {{"gap", "1"}, {"reference_energy", "MHz"}, {"left_up", "1"}, {"left_down", "1"},
                      {"right_up", "1"}, {"right_down", "1"}, {"left_net", "1"}, {"hall_sum", "e^2/h"}},
                     {},
                     "open-boundary levels crossing the middle of each global gap while phi sweeps [0, 2 pi) on " +
                         std::to_string(t.edge_phi_points) + " points",
                     {}};
            const ModelConfig& model = cc.model;
            const HamiltonianFamily family = [&model](double phi) { return model.build(phi); };
            for (size_t g = 0; g < report.gaps.size(); ++g) {
                const double top = edges.max[g], bottom = edges.min[g + 1];
                if (report.gaps[g].closed || !(bottom > top)) {
                    continue;
                }
                const double ref = 0.5 * (top + bottom);
                const EdgeCrossings cr = count_edge_crossings(family, ref, t.edge_phi_points);
                const double s = report.gap_sums[g] ? static_cast<double>(*report.gap_sums[g]) : kNaN;
                ec.add({static_cast<double>(g + 1), ref, static_cast<double>(cr.left_up), static_cast<double>(cr.left_down),
                        static_cast<double>(cr.right_up), static_cast<double>(cr.right_down),
                        static_cast<double>(cr.left_net()), s});
                out_.summary.push_back(cc.name + ": gap " + std::to_string(g + 1) + " left-edge net crossings " +
                                       std::to_string(cr.left_net()) + ", Hall sum " + format_number(s));
            }
            out_.tables.push_back(std::move(ec));
        }
        out_.tables.push_back(std::move(groups));
        out_.tables.push_back(std::move(gaps));
        out_.tables.push_back(std::move(be));
    }

    void reduction(const CaseConfig& cc) {
        const HofstadterSpec spec = cc.model.hofstadter();
        const double mismatch = check_dimensional_reduction(spec);
        Table t{cc.name + "_reduction",
                {{"nx", "1"}, {"ny", "1"}, {"t_x", "MHz"}, {"t_y", "MHz"}, {"b", "1"}, {"max_mismatch", "MHz"}},
                {},
                "sorted 2D spectrum against the union of AAH chains with J = t_x, delta = 2 t_y, phi = k_y",
                {}};
        t.add({static_cast<double>(spec.nx), static_cast<double>(spec.ny), spec.t_x, spec.t_y, spec.b, mismatch});
        out_.tables.push_back(std::move(t));
        out_.summary.push_back(cc.name + ": max mismatch " + num(mismatch, "%.3g") + " MHz " +
                               (mismatch < 1e-9 ? "< 1e-9 MHz" : ">= 1e-9 MHz"));
    }

    const ExperimentConfig& cfg_;
    const RunOptions& opt_;
    ResultBundle& out_;
};

}  // namespace

ResultBundle run(const ExperimentConfig& config, const RunOptions& options) {
    validate(config);
    ResultBundle bundle;
    bundle.experiment = to_string(config.experiment);
    bundle.config_hash = hex_hash(config_hash(config));
    bundle.code_version = code_version();
    bundle.seed = config.seed;
    if (options.stamp_time) {
        bundle.timestamp = utc_now();
    }
    Runner runner(config, options, bundle);
    for (size_t i = 0; i < config.cases.size(); ++i) {
        runner.run_case(i);
    }
    return bundle;
}

}  // namespace qhall::app
