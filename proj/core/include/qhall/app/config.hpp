#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qhall/error.hpp"
#include "qhall/model.hpp"
#include "qhall/pump.hpp"
#include "qhall/readout.hpp"
#include "qhall/topo.hpp"

namespace qhall::app {

// Raised for malformed or invalid configuration; the message starts with the
// offending key path, e.g. "cases[0].model.n_sites: must be >= 1".
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& key, const std::string& what)
        : InvalidArgument(key + ": " + what), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

enum class Experiment { band_scan, walk, pump, bilayer_scan, invariants, reduction_check };

const char* to_string(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view name);

struct BondOverrideConfig {
    SiteLabel a;
    SiteLabel b;
    double value_mhz = 0.0;
    bool operator==(const BondOverrideConfig&) const = default;
};

struct PotentialOverrideConfig {
    SiteLabel site;
    double value_mhz = 0.0;
    bool operator==(const PotentialOverrideConfig&) const = default;
};

// Union of the three lattice specs; only the fields of `lattice` are read or written.
struct ModelConfig {
    LatticeKind lattice = LatticeKind::chain;
    int n_sites = 15;          // chain sites or ladder rungs
    double j_par_mhz = 8.0;
    double j_par2_mhz = 0.8;
    double j_perp_mhz = 7.0;
    double j_cross_mhz = 1.6;
    double delta_mhz = 12.0;
    double delta_up_mhz = 12.0;
    double delta_down_mhz = 12.0;
    double b = 1.0 / 3.0;
    double phi_rad = 0.0;
    int nx = 15;
    int ny = 12;
    double t_x_mhz = 8.0;
    double t_y_mhz = 6.0;
    Boundary boundary_y = Boundary::periodic;
    std::vector<BondOverrideConfig> bond_overrides;
    std::vector<PotentialOverrideConfig> potential_overrides;

    bool operator==(const ModelConfig&) const = default;

    ChainSpec chain(double phi) const;
    LadderSpec ladder(double phi) const;
    HofstadterSpec hofstadter() const;
    Hamiltonian build(double phi) const;
    Hamiltonian build() const { return build(phi_rad); }
    int dim() const;
};

struct CaseConfig {
    std::string name = "main";
    ModelConfig model;
    std::vector<SiteLabel> targets;         // spectroscopy targets; empty = every site
    std::vector<SiteLabel> initial_sites;   // walk starts; empty = central site
    bool operator==(const CaseConfig&) const = default;
};

struct ScanConfig {
    int phi_points = 60;
    double t_max_us = 1.0;
    double dt_us = 0.002;
    double gamma_per_us = 0.0;
    int zero_pad = 8;
    double f_max_mhz = 40.0;
    bool normalize = false;
    double rel_threshold = 0.1;
    bool operator==(const ScanConfig&) const = default;
};

struct WalkConfig {
    double t_max_us = 1.0;
    double dt_us = 0.002;
    double gamma_per_us = 0.0;
    double late_time_us = 0.2;   // "late" window for the return probability
    bool operator==(const WalkConfig&) const = default;
};

struct PumpConfig {
    double phi0_rad = 5.0 * kPi / 3.0;
    double speed_rad_per_us = 4.9 * kPi;
    double duration_us = 0.5;
    double dt_us = 1e-4;
    int record_every = 10;
    PumpInitial initial = PumpInitial::basis_state;
    int center_site = 8;
    // Fail with LocalizationTooWeak when the central site keeps < 90 % of its
    // weight in the lowest band.
    bool strict_localization = false;
    std::vector<PumpDirection> directions{PumpDirection::forward, PumpDirection::backward, PumpDirection::none};
    bool operator==(const PumpConfig&) const = default;
};

struct TopologyConfig {
    int nk = 60;
    int nphi = 60;
    bool parity = false;       // inversion parity invariant at phi = 2pi/3 and 5pi/3
    int edge_phi_points = 0;   // > 0: count open-boundary edge crossings per open gap
    bool operator==(const TopologyConfig&) const = default;
};

struct ReadoutConfig {
    bool enabled = false;
    std::int64_t shots = 3000;
    std::string table;                     // named fidelity table, e.g. "device_15q"
    std::vector<SiteFidelity> fidelities;  // inline table (used when `table` is empty)
    bool operator==(const ReadoutConfig&) const = default;
};

struct OutputConfig {
    std::string dir = "qhall_out";
    bool plots = false;
    bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::band_scan;
    std::string description;
    std::uint64_t seed = 0;
    std::vector<CaseConfig> cases{CaseConfig{}};
    ScanConfig scan;
    WalkConfig walk;
    PumpConfig pump;
    TopologyConfig topology;
    ReadoutConfig readout;
    OutputConfig output;
    bool operator==(const ExperimentConfig&) const = default;
};

// Sections read and written for each experiment kind.
bool uses_scan(Experiment e);
bool uses_walk(Experiment e);
bool uses_pump(Experiment e);
bool uses_topology(Experiment e);
bool uses_readout(Experiment e);

// Parsing rejects unknown keys and sections not used by the experiment, then validates.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON with every applicable key written out.
std::string emit_config(const ExperimentConfig& config);

// Checks every parameter the runner will hand to the modules.
void validate(const ExperimentConfig& config);

// FNV-1a over the canonical JSON, excluding the output section.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string hex_hash(std::uint64_t h);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

// "8" for chains, "8up" / "8down" for ladders.
std::string format_site(const SiteLabel& s, LatticeKind lattice);

// The fidelity table the readout section resolves to.
ReadoutFidelities resolve_fidelities(const ReadoutConfig& readout);

}  // namespace qhall::app
