#include "qhall/app/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "qhall/app/presets.hpp"

namespace qhall::app {

using nlohmann::json;

const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::band_scan: return "band_scan";
        case Experiment::walk: return "walk";
        case Experiment::pump: return "pump";
        case Experiment::bilayer_scan: return "bilayer_scan";
        case Experiment::invariants: return "invariants";
        case Experiment::reduction_check: return "reduction_check";
    }
    return "?";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
    for (auto e : {Experiment::band_scan, Experiment::walk, Experiment::pump, Experiment::bilayer_scan,
                   Experiment::invariants, Experiment::reduction_check}) {
        if (name == to_string(e)) {
            return e;
        }
    }
    return std::nullopt;
}

bool uses_scan(Experiment e) { return e == Experiment::band_scan || e == Experiment::bilayer_scan; }
bool uses_walk(Experiment e) { return e == Experiment::walk || e == Experiment::bilayer_scan; }
bool uses_pump(Experiment e) { return e == Experiment::pump; }
bool uses_topology(Experiment e) { return e == Experiment::invariants || e == Experiment::bilayer_scan; }
bool uses_readout(Experiment e) { return e == Experiment::walk || e == Experiment::pump; }

namespace {

const char* lattice_name(LatticeKind k) {
    switch (k) {
        case LatticeKind::chain: return "chain";
        case LatticeKind::ladder: return "ladder";
        case LatticeKind::hofstadter: return "hofstadter";
    }
    return "?";
}

const char* initial_name(PumpInitial i) { return i == PumpInitial::basis_state ? "basis_state" : "lowest_band"; }

// Strict view of one JSON object: typed getters record the keys they touch
// and finish() rejects whatever was left over.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string& k) const { return j_.contains(k); }

    const json* raw(const std::string& k) {
        seen_.insert(k);
        auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& k, double def) {
        const json* v = raw(k);
        if (!v) {
            return def;
        }
        if (!v->is_number()) {
            throw ConfigError(key(k), "expected a number");
        }
        const double x = v->get<double>();
        if (!std::isfinite(x)) {
            throw ConfigError(key(k), "must be finite");
        }
        return x;
    }

    std::int64_t integer(const std::string& k, std::int64_t def) {
        const json* v = raw(k);
        if (!v) {
            return def;
        }
        if (!v->is_number_integer()) {
            throw ConfigError(key(k), "expected an integer");
        }
        return v->get<std::int64_t>();
    }

    int small_int(const std::string& k, int def) {
        const auto v = integer(k, def);
        if (v < -1000000 || v > 1000000) {
            throw ConfigError(key(k), "out of range");
        }
        return static_cast<int>(v);
    }

    std::uint64_t unsigned_int(const std::string& k, std::uint64_t def) {
        const json* v = raw(k);
        if (!v) {
            return def;
        }
        if (!v->is_number_unsigned()) {
            throw ConfigError(key(k), "expected a non-negative integer");
        }
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& k, bool def) {
        const json* v = raw(k);
        if (!v) {
            return def;
        }
        if (!v->is_boolean()) {
            throw ConfigError(key(k), "expected true or false");
        }
        return v->get<bool>();
    }

    std::string string(const std::string& k, const std::string& def) {
        const json* v = raw(k);
        if (!v) {
            return def;
        }
        if (!v->is_string()) {
            throw ConfigError(key(k), "expected a string");
        }
        return v->get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(key(it.key()), "unknown key");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

SiteLabel parse_site(const json& v, LatticeKind lattice, const std::string& path) {
    if (lattice == LatticeKind::chain) {
        if (!v.is_number_integer()) {
            throw ConfigError(path, "chain sites are integers");
        }
        return SiteLabel{0, v.get<int>()};
    }
    if (lattice != LatticeKind::ladder) {
        throw ConfigError(path, "site labels are only defined for chains and ladders");
    }
    if (!v.is_string()) {
        throw ConfigError(path, "ladder sites are written like \"3up\" or \"12down\"");
    }
    const std::string s = v.get<std::string>();
    size_t digits = 0;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) {
        ++digits;
    }
    const std::string leg = s.substr(digits);
    if (digits == 0 || digits > 6 || (leg != "up" && leg != "down")) {
        throw ConfigError(path, "bad ladder site \"" + s + "\" (expected e.g. \"3up\" or \"12down\")");
    }
    return SiteLabel{leg == "up" ? 0 : 1, std::stoi(s.substr(0, digits))};
}

json site_json(const SiteLabel& s, LatticeKind lattice) {
    if (lattice == LatticeKind::chain) {
        return s.index;
    }
    return format_site(s, lattice);
}

std::vector<SiteLabel> parse_sites(Reader& r, const std::string& k, LatticeKind lattice) {
    std::vector<SiteLabel> out;
    const json* v = r.raw(k);
    if (!v) {
        return out;
    }
    if (!v->is_array()) {
        throw ConfigError(r.key(k), "expected a list of sites");
    }
    for (size_t i = 0; i < v->size(); ++i) {
        out.push_back(parse_site((*v)[i], lattice, r.key(k) + "[" + std::to_string(i) + "]"));
    }
    return out;
}

ModelConfig parse_model(const json& j, const std::string& path) {
    Reader r(j, path);
    ModelConfig m;
    const std::string lattice = r.string("lattice", "chain");
    if (lattice == "chain") {
        m.lattice = LatticeKind::chain;
        m.n_sites = r.small_int("n_sites", m.n_sites);
        m.j_par_mhz = r.number("j_par_mhz", m.j_par_mhz);
        m.j_par2_mhz = r.number("j_par2_mhz", m.j_par2_mhz);
        m.delta_mhz = r.number("delta_mhz", m.delta_mhz);
        m.b = r.number("b", m.b);
        m.phi_rad = r.number("phi_rad", m.phi_rad);
    } else if (lattice == "ladder") {
        m.lattice = LatticeKind::ladder;
        m.n_sites = r.small_int("n_rungs", m.n_sites);
        m.j_par_mhz = r.number("j_par_mhz", m.j_par_mhz);
        m.j_par2_mhz = r.number("j_par2_mhz", m.j_par2_mhz);
        m.j_perp_mhz = r.number("j_perp_mhz", m.j_perp_mhz);
        m.j_cross_mhz = r.number("j_cross_mhz", m.j_cross_mhz);
        m.delta_up_mhz = r.number("delta_up_mhz", m.delta_up_mhz);
        m.delta_down_mhz = r.number("delta_down_mhz", m.delta_down_mhz);
        m.b = r.number("b", m.b);
        m.phi_rad = r.number("phi_rad", m.phi_rad);
        if (const json* bonds = r.raw("bond_overrides")) {
            if (!bonds->is_array()) {
                throw ConfigError(r.key("bond_overrides"), "expected a list");
            }
            for (size_t i = 0; i < bonds->size(); ++i) {
                const std::string p = r.key("bond_overrides") + "[" + std::to_string(i) + "]";
                Reader br((*bonds)[i], p);
                const json* a = br.raw("a");
                const json* b = br.raw("b");
                if (!a || !b) {
                    throw ConfigError(p, "needs sites \"a\" and \"b\"");
                }
                BondOverrideConfig bond;
                bond.a = parse_site(*a, m.lattice, p + ".a");
                bond.b = parse_site(*b, m.lattice, p + ".b");
                if (!br.has("value_mhz")) {
                    throw ConfigError(p + ".value_mhz", "missing");
                }
                bond.value_mhz = br.number("value_mhz", 0.0);
                br.finish();
                m.bond_overrides.push_back(bond);
            }
        }
        if (const json* pots = r.raw("potential_overrides")) {
            if (!pots->is_array()) {
                throw ConfigError(r.key("potential_overrides"), "expected a list");
            }
            for (size_t i = 0; i < pots->size(); ++i) {
                const std::string p = r.key("potential_overrides") + "[" + std::to_string(i) + "]";
                Reader pr((*pots)[i], p);
                const json* s = pr.raw("site");
                if (!s) {
                    throw ConfigError(p + ".site", "missing");
                }
                PotentialOverrideConfig pot;
                pot.site = parse_site(*s, m.lattice, p + ".site");
                if (!pr.has("value_mhz")) {
                    throw ConfigError(p + ".value_mhz", "missing");
                }
                pot.value_mhz = pr.number("value_mhz", 0.0);
                pr.finish();
                m.potential_overrides.push_back(pot);
            }
        }
    } else if (lattice == "hofstadter") {
        m.lattice = LatticeKind::hofstadter;
        m.nx = r.small_int("nx", m.nx);
        m.ny = r.small_int("ny", m.ny);
        m.t_x_mhz = r.number("t_x_mhz", m.t_x_mhz);
        m.t_y_mhz = r.number("t_y_mhz", m.t_y_mhz);
        m.b = r.number("b", m.b);
        const std::string boundary = r.string("boundary_y", "periodic");
        if (boundary == "periodic") {
            m.boundary_y = Boundary::periodic;
        } else if (boundary == "open") {
            m.boundary_y = Boundary::open;
        } else {
            throw ConfigError(r.key("boundary_y"), "expected \"open\" or \"periodic\"");
        }
    } else {
        throw ConfigError(r.key("lattice"), "expected \"chain\", \"ladder\" or \"hofstadter\"");
    }
    r.finish();
    return m;
}

json model_json(const ModelConfig& m) {
    json j;
    j["lattice"] = lattice_name(m.lattice);
    switch (m.lattice) {
        case LatticeKind::chain:
            j["n_sites"] = m.n_sites;
            j["j_par_mhz"] = m.j_par_mhz;
            j["j_par2_mhz"] = m.j_par2_mhz;
            j["delta_mhz"] = m.delta_mhz;
            j["b"] = m.b;
            j["phi_rad"] = m.phi_rad;
            break;
        case LatticeKind::ladder: {
            j["n_rungs"] = m.n_sites;
            j["j_par_mhz"] = m.j_par_mhz;
            j["j_par2_mhz"] = m.j_par2_mhz;
            j["j_perp_mhz"] = m.j_perp_mhz;
            j["j_cross_mhz"] = m.j_cross_mhz;
            j["delta_up_mhz"] = m.delta_up_mhz;
            j["delta_down_mhz"] = m.delta_down_mhz;
            j["b"] = m.b;
            j["phi_rad"] = m.phi_rad;
            json bonds = json::array();
            for (const auto& bnd : m.bond_overrides) {
                bonds.push_back({{"a", site_json(bnd.a, m.lattice)},
                                 {"b", site_json(bnd.b, m.lattice)},
                                 {"value_mhz", bnd.value_mhz}});
            }
            json pots = json::array();
            for (const auto& p : m.potential_overrides) {
                pots.push_back({{"site", site_json(p.site, m.lattice)}, {"value_mhz", p.value_mhz}});
            }
            j["bond_overrides"] = bonds;
            j["potential_overrides"] = pots;
            break;
        }
        case LatticeKind::hofstadter:
            j["nx"] = m.nx;
            j["ny"] = m.ny;
            j["t_x_mhz"] = m.t_x_mhz;
            j["t_y_mhz"] = m.t_y_mhz;
            j["b"] = m.b;
            j["boundary_y"] = m.boundary_y == Boundary::periodic ? "periodic" : "open";
            break;
    }
    return j;
}

const json* section(Reader& root, const std::string& name, bool used, Experiment e) {
    const json* s = root.raw(name);
    if (s && !used) {
        throw ConfigError(name, std::string("section is not used by experiment \"") + to_string(e) + "\"");
    }
    return s;
}

}  // namespace

std::string format_site(const SiteLabel& s, LatticeKind lattice) {
    if (lattice == LatticeKind::ladder) {
        return std::to_string(s.index) + (s.leg == 0 ? "up" : "down");
    }
    if (lattice == LatticeKind::hofstadter) {
        return "(" + std::to_string(s.index) + "," + std::to_string(s.leg) + ")";
    }
    return std::to_string(s.index);
}

ChainSpec ModelConfig::chain(double phi) const {
    ChainSpec c;
    c.n_sites = n_sites;
    c.j_par = j_par_mhz;
    c.j_par2 = j_par2_mhz;
    c.delta = delta_mhz;
    c.b = b;
    c.phi = phi;
    return c;
}

LadderSpec ModelConfig::ladder(double phi) const {
    LadderSpec l;
    l.n_rungs = n_sites;
    l.j_par = j_par_mhz;
    l.j_par2 = j_par2_mhz;
    l.j_perp = j_perp_mhz;
    l.j_cross = j_cross_mhz;
    l.delta_up = delta_up_mhz;
    l.delta_down = delta_down_mhz;
    l.b = b;
    l.phi = phi;
    for (const auto& bnd : bond_overrides) {
        l.overrides.bonds.push_back(BondOverride{bnd.a, bnd.b, bnd.value_mhz});
    }
    for (const auto& p : potential_overrides) {
        l.overrides.potentials.push_back(PotentialOverride{p.site, p.value_mhz});
    }
    return l;
}

HofstadterSpec ModelConfig::hofstadter() const {
    HofstadterSpec h;
    h.nx = nx;
    h.ny = ny;
    h.t_x = t_x_mhz;
    h.t_y = t_y_mhz;
    h.b = b;
    h.boundary_y = boundary_y;
    return h;
}

Hamiltonian ModelConfig::build(double phi) const {
    switch (lattice) {
        case LatticeKind::chain: return build_aah_chain(chain(phi));
        case LatticeKind::ladder: return build_ladder(ladder(phi));
        case LatticeKind::hofstadter: return build_hofstadter(hofstadter());
    }
    throw InvalidArgument("unknown lattice");
}

int ModelConfig::dim() const {
    switch (lattice) {
        case LatticeKind::chain: return n_sites;
        case LatticeKind::ladder: return 2 * n_sites;
        case LatticeKind::hofstadter: return nx * ny;
    }
    return 0;
}

ExperimentConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
    }
    Reader r(root, "");
    ExperimentConfig c;
    const json* kind = r.raw("experiment");
    if (!kind) {
        throw ConfigError("experiment", "missing");
    }
    if (!kind->is_string() || !parse_experiment(kind->get<std::string>())) {
        throw ConfigError("experiment",
                          "expected one of band_scan, walk, pump, bilayer_scan, invariants, reduction_check");
    }
    c.experiment = *parse_experiment(kind->get<std::string>());
    c.description = r.string("description", "");
    c.seed = r.unsigned_int("seed", 0);

    const json* cases = r.raw("cases");
    if (!cases) {
        throw ConfigError("cases", "missing");
    }
    if (!cases->is_array() || cases->empty()) {
        throw ConfigError("cases", "expected a non-empty list");
    }
    c.cases.clear();
    for (size_t i = 0; i < cases->size(); ++i) {
        const std::string p = "cases[" + std::to_string(i) + "]";
        Reader cr((*cases)[i], p);
        CaseConfig cc;
        cc.name = cr.string("name", "case" + std::to_string(i + 1));
        const json* model = cr.raw("model");
        if (!model) {
            throw ConfigError(p + ".model", "missing");
        }
        cc.model = parse_model(*model, p + ".model");
        if (cr.has("targets") && !uses_scan(c.experiment)) {
            throw ConfigError(p + ".targets", "only used by spectroscopy experiments");
        }
        cc.targets = parse_sites(cr, "targets", cc.model.lattice);
        if (cr.has("initial_sites") && !uses_walk(c.experiment)) {
            throw ConfigError(p + ".initial_sites", "only used by walk experiments");
        }
        cc.initial_sites = parse_sites(cr, "initial_sites", cc.model.lattice);
        cr.finish();
        c.cases.push_back(std::move(cc));
    }

    if (const json* s = section(r, "scan", uses_scan(c.experiment), c.experiment)) {
        Reader sr(*s, "scan");
        c.scan.phi_points = sr.small_int("phi_points", c.scan.phi_points);
        c.scan.t_max_us = sr.number("t_max_us", c.scan.t_max_us);
        c.scan.dt_us = sr.number("dt_us", c.scan.dt_us);
        c.scan.gamma_per_us = sr.number("gamma_per_us", c.scan.gamma_per_us);
        c.scan.zero_pad = sr.small_int("zero_pad", c.scan.zero_pad);
        c.scan.f_max_mhz = sr.number("f_max_mhz", c.scan.f_max_mhz);
        c.scan.normalize = sr.boolean("normalize", c.scan.normalize);
        c.scan.rel_threshold = sr.number("rel_threshold", c.scan.rel_threshold);
        sr.finish();
    }
    if (const json* s = section(r, "walk", uses_walk(c.experiment), c.experiment)) {
        Reader wr(*s, "walk");
        c.walk.t_max_us = wr.number("t_max_us", c.walk.t_max_us);
        c.walk.dt_us = wr.number("dt_us", c.walk.dt_us);
        c.walk.gamma_per_us = wr.number("gamma_per_us", c.walk.gamma_per_us);
        c.walk.late_time_us = wr.number("late_time_us", c.walk.late_time_us);
        wr.finish();
    }
    if (const json* s = section(r, "pump", uses_pump(c.experiment), c.experiment)) {
        Reader pr(*s, "pump");
        c.pump.phi0_rad = pr.number("phi0_rad", c.pump.phi0_rad);
        c.pump.speed_rad_per_us = pr.number("speed_rad_per_us", c.pump.speed_rad_per_us);
        c.pump.duration_us = pr.number("duration_us", c.pump.duration_us);
        c.pump.dt_us = pr.number("dt_us", c.pump.dt_us);
        c.pump.record_every = pr.small_int("record_every", c.pump.record_every);
        c.pump.center_site = pr.small_int("center_site", c.pump.center_site);
        c.pump.strict_localization = pr.boolean("strict_localization", c.pump.strict_localization);
        const std::string init = pr.string("initial", initial_name(c.pump.initial));
        if (init == "basis_state") {
            c.pump.initial = PumpInitial::basis_state;
        } else if (init == "lowest_band") {
            c.pump.initial = PumpInitial::lowest_band;
        } else {
            throw ConfigError("pump.initial", "expected \"basis_state\" or \"lowest_band\"");
        }
        if (const json* d = pr.raw("directions")) {
            if (!d->is_array() || d->empty()) {
                throw ConfigError("pump.directions", "expected a non-empty list");
            }
            c.pump.directions.clear();
            for (size_t i = 0; i < d->size(); ++i) {
                const json& v = (*d)[i];
                const std::string p = "pump.directions[" + std::to_string(i) + "]";
                if (!v.is_string()) {
                    throw ConfigError(p, "expected \"forward\", \"backward\" or \"none\"");
                }
                const std::string name = v.get<std::string>();
                if (name == "forward") {
                    c.pump.directions.push_back(PumpDirection::forward);
                } else if (name == "backward") {
                    c.pump.directions.push_back(PumpDirection::backward);
                } else if (name == "none") {
                    c.pump.directions.push_back(PumpDirection::none);
                } else {
                    throw ConfigError(p, "expected \"forward\", \"backward\" or \"none\"");
                }
            }
        }
        pr.finish();
    }
    if (const json* s = section(r, "topology", uses_topology(c.experiment), c.experiment)) {
        Reader tr(*s, "topology");
        c.topology.nk = tr.small_int("nk", c.topology.nk);
        c.topology.nphi = tr.small_int("nphi", c.topology.nphi);
        c.topology.parity = tr.boolean("parity", c.topology.parity);
        c.topology.edge_phi_points = tr.small_int("edge_phi_points", c.topology.edge_phi_points);
        tr.finish();
    }
    if (const json* s = section(r, "readout", uses_readout(c.experiment), c.experiment)) {
        Reader rr(*s, "readout");
        c.readout.enabled = rr.boolean("enabled", c.readout.enabled);
        c.readout.shots = rr.integer("shots", c.readout.shots);
        if (const json* f = rr.raw("fidelities")) {
            if (f->is_string()) {
                c.readout.table = f->get<std::string>();
            } else if (f->is_array()) {
                for (size_t i = 0; i < f->size(); ++i) {
                    const json& row = (*f)[i];
                    const std::string p = "readout.fidelities[" + std::to_string(i) + "]";
                    if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
                        throw ConfigError(p, "expected [F0, F1]");
                    }
                    c.readout.fidelities.push_back(SiteFidelity{row[0].get<double>(), row[1].get<double>()});
                }
            } else {
                throw ConfigError("readout.fidelities", "expected a table name or a list of [F0, F1]");
            }
        }
        rr.finish();
    }
    if (const json* s = r.raw("output")) {
        Reader orr(*s, "output");
        c.output.dir = orr.string("dir", c.output.dir);
        c.output.plots = orr.boolean("plots", c.output.plots);
        orr.finish();
    }
    r.finish();
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path, "cannot open config file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

json config_json(const ExperimentConfig& c, bool with_output) {
    json j;
    j["experiment"] = to_string(c.experiment);
    if (!c.description.empty()) {
        j["description"] = c.description;
    }
    j["seed"] = c.seed;
    json cases = json::array();
    for (const auto& cc : c.cases) {
        json cj;
        cj["name"] = cc.name;
        cj["model"] = model_json(cc.model);
        if (uses_scan(c.experiment)) {
            json t = json::array();
            for (const auto& s : cc.targets) {
                t.push_back(site_json(s, cc.model.lattice));
            }
            cj["targets"] = t;
        }
        if (uses_walk(c.experiment)) {
            json t = json::array();
            for (const auto& s : cc.initial_sites) {
                t.push_back(site_json(s, cc.model.lattice));
            }
            cj["initial_sites"] = t;
        }
        cases.push_back(cj);
    }
    j["cases"] = cases;
    if (uses_scan(c.experiment)) {
        j["scan"] = {{"phi_points", c.scan.phi_points},   {"t_max_us", c.scan.t_max_us},
                     {"dt_us", c.scan.dt_us},             {"gamma_per_us", c.scan.gamma_per_us},
                     {"zero_pad", c.scan.zero_pad},       {"f_max_mhz", c.scan.f_max_mhz},
                     {"normalize", c.scan.normalize},     {"rel_threshold", c.scan.rel_threshold}};
    }
    if (uses_walk(c.experiment)) {
        j["walk"] = {{"t_max_us", c.walk.t_max_us},
                     {"dt_us", c.walk.dt_us},
                     {"gamma_per_us", c.walk.gamma_per_us},
                     {"late_time_us", c.walk.late_time_us}};
    }
    if (uses_pump(c.experiment)) {
        json dirs = json::array();
        for (auto d : c.pump.directions) {
            dirs.push_back(to_string(d));
        }
        j["pump"] = {{"phi0_rad", c.pump.phi0_rad},
                     {"speed_rad_per_us", c.pump.speed_rad_per_us},
                     {"duration_us", c.pump.duration_us},
                     {"dt_us", c.pump.dt_us},
                     {"record_every", c.pump.record_every},
                     {"center_site", c.pump.center_site},
                     {"initial", initial_name(c.pump.initial)},
                     {"strict_localization", c.pump.strict_localization},
                     {"directions", dirs}};
    }
    if (uses_topology(c.experiment)) {
        j["topology"] = {{"nk", c.topology.nk},
                         {"nphi", c.topology.nphi},
                         {"parity", c.topology.parity},
                         {"edge_phi_points", c.topology.edge_phi_points}};
    }
    if (uses_readout(c.experiment)) {
        json f;
        if (!c.readout.table.empty()) {
            f = c.readout.table;
        } else {
            f = json::array();
            for (const auto& s : c.readout.fidelities) {
                f.push_back({s.f0, s.f1});
            }
        }
        j["readout"] = {{"enabled", c.readout.enabled}, {"shots", c.readout.shots}, {"fidelities", f}};
    }
    if (with_output) {
        j["output"] = {{"dir", c.output.dir}, {"plots", c.output.plots}};
    }
    return j;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) {
        throw ConfigError(key, what);
    }
}

void check_site(const SiteLabel& s, const ModelConfig& m, const std::string& key) {
    const bool ok = s.index >= 1 && s.index <= m.n_sites && (m.lattice == LatticeKind::ladder ? s.leg <= 1 : s.leg == 0);
    require(ok, key, "site " + format_site(s, m.lattice) + " is outside the lattice");
}

void validate_model(const ModelConfig& m, const std::string& p) {
    if (m.lattice == LatticeKind::hofstadter) {
        require(m.nx >= 1, p + ".nx", "must be >= 1");
        require(m.ny >= 1, p + ".ny", "must be >= 1");
        require(m.nx * m.ny <= 4000, p + ".nx", "lattice larger than 4000 sites");
        return;
    }
    const std::string count = m.lattice == LatticeKind::chain ? ".n_sites" : ".n_rungs";
    require(m.n_sites >= 1, p + count, "must be >= 1");
    require(m.n_sites <= 2000, p + count, "must be <= 2000");
    for (size_t i = 0; i < m.bond_overrides.size(); ++i) {
        const auto& bnd = m.bond_overrides[i];
        const std::string k = p + ".bond_overrides[" + std::to_string(i) + "]";
        check_site(bnd.a, m, k + ".a");
        check_site(bnd.b, m, k + ".b");
        require(!(bnd.a == bnd.b), k, "a bond needs two distinct sites");
    }
    for (size_t i = 0; i < m.potential_overrides.size(); ++i) {
        check_site(m.potential_overrides[i].site, m, p + ".potential_overrides[" + std::to_string(i) + "].site");
    }
}

bool is_third(double b) { return std::abs(std::abs(b) - 1.0 / 3.0) < 1e-12; }

}  // namespace

std::string emit_config(const ExperimentConfig& config) { return config_json(config, true).dump(2) + "\n"; }

void validate(const ExperimentConfig& c) {
    const Experiment e = c.experiment;
    require(!c.cases.empty(), "cases", "expected at least one case");
    std::set<std::string> names;
    for (size_t i = 0; i < c.cases.size(); ++i) {
        const auto& cc = c.cases[i];
        const std::string p = "cases[" + std::to_string(i) + "]";
        require(!cc.name.empty(), p + ".name", "must not be empty");
        for (char ch : cc.name) {
            require(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-', p + ".name",
                    "use letters, digits, '_' or '-' only");
        }
        require(names.insert(cc.name).second, p + ".name", "duplicate case name \"" + cc.name + "\"");
        validate_model(cc.model, p + ".model");
        const auto lattice = cc.model.lattice;
        if (e == Experiment::reduction_check) {
            require(lattice == LatticeKind::hofstadter, p + ".model.lattice", "reduction_check needs a hofstadter lattice");
            require(cc.model.boundary_y == Boundary::periodic, p + ".model.boundary_y",
                    "reduction_check needs a periodic y boundary");
        } else {
            require(lattice != LatticeKind::hofstadter, p + ".model.lattice",
                    std::string(to_string(e)) + " needs a chain or ladder");
        }
        if (e == Experiment::pump) {
            require(lattice == LatticeKind::chain, p + ".model.lattice", "pump needs a chain");
            require(cc.model.n_sites >= 3, p + ".model.n_sites", "pump needs at least one 3-site unit cell");
            require(c.pump.center_site >= 1 && c.pump.center_site <= cc.model.n_sites, "pump.center_site",
                    "outside the chain");
        }
        if (e == Experiment::bilayer_scan) {
            require(lattice == LatticeKind::ladder, p + ".model.lattice", "bilayer_scan needs a ladder");
        }
        if (uses_topology(e)) {
            require(is_third(cc.model.b), p + ".model.b", "Bloch models are defined for b = +-1/3 only");
            if (c.topology.parity) {
                require(lattice == LatticeKind::ladder, "topology.parity", "parity invariant needs a ladder");
                require(cc.model.delta_up_mhz == cc.model.delta_down_mhz, "topology.parity",
                        "parity invariant needs delta_up_mhz == delta_down_mhz (case \"" + cc.name + "\")");
            }
            require(cc.model.bond_overrides.empty() && cc.model.potential_overrides.empty(),
                    p + ".model", "Bloch models do not support per-site overrides");
        }
        for (size_t t = 0; t < cc.targets.size(); ++t) {
            check_site(cc.targets[t], cc.model, p + ".targets[" + std::to_string(t) + "]");
        }
        for (size_t t = 0; t < cc.initial_sites.size(); ++t) {
            check_site(cc.initial_sites[t], cc.model, p + ".initial_sites[" + std::to_string(t) + "]");
        }
        if (uses_readout(e) && c.readout.enabled) {
            const auto fid = resolve_fidelities(c.readout);
            require(static_cast<int>(fid.sites.size()) == cc.model.dim(), "readout.fidelities",
                    "table has " + std::to_string(fid.sites.size()) + " entries, case \"" + cc.name + "\" has " +
                        std::to_string(cc.model.dim()) + " qubits");
        }
    }
    if (uses_scan(e)) {
        const auto& s = c.scan;
        require(s.phi_points >= 1 && s.phi_points <= 10000, "scan.phi_points", "must be in [1, 10000]");
        require(s.dt_us > 0.0, "scan.dt_us", "must be > 0");
        require(s.t_max_us >= 2.0 * s.dt_us, "scan.t_max_us", "window must hold at least two samples");
        require(s.t_max_us / s.dt_us <= 1e6, "scan.t_max_us", "more than 1e6 samples");
        require(s.gamma_per_us >= 0.0, "scan.gamma_per_us", "must be >= 0");
        require(s.zero_pad >= 1 && s.zero_pad <= 64, "scan.zero_pad", "must be in [1, 64]");
        require(s.f_max_mhz > 0.0, "scan.f_max_mhz", "must be > 0");
        require(s.f_max_mhz <= 0.5 / s.dt_us + 1e-9, "scan.f_max_mhz", "exceeds the Nyquist frequency 1/(2 dt_us)");
        require(s.rel_threshold > 0.0 && s.rel_threshold < 1.0, "scan.rel_threshold", "must be in (0, 1)");
    }
    if (uses_walk(e)) {
        const auto& w = c.walk;
        require(w.dt_us > 0.0, "walk.dt_us", "must be > 0");
        require(w.t_max_us >= w.dt_us, "walk.t_max_us", "must be >= dt_us");
        require(w.t_max_us / w.dt_us <= 1e6, "walk.t_max_us", "more than 1e6 samples");
        require(w.gamma_per_us >= 0.0, "walk.gamma_per_us", "must be >= 0");
        require(w.late_time_us >= 0.0 && w.late_time_us < w.t_max_us, "walk.late_time_us", "must lie in [0, t_max_us)");
    }
    if (uses_pump(e)) {
        const auto& p = c.pump;
        require(p.duration_us > 0.0, "pump.duration_us", "must be > 0");
        require(p.dt_us > 0.0, "pump.dt_us", "must be > 0");
        require(p.dt_us <= p.duration_us / 100.0, "pump.dt_us", "must not exceed duration_us / 100");
        require(p.duration_us / p.dt_us <= 1e7, "pump.dt_us", "more than 1e7 steps");
        require(p.record_every >= 1, "pump.record_every", "must be >= 1");
        require(p.speed_rad_per_us >= 0.0, "pump.speed_rad_per_us", "is a magnitude; the sign comes from directions");
    }
    if (uses_topology(e)) {
        require(c.topology.nk >= 3 && c.topology.nk <= 1000, "topology.nk", "must be in [3, 1000]");
        require(c.topology.nphi >= 3 && c.topology.nphi <= 1000, "topology.nphi", "must be in [3, 1000]");
        require(c.topology.edge_phi_points == 0 ||
                    (c.topology.edge_phi_points >= 8 && c.topology.edge_phi_points <= 100000),
                "topology.edge_phi_points", "must be 0 (off) or in [8, 100000]");
    }
    if (uses_readout(e) && c.readout.enabled) {
        require(c.readout.shots >= 1 && c.readout.shots <= 100000000, "readout.shots", "must be in [1, 1e8]");
        try {
            validate(resolve_fidelities(c.readout), true);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& err) {
            throw ConfigError("readout.fidelities", err.what());
        }
    }
    require(!c.output.dir.empty(), "output.dir", "must not be empty");
}

ReadoutFidelities resolve_fidelities(const ReadoutConfig& readout) {
    if (readout.table.empty()) {
        return ReadoutFidelities{readout.fidelities};
    }
    const auto text = data_file(readout.table);
    if (!text) {
        throw ConfigError("readout.fidelities", "no fidelity table named \"" + readout.table + "\"");
    }
    // Rows "leg,site,f0,f1", stored in basis order: up leg first, then down.
    std::vector<std::tuple<int, int, SiteFidelity>> rows;
    std::istringstream in{std::string(*text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("leg,", 0) == 0) {
            continue;
        }
        std::istringstream row(line);
        std::string leg, site, f0, f1;
        std::getline(row, leg, ',');
        std::getline(row, site, ',');
        std::getline(row, f0, ',');
        std::getline(row, f1, ',');
        try {
            rows.emplace_back(leg == "down" ? 1 : 0, std::stoi(site), SiteFidelity{std::stod(f0), std::stod(f1)});
        } catch (const std::exception&) {
            throw ConfigError("readout.fidelities", "malformed row \"" + line + "\" in table " + readout.table);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    ReadoutFidelities fid;
    for (const auto& r : rows) {
        fid.sites.push_back(std::get<2>(r));
    }
    return fid;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a(config_json(config, false).dump()); }

std::string hex_hash(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace qhall::app
