#include "qpspec/config.hpp"

#include "qpspec/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace qpspec {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"model", {"kind", "lambda", "value", "g", "coupling", "poles", "sign"}},
        {"alpha",
         {"kind", "terms", "coefficients", "value", "precision", "path", "target", "spikes", "gap", "lead", "filler",
          "track_realized", "max_bits"}},
        {"run", {"theta", "epsilon", "seed"}},
        {"energies", {"kind", "values", "min", "max", "count", "N", "boundary", "policy", "v_cap"}},
        {"lyapunov", {"n", "grid", "kind", "method"}},
        {"indices", {"gamma_n_max", "delta_horizon"}},
        {"gordon", {"rate", "directions", "budget", "precision", "levels"}},
        {"output", {"dir"}},
    };
    return keys;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
    throw Error(ErrorKind::Config, key + ": " + why);
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        auto s = tree_.get_child_optional(section);
        if (!s) {
            return std::nullopt;
        }
        auto v = s->get_optional<std::string>(key);
        if (!v) {
            return std::nullopt;
        }
        return trim(*v);
    }

    void text(const std::string& section, const std::string& key, std::string& out) const {
        if (auto v = raw(section, key)) {
            out = *v;
        }
    }

    void real(const std::string& section, const std::string& key, double& out) const {
        if (auto v = raw(section, key)) {
            out = to_double(section + "." + key, *v);
        }
    }

    template <class Int>
    void integer(const std::string& section, const std::string& key, Int& out, long long min_value) const {
        if (auto v = raw(section, key)) {
            const std::string name = section + "." + key;
            long long parsed = 0;
            std::size_t used = 0;
            try {
                parsed = std::stoll(*v, &used);
            } catch (const std::exception&) {
                bad(name, "expected an integer, got '" + *v + "'");
            }
            if (used != v->size()) {
                bad(name, "expected an integer, got '" + *v + "'");
            }
            if (parsed < min_value) {
                bad(name, "must be >= " + std::to_string(min_value));
            }
            out = static_cast<Int>(parsed);
        }
    }

    void boolean(const std::string& section, const std::string& key, bool& out) const {
        if (auto v = raw(section, key)) {
            if (*v == "true" || *v == "1" || *v == "yes") {
                out = true;
            } else if (*v == "false" || *v == "0" || *v == "no") {
                out = false;
            } else {
                bad(section + "." + key, "expected true or false, got '" + *v + "'");
            }
        }
    }

    static double to_double(const std::string& name, const std::string& v) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            bad(name, "expected a number, got '" + v + "'");
        }
        if (used != v.size() || !std::isfinite(x)) {
            bad(name, "expected a finite number, got '" + v + "'");
        }
        return x;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) {
            return "";
        }
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

private:
    const pt::ptree& tree_;
};

std::vector<std::string> split(const std::string& text) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

void require_positive(const std::string& name, double v) {
    if (!(v > 0.0)) {
        bad(name, "must be positive");
    }
}

void require_one_of(const std::string& name, const std::string& v, std::initializer_list<const char*> allowed) {
    std::string list;
    for (const char* a : allowed) {
        if (v == a) {
            return;
        }
        list += (list.empty() ? "" : ", ") + std::string(a);
    }
    bad(name, "'" + v + "' is not one of " + list);
}

}  // namespace

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::Config, std::string("malformed config: ") + e.message() + " at line " +
                                           std::to_string(e.line()));
    }
    for (const auto& [section, body] : tree) {
        auto s = schema().find(section);
        if (s == schema().end()) {
            bad(section, "unknown section");
        }
        if (!body.data().empty()) {
            bad(section, "top-level keys are not allowed; put them in a section");
        }
        for (const auto& [key, value] : body) {
            if (!s->second.count(key)) {
                bad(section + "." + key, "unknown key");
            }
        }
    }

    const Reader r(tree);
    RunConfig c;

    ModelConfig& m = c.model;
    r.text("model", "kind", m.kind);
    require_one_of("model.kind", m.kind, {"amo", "maryland", "constant", "custom"});
    r.real("model", "lambda", m.lambda);
    r.real("model", "value", m.value);
    r.text("model", "g", m.g);
    r.real("model", "coupling", m.coupling);
    r.text("model", "poles", m.poles);
    r.integer("model", "sign", m.sign, -1);
    if (m.sign != 1 && m.sign != -1) {
        bad("model.sign", "must be 1 or -1");
    }
    if (m.kind == "custom") {
        const auto names = g_registry_names();
        if (std::find(names.begin(), names.end(), m.g) == names.end()) {
            bad("model.g", "unknown g '" + m.g + "'");
        }
        try {
            parse_poles(m.poles);
        } catch (const Error& e) {
            bad("model.poles", e.what());
        }
    }

    AlphaConfig& a = c.alpha;
    r.text("alpha", "kind", a.kind);
    require_one_of("alpha.kind", a.kind,
                   {"golden", "silver", "coefficients", "decimal", "liouville", "compensated", "file"});
    r.integer("alpha", "terms", a.terms, 2);
    r.text("alpha", "coefficients", a.coefficients);
    r.text("alpha", "value", a.value);
    r.integer("alpha", "precision", a.precision, 0);
    r.text("alpha", "path", a.path);
    r.real("alpha", "target", a.spikes.target);
    r.integer("alpha", "spikes", a.spikes.spikes, 1);
    r.integer("alpha", "gap", a.spikes.gap, 0);
    r.integer("alpha", "lead", a.spikes.lead, 0);
    r.integer("alpha", "filler", a.spikes.filler, 1);
    r.boolean("alpha", "track_realized", a.spikes.track_realized);
    r.integer("alpha", "max_bits", a.spikes.max_bits, 64);
    if (a.kind == "coefficients" && split(a.coefficients).size() < 2) {
        bad("alpha.coefficients", "needs at least two positive integers");
    }
    if (a.kind == "decimal") {
        if (a.value.empty()) {
            bad("alpha.value", "required for a decimal alpha");
        }
        if (a.precision < 64) {
            bad("alpha.precision", "a decimal alpha needs an explicit precision of at least 64 bits");
        }
    }
    if (a.kind == "file" && a.path.empty()) {
        bad("alpha.path", "required for kind = file");
    }
    if (a.kind == "liouville" || a.kind == "compensated") {
        require_positive("alpha.target", a.spikes.target);
    }

    r.text("run", "theta", c.theta);
    r.real("run", "epsilon", c.epsilon);
    require_positive("run.epsilon", c.epsilon);
    r.integer("run", "seed", c.seed, 0);
    try {
        TorusPoint::parse(c.theta);
    } catch (const Error& e) {
        bad("run.theta", e.what());
    }

    EnergyConfig& e = c.energies;
    r.text("energies", "kind", e.kind);
    require_one_of("energies.kind", e.kind, {"list", "uniform", "random", "spectrum"});
    if (auto v = r.raw("energies", "values")) {
        e.values.clear();
        for (const std::string& w : split(*v)) {
            e.values.push_back(Reader::to_double("energies.values", w));
        }
    }
    r.real("energies", "min", e.min);
    r.real("energies", "max", e.max);
    r.integer("energies", "count", e.count, 1);
    r.integer("energies", "N", e.N, 2);
    std::string boundary = to_string(e.spectrum.boundary);
    r.text("energies", "boundary", boundary);
    require_one_of("energies.boundary", boundary, {"dirichlet", "neumann"});
    e.spectrum.boundary = boundary == "dirichlet" ? Boundary::Dirichlet : Boundary::Neumann;
    std::string policy = to_string(e.spectrum.policy);
    r.text("energies", "policy", policy);
    require_one_of("energies.policy", policy, {"cap", "strict"});
    e.spectrum.policy = policy == "cap" ? PolePolicy::Cap : PolePolicy::Strict;
    r.real("energies", "v_cap", e.spectrum.v_cap);
    require_positive("energies.v_cap", e.spectrum.v_cap);
    if ((e.kind == "uniform" || e.kind == "random") && !(e.min <= e.max)) {
        bad("energies.max", "must be >= energies.min");
    }

    r.integer("lyapunov", "n", c.lyapunov_n, 1);
    r.integer("lyapunov", "grid", c.lyapunov_grid, 1);
    std::string kind = to_string(c.lyapunov_kind);
    r.text("lyapunov", "kind", kind);
    require_one_of("lyapunov.kind", kind, {"A", "D"});
    c.lyapunov_kind = kind == "A" ? CocycleKind::A : CocycleKind::D;
    std::string method = to_string(c.lyapunov_method);
    r.text("lyapunov", "method", method);
    require_one_of("lyapunov.method", method, {"phase-average", "single-orbit"});
    c.lyapunov_method = method == "phase-average" ? LyapunovMethod::PhaseAverage : LyapunovMethod::SingleOrbit;

    r.integer("indices", "gamma_n_max", c.gamma_n_max, 1);
    r.integer("indices", "delta_horizon", c.delta_horizon, 1);

    GordonConfig& g = c.gordon;
    r.real("gordon", "rate", g.rate);
    require_positive("gordon.rate", g.rate);
    r.integer("gordon", "directions", g.directions, 1);
    r.integer("gordon", "budget", g.budget, 1);
    r.integer("gordon", "precision", g.precision, 0);
    if (auto v = r.raw("gordon", "levels"); v && *v != "qualifying") {
        for (const std::string& w : split(*v)) {
            std::size_t level = 0;
            try {
                std::size_t used = 0;
                const long long parsed = std::stoll(w, &used);
                if (used != w.size() || parsed < 0) {
                    throw std::invalid_argument(w);
                }
                level = static_cast<std::size_t>(parsed);
            } catch (const std::exception&) {
                bad("gordon.levels", "expected non-negative integers or 'qualifying', got '" + w + "'");
            }
            g.levels.push_back(level);
        }
    }

    r.text("output", "dir", c.out);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot read config file '" + path + "'");
    }
    return parse_config(in);
}

std::vector<Pole> parse_poles(const std::string& text) {
    std::vector<Pole> out;
    for (const std::string& w : split(text)) {
        const auto colon = w.find(':');
        Pole p;
        p.location = TorusPoint::parse(w.substr(0, colon));
        if (colon != std::string::npos) {
            const std::string mult = w.substr(colon + 1);
            if (mult.empty() || mult.find_first_not_of("0123456789") != std::string::npos || std::stoi(mult) < 1) {
                throw Error(ErrorKind::InvalidInput, "bad multiplicity in '" + w + "'");
            }
            p.multiplicity = std::stoi(mult);
        }
        out.push_back(p);
    }
    return out;
}

MeromorphicPotential build_potential(const ModelConfig& model) {
    if (model.kind == "amo") {
        return make_amo(model.lambda);
    }
    if (model.kind == "maryland") {
        return make_maryland(model.lambda);
    }
    if (model.kind == "constant") {
        return make_constant(model.value);
    }
    MeromorphicPotential pot = make_custom(parse_poles(model.poles), named_g(model.g, model.coupling));
    pot.sign = model.sign;
    return pot;
}

TorusPoint build_theta(const RunConfig& config) {
    return TorusPoint::parse(config.theta);
}

ContinuedFraction build_alpha(const RunConfig& config, const MeromorphicPotential& pot, const TorusPoint& theta) {
    const AlphaConfig& a = config.alpha;
    if (a.kind == "golden") {
        return cf_from_coeffs(golden_coefficients(a.terms));
    }
    if (a.kind == "silver") {
        return cf_from_coeffs(silver_coefficients(a.terms));
    }
    if (a.kind == "coefficients") {
        std::vector<mpz_class> coeffs;
        for (const std::string& w : split(a.coefficients)) {
            mpz_class v;
            if (v.set_str(w, 10) != 0 || v < 1) {
                bad("alpha.coefficients", "'" + w + "' is not a positive integer");
            }
            coeffs.push_back(v);
        }
        return cf_from_coeffs(std::move(coeffs));
    }
    if (a.kind == "decimal") {
        Real value(a.precision);
        try {
            value = Real::parse(a.value, a.precision);
        } catch (const Error& e) {
            bad("alpha.value", e.what());
        }
        if (!(value > Real(0L, a.precision)) || !(value < Real(1L, a.precision))) {
            bad("alpha.value", "must lie in (0, 1)");
        }
        CfExpansion x = cf_from_real(value, a.terms);
        if (x.cf.depth() < 2) {
            throw Error(ErrorKind::PrecisionExhausted, "alpha.value certifies fewer than two coefficients at " +
                                                           std::to_string(a.precision) + " bits");
        }
        return x.cf;
    }
    if (a.kind == "liouville") {
        return cf_from_coeffs(liouville_coefficients(a.spikes));
    }
    if (a.kind == "compensated") {
        return cf_from_coeffs(phase_compensated_coefficients(a.spikes, theta, pot.poles));
    }
    std::ifstream in(a.path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot read coefficient file '" + a.path + "'");
    }
    return cf_from_coeffs(read_cf_text(in));
}

std::vector<double> build_energies(const RunConfig& config, const MeromorphicPotential& pot, const TorusPoint& theta,
                                   const ContinuedFraction& cf) {
    const EnergyConfig& e = config.energies;
    std::vector<double> out;
    if (e.kind == "list") {
        out = e.values;
    } else if (e.kind == "uniform") {
        for (std::size_t i = 0; i < e.count; ++i) {
            const double t = e.count == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(e.count - 1);
            out.push_back(e.min + t * (e.max - e.min));
        }
    } else if (e.kind == "random") {
        std::mt19937_64 rng(config.seed);
        for (std::size_t i = 0; i < e.count; ++i) {
            // 53 random bits mapped to [0, 1); std distributions differ between libraries
            const double t = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            out.push_back(e.min + t * (e.max - e.min));
        }
    } else {
        const TruncatedSpectrum s = truncated_spectrum(pot, theta, cf, e.N, e.spectrum);
        std::vector<double> usable;
        for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
            if (!s.pole_influenced[k]) {
                usable.push_back(s.eigenvalues[k]);
            }
        }
        const std::size_t count = std::min(e.count, usable.size());
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t k = count == 1 ? usable.size() / 2 : i * (usable.size() - 1) / (count - 1);
            out.push_back(usable[k]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace qpspec
