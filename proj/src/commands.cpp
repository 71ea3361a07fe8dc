#include "qpspec/commands.hpp"

#include "qpspec/error.hpp"
#include "qpspec/gordon.hpp"
#include "qpspec/spectral.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qpspec {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void note(const CommandContext& ctx, const std::string& msg) {
    if (ctx.log) {
        ctx.log(msg);
    }
}

fs::path prepare_dir(const std::string& dir) {
    const fs::path p(dir);
    std::error_code ec;
    if (fs::exists(p, ec) && !fs::is_directory(p, ec)) {
        throw Error(ErrorKind::Io, "output path '" + dir + "' exists and is not a directory");
    }
    fs::create_directories(p, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
    }
    return p;
}

std::string write_file(const fs::path& dir, const std::string& name, const std::string& body) {
    const fs::path path = dir / name;
    std::error_code ec;
    if (fs::is_directory(path, ec)) {
        throw Error(ErrorKind::Io, "output file '" + path.string() + "' is a directory");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    out.close();
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    }
    return path.string();
}

// JSON numbers: non-finite values become strings so they survive the format.
ordered_json num(double x) {
    if (std::isfinite(x)) {
        return x;
    }
    return format_number(x);
}

ordered_json levels_json(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) {
        a.push_back(num(x));
    }
    return a;
}

ordered_json index_json(const IndexValue& idx) {
    ordered_json j;
    j["value"] = num(idx.value);
    j["terms_used"] = idx.terms_used;
    j["tail_start"] = idx.tail_start;
    j["per_level"] = levels_json(idx.per_level);
    j["resolution_limited"] = idx.resolution_limited;
    if (idx.resonance) {
        j["resonance"] = *idx.resonance;
    }
    return j;
}

ordered_json alpha_json(const ContinuedFraction& cf) {
    ordered_json j;
    j["depth"] = cf.depth();
    j["precision_bits"] = cf.precision();
    ordered_json coeffs = ordered_json::array();
    for (const mpz_class& a : cf.coefficients()) {
        coeffs.push_back(a.get_str());
    }
    j["coefficients"] = coeffs;
    j["value"] = cf.value().str(20);
    return j;
}

struct Setup {
    MeromorphicPotential pot;
    TorusPoint theta;
    ContinuedFraction cf;
};

Setup setup(const RunConfig& config, const CommandContext& ctx) {
    MeromorphicPotential pot = build_potential(config.model);
    TorusPoint theta = build_theta(config);
    ContinuedFraction cf = build_alpha(config, pot, theta);
    note(ctx, "model " + pot.label + ", alpha depth " + std::to_string(cf.depth()) + " at " +
                  std::to_string(cf.precision()) + " bits, theta " + theta.str());
    return {std::move(pot), std::move(theta), std::move(cf)};
}

LyapunovOptions lyapunov_options(const RunConfig& config, unsigned threads) {
    LyapunovOptions o;
    o.n = config.lyapunov_n;
    o.grid = config.lyapunov_grid;
    o.kind = config.lyapunov_kind;
    o.method = config.lyapunov_method;
    o.threads = threads;
    return o;
}

IndexValue delta_of(const RunConfig& config, const Setup& s) {
    DeltaOptions d;
    d.horizon = config.delta_horizon;
    return delta_index(s.cf, s.theta, s.pot.poles, d);
}

}  // namespace

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::InvalidInput:
        case ErrorKind::DegenerateModel:
            return 2;
        case ErrorKind::Io:
            return 3;
        case ErrorKind::Range:
        case ErrorKind::Budget:
        case ErrorKind::Subsequence:
            return 4;
        default:
            return 5;
    }
}

std::vector<std::string> cmd_indices(const RunConfig& config, const CommandContext& ctx) {
    const fs::path dir = prepare_dir(ctx.out_dir);
    const Setup s = setup(config, ctx);
    const IndexValue b = beta(s.cf);
    GammaOptions go;
    go.n_max = config.gamma_n_max;
    const IndexValue g = gamma(s.cf, s.theta, go);
    const IndexValue d = delta_of(config, s);
    note(ctx, "beta " + format_number(b.value) + ", gamma " + format_number(g.value) + ", delta " +
                  format_number(d.value));

    ordered_json j;
    j["model"] = s.pot.label;
    j["theta"] = s.theta.str();
    j["epsilon"] = config.epsilon;
    j["alpha"] = alpha_json(s.cf);
    j["beta"] = index_json(b);
    j["gamma"] = index_json(g);
    j["delta"] = index_json(d);
    j["qualifying_levels"] = qualifying_levels(d, config.epsilon);

    std::ostringstream csv;
    csv << "level,q,beta,delta\n";
    for (std::size_t n = 0; n < b.per_level.size(); ++n) {
        csv << n << ',' << s.cf.q(n).get_str() << ',' << format_number(b.per_level[n]) << ','
            << format_number(n < d.per_level.size() ? d.per_level[n] : std::nan("")) << '\n';
    }
    std::ostringstream gcsv;
    gcsv << "n,gamma\n";
    for (std::size_t k = 0; k < g.per_level.size(); ++k) {
        gcsv << k + 1 << ',' << format_number(g.per_level[k]) << '\n';
    }
    return {write_file(dir, "indices.json", j.dump(2) + "\n"), write_file(dir, "indices.csv", csv.str()),
            write_file(dir, "gamma.csv", gcsv.str())};
}

std::vector<std::string> cmd_lyapunov(const RunConfig& config, const CommandContext& ctx) {
    const fs::path dir = prepare_dir(ctx.out_dir);
    const Setup s = setup(config, ctx);
    const std::vector<double> energies = build_energies(config, s.pot, s.theta, s.cf);
    note(ctx, "scanning " + std::to_string(energies.size()) + " energies at n = " + std::to_string(config.lyapunov_n));
    const std::vector<ScanEntry> scan = lyapunov_scan(s.pot, s.cf, energies, lyapunov_options(config, ctx.threads));

    std::ostringstream csv;
    csv << "E,L,phase_average,single_orbit,discrepancy,n,kind,shifted_phases,error\n";
    for (const ScanEntry& e : scan) {
        csv << format_number(e.E) << ',';
        if (e.estimate) {
            const LyapunovEstimate& l = *e.estimate;
            csv << format_number(l.value) << ',' << format_number(l.phase_average) << ','
                << format_number(l.single_orbit) << ',' << format_number(l.discrepancy) << ',' << l.n << ','
                << to_string(l.kind) << ',' << l.shifted_phases << ",\n";
        } else {
            std::string err = e.error;
            std::replace(err.begin(), err.end(), ',', ';');
            csv << "nan,nan,nan,nan," << config.lyapunov_n << ',' << to_string(config.lyapunov_kind) << ",0," << err
                << '\n';
        }
    }
    return {write_file(dir, "lyapunov.csv", csv.str())};
}

std::vector<std::string> cmd_gordon(const RunConfig& config, const CommandContext& ctx) {
    const fs::path dir = prepare_dir(ctx.out_dir);
    const Setup s = setup(config, ctx);
    const std::vector<double> energies = build_energies(config, s.pot, s.theta, s.cf);
    const IndexValue d = delta_of(config, s);

    std::vector<std::size_t> levels = config.gordon.levels;
    if (levels.empty()) {
        for (std::size_t n : qualifying_levels(d, config.epsilon)) {
            if (s.cf.q(n) <= static_cast<unsigned long>(config.gordon.budget)) {
                levels.push_back(n);
            }
        }
        if (levels.empty()) {
            throw Error(ErrorKind::Range, "no qualifying level has q_n within gordon.budget = " +
                                              std::to_string(config.gordon.budget));
        }
    }
    for (std::size_t n : levels) {
        require_window(s.cf, n, config.gordon.budget);
    }

    ExclusionOptions opts;
    opts.directions = config.gordon.directions;
    opts.prec = config.gordon.precision;
    opts.threads = ctx.threads;
    opts.budget = config.gordon.budget;

    ordered_json j;
    j["model"] = s.pot.label;
    j["theta"] = s.theta.str();
    j["alpha"] = alpha_json(s.cf);
    j["rate"] = config.gordon.rate;
    j["epsilon"] = config.epsilon;
    j["delta"] = index_json(d);
    j["levels"] = levels;
    ordered_json results = ordered_json::array();
    for (double E : energies) {
        note(ctx, "certifying E = " + format_number(E));
        const LyapunovEstimate L = lyapunov(s.pot, E, s.cf, lyapunov_options(config, ctx.threads));
        const ExclusionReport report =
            exclusion_certificate(s.pot, E, s.theta, s.cf, levels, config.gordon.rate, opts);
        ordered_json r;
        r["E"] = E;
        r["L"] = num(L.value);
        r["verdict"] = to_string(report.verdict);
        ordered_json certs = ordered_json::array();
        for (const GordonCertificate& c : report.levels) {
            ordered_json cj;
            cj["E"] = c.E;
            cj["level"] = c.level;
            cj["q"] = c.q.get_str();
            cj["lhs_square"] = num(c.lhs_square);
            cj["lhs_inverse"] = num(c.lhs_inverse);
            cj["log_lhs_square"] = num(c.log_lhs_square);
            cj["log_lhs_inverse"] = num(c.log_lhs_inverse);
            cj["trace"] = num(c.trace);
            cj["max_norm"] = num(c.max_norm);
            cj["empirical_rate"] = num(c.empirical_rate);
            cj["precision_bits"] = c.precision;
            cj["noise_limited"] = c.noise_limited;
            std::size_t excluded = 0;
            for (const DirectionResult& dr : c.directions) {
                excluded += dr.verdict == Verdict::Excluded ? 1 : 0;
            }
            cj["directions"] = c.directions.size();
            cj["directions_excluded"] = excluded;
            cj["verdict"] = to_string(c.verdict);

            const bool qualifies = c.level < d.per_level.size() && d.per_level[c.level] > d.value - config.epsilon / 4;
            if (qualifies) {
                const LemmaReport lemma =
                    lemma_A_check(s.pot, E, s.theta, s.cf, d, c.level, config.epsilon, L.value, config.gordon.precision);
                ordered_json lj;
                lj["log_square"] = num(lemma.log_square);
                lj["log_inverse"] = num(lemma.log_inverse);
                lj["log_bound"] = num(lemma.log_bound);
                lj["vacuous"] = lemma.vacuous;
                lj["noise_limited"] = lemma.noise_limited;
                lj["holds"] = lemma.holds();
                cj["lemma"] = lj;
            } else {
                cj["lemma"] = nullptr;
            }
            certs.push_back(cj);
        }
        r["certificates"] = certs;
        results.push_back(r);
    }
    j["results"] = results;
    return {write_file(dir, "gordon.json", j.dump(2) + "\n")};
}

std::vector<std::string> cmd_classify(const RunConfig& config, const CommandContext& ctx) {
    const fs::path dir = prepare_dir(ctx.out_dir);
    const Setup s = setup(config, ctx);
    const std::vector<double> energies = build_energies(config, s.pot, s.theta, s.cf);
    const IndexValue d = delta_of(config, s);
    note(ctx, "classifying " + std::to_string(energies.size()) + " energies against delta " + format_number(d.value));
    const RegimeClassification c =
        classify_regime(s.pot, s.cf, energies, d, lyapunov_options(config, ctx.threads));

    std::ostringstream csv;
    csv << "E,L,discrepancy,uncertainty,label,margin\n";
    std::size_t counts[3] = {0, 0, 0};
    for (std::size_t i = 0; i < c.energies.size(); ++i) {
        const double margin = std::max(c.delta_lower - (c.L_values[i] + c.uncertainty[i]),
                                       (c.L_values[i] - c.uncertainty[i]) - c.delta_upper);
        csv << format_number(c.energies[i]) << ',' << format_number(c.L_values[i]) << ','
            << format_number(c.discrepancy[i]) << ',' << format_number(c.uncertainty[i]) << ','
            << to_string(c.labels[i]) << ',' << format_number(std::isnan(margin) ? -INFINITY : margin) << '\n';
        ++counts[static_cast<int>(c.labels[i])];
    }

    ordered_json j;
    j["model"] = s.pot.label;
    j["theta"] = s.theta.str();
    j["alpha"] = alpha_json(s.cf);
    j["delta"] = index_json(d);
    j["delta_lower"] = num(c.delta_lower);
    j["delta_upper"] = num(c.delta_upper);
    j["energies"] = c.energies.size();
    j["sc_candidate"] = counts[static_cast<int>(RegimeLabel::ScCandidate)];
    j["above_delta"] = counts[static_cast<int>(RegimeLabel::AboveDelta)];
    j["uncertain"] = counts[static_cast<int>(RegimeLabel::Uncertain)];
    j["uncertain_fraction"] = c.uncertain_fraction;
    ordered_json errors = ordered_json::array();
    for (std::size_t i = 0; i < c.errors.size(); ++i) {
        if (!c.errors[i].empty()) {
            errors.push_back({{"E", c.energies[i]}, {"error", c.errors[i]}});
        }
    }
    j["errors"] = errors;
    return {write_file(dir, "classify.csv", csv.str()), write_file(dir, "classify.json", j.dump(2) + "\n")};
}

std::vector<std::string> cmd_cf(const RunConfig& config, const CommandContext& ctx) {
    const fs::path dir = prepare_dir(ctx.out_dir);
    const Setup s = setup(config, ctx);
    std::ostringstream text;
    write_cf_text(text, s.cf);
    std::ostringstream csv;
    csv << "n,a,p,q\n";
    for (std::size_t n = 0; n <= s.cf.depth(); ++n) {
        csv << n << ',' << (n == 0 ? std::string("0") : s.cf.coefficients()[n - 1].get_str()) << ','
            << s.cf.p(n).get_str() << ',' << s.cf.q(n).get_str() << '\n';
    }
    return {write_file(dir, "cf.txt", text.str()), write_file(dir, "convergents.csv", csv.str())};
}

}  // namespace qpspec
