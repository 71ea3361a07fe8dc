#include "qpspec/arithmetic.hpp"
#include "qpspec/cocycle.hpp"
#include "qpspec/error.hpp"
#include "qpspec/gordon.hpp"
#include "qpspec/potential.hpp"
#include "qpspec/spectral.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace qpspec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ||x|| for rational x
mpq_class torus_dist(const mpq_class& x) {
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    mpq_class frac = x - fl;
    mpq_class other = 1 - frac;
    return frac < other ? frac : other;
}

std::vector<mpz_class> with_tail(std::vector<mpz_class> coeffs, std::size_t extra) {
    for (std::size_t i = 0; i < extra; ++i) {
        coeffs.emplace_back(static_cast<long>(1 + i % 3));
    }
    return coeffs;
}

Outcome criterion1() {
    std::vector<std::pair<std::string, ContinuedFraction>> cfs;
    cfs.emplace_back("golden", cf_from_coeffs(golden_coefficients(40)));
    cfs.emplace_back("silver", cf_from_coeffs(silver_coefficients(40)));
    for (const auto& [target, lead] : {std::pair{1.0, std::size_t{20}}, std::pair{0.5, std::size_t{18}}}) {
        SpikeSchedule s;
        s.target = target;
        s.lead = lead;
        s.spikes = 1;
        cfs.emplace_back("liouville " + fmt("%g", target), cf_from_coeffs(with_tail(liouville_coefficients(s), 12)));
    }
    std::mt19937_64 rng(2024);
    for (int r = 0; r < 6; ++r) {
        std::vector<mpz_class> coeffs;
        for (int i = 0; i < 35; ++i) {
            coeffs.emplace_back(static_cast<long>(1 + rng() % 10));
        }
        cfs.emplace_back("random " + std::to_string(r), cf_from_coeffs(coeffs));
    }
    std::size_t checks = 0;
    std::size_t degenerate = 0;
    for (const auto& [name, cf] : cfs) {
        if (cf.depth() < 31) {
            return {false, name + " has depth " + std::to_string(cf.depth())};
        }
        const mpq_class alpha = cf.exact_value();
        for (std::size_t n = 0; n <= 30; ++n) {
            const mpz_class qn = cf.q(n);
            const mpz_class qn1 = cf.q(n + 1);
            // q_0 = q_1 when a_1 = 1: then ||q_0 alpha|| = 1 - alpha < 1/2 and the
            // inequality holds for |q_0 alpha - p_0| instead
            mpq_class dist = torus_dist(qn * alpha);
            if (n == 0 && qn == qn1) {
                dist = abs(qn * alpha - cf.p(n));
                ++degenerate;
            }
            const mpq_class lower(mpz_class(1), 2 * qn1);
            const mpq_class upper(mpz_class(1), qn1);
            if (!(lower <= dist && dist <= upper)) {
                return {false, name + " fails at n = " + std::to_string(n)};
            }
            ++checks;
        }
    }
    return {true, std::to_string(checks) + " exact checks over " + std::to_string(cfs.size()) +
                      " expansions; " + std::to_string(degenerate) + " with a_1 = 1 use |q_0 alpha - p_0| at n = 0"};
}

Outcome criterion2() {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(30));
    const long long q8 = cf.q(8).get_si();
    const std::vector<MeromorphicPotential> models = {
        make_amo(2.0), make_amo(0.5), make_maryland(1.0),
        make_custom({Pole{TorusPoint(mpq_class(1, 3)), 1}, Pole{TorusPoint(mpq_class(2, 3)), 1}},
                    named_g("const", 1.0), "thirds")};
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<long long> len(-q8, q8);
    std::uniform_int_distribution<long> num(0, 9999);
    std::uniform_real_distribution<double> en(-3.0, 3.0);
    const Bits prec = 128;
    double worst = 0.0;
    std::size_t done = 0;
    while (done < 1000) {
        const MeromorphicPotential& pot = models[done % models.size()];
        const long long n = len(rng);
        const TorusPoint x(mpq_class(num(rng), 10000));
        const Real E(en(rng), prec);
        try {
            Mat2<Real> B = product_real(pot, E, x, cf, n, CocycleKind::A, prec);
            Mat2<Real> Binv(Mat2<Real>::identity(E));
            if (n >= 0) {
                Binv = product_inverse_real(pot, E, x, cf, n, prec);
            } else {
                const TorusPoint back(*x.rational() + mpq_class(static_cast<long>(n)) * cf.exact_value());
                Binv = product_real(pot, E, back, cf, -n, CocycleKind::A, prec);
            }
            const CayleyHamilton ch = cayley_hamilton(B, Binv);
            worst = std::max({worst, ch.square, ch.inverse});
            ++done;
        } catch (const PoleError&) {
            // orbit within the pole floor; draw again
        }
    }
    return {worst <= 1e-9, "1000 products, |n| <= " + std::to_string(q8) + ", worst residual " + fmt("%.3g", worst)};
}

Outcome criterion3() {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(60));
    const MeromorphicPotential m = make_maryland(1.0);
    const std::vector<double> orbit = rotation_orbit(cf, 100000);
    double worst = 0.0;
    for (double E : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        LyapunovOptions o;
        o.n = 100000;
        const double d = lyapunov(m, E, orbit, o).value;
        o.kind = CocycleKind::A;
        const double a = lyapunov(m, E, orbit, o).value;
        worst = std::max(worst, std::abs(a - d) / d);
    }
    return {worst <= 0.05, "5 energies at n = 1e5, worst relative gap " + fmt("%.3g", worst)};
}

Outcome criterion4() {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(40));
    LyapunovOptions o;
    o.n = 10000;
    const double L = lyapunov(make_constant(0.0), 3.0, cf, o).value;
    const double exact = std::log((3.0 + std::sqrt(5.0)) / 2.0);
    return {std::abs(L - exact) <= 1e-3, "L = " + fmt("%.6f", L) + ", closed form " + fmt("%.6f", exact)};
}

Outcome criterion5() {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(30));
    double worst = 0.0;
    for (int k = 0; k < 8; ++k) {
        const TorusPoint theta(mpq_class(2 * k + 1, 17));
        for (std::size_t n = 5; n <= 18; ++n) {
            const SineProduct s = sine_product_check(theta, cf, n);
            worst = std::max(worst, std::abs(s.sum) / s.log_q);
        }
    }
    return {worst <= 10.0, "8 phases, levels 5-18, sup |S| / ln q_n = " + fmt("%.3f", worst)};
}

Outcome criterion6() {
    SpikeSchedule s;
    s.target = 1.0;
    s.spikes = 3;
    const ContinuedFraction cf = cf_from_coeffs(liouville_coefficients(s));
    const MeromorphicPotential m = make_maryland(1.0);
    const TorusPoint theta(mpq_class(1, 4));
    const IndexValue d = delta_index(cf, theta, m.poles);
    std::size_t checked = 0;
    std::string levels;
    for (std::size_t n : qualifying_levels(d, 0.2)) {
        if (cf.q(n) > 10000) {
            continue;
        }
        const FProductCheck c = f_product_check(m, theta, cf, d, n, 0.2);
        if (!c.holds()) {
            return {false, "fails at level " + std::to_string(n)};
        }
        ++checked;
        levels += " " + cf.q(n).get_str();
    }
    return {checked > 0, std::to_string(checked) + " qualifying levels, q =" + levels + ", delta^ = " +
                             fmt("%.4f", d.value)};
}

struct Lemma32Case {
    std::string name;
    MeromorphicPotential pot;
    ContinuedFraction cf;
    TorusPoint theta;
    double E;
    double epsilon;
};

std::vector<Lemma32Case> lemma32_cases() {
    std::vector<Lemma32Case> out;
    {
        const MeromorphicPotential m = make_maryland(0.1);
        const TorusPoint theta(mpq_class(1, 4));
        SpikeSchedule s;
        s.target = 0.56;
        s.spikes = 3;
        out.push_back({"Maryland lambda 0.1", m, cf_from_coeffs(phase_compensated_coefficients(s, theta, m.poles)),
                       theta, 0.0, 0.1});
    }
    {
        SpikeSchedule s;
        s.target = std::log(4.0);
        s.spikes = 3;
        out.push_back({"AMO lambda 2", make_amo(2.0), cf_from_coeffs(liouville_coefficients(s)),
                       TorusPoint(mpq_class(1, 8)), 0.0, 0.3});
    }
    return out;
}

Outcome criterion7() {
    std::string detail;
    bool pass = true;
    for (const Lemma32Case& c : lemma32_cases()) {
        const IndexValue d = delta_index(c.cf, c.theta, c.pot.poles);
        LyapunovOptions o;
        o.n = 20000;
        const double L = lyapunov(c.pot, c.E, c.cf, o).value;
        if (!(L + 4.0 * c.epsilon < d.value)) {
            pass = false;
        }
        std::size_t held = 0;
        std::size_t levels = 0;
        for (std::size_t n : qualifying_levels(d, c.epsilon)) {
            if (c.cf.q(n) > 1000000) {
                continue;
            }
            ++levels;
            held += lemma_A_check(c.pot, c.E, c.theta, c.cf, d, n, c.epsilon, L).holds();
        }
        pass = pass && held >= 3;
        detail += c.name + ": L = " + fmt("%.3f", L) + ", delta^ = " + fmt("%.3f", d.value) + ", eps = " +
                  fmt("%g", c.epsilon) + ", " + std::to_string(held) + "/" + std::to_string(levels) + " levels; ";
    }
    return {pass, detail};
}

Outcome criterion8() {
    std::size_t certified = 0;
    std::size_t directions = 0;
    double worst = INFINITY;
    for (const Lemma32Case& c : lemma32_cases()) {
        const IndexValue d = delta_index(c.cf, c.theta, c.pot.poles);
        std::vector<std::size_t> levels;
        for (std::size_t n : qualifying_levels(d, c.epsilon)) {
            if (c.cf.q(n) <= 1000000) {
                levels.push_back(n);
            }
        }
        const ExclusionReport r = exclusion_certificate(c.pot, c.E, c.theta, c.cf, levels, 0.01);
        for (const GordonCertificate& cert : r.levels) {
            if (cert.empirical_rate < 0.01) {
                continue;
            }
            ++certified;
            bool contracted = false;
            for (const DirectionResult& dir : cert.directions) {
                worst = std::min(worst, dir.max_norm);
                contracted = contracted || dir.contracted;
                ++directions;
            }
            if (!contracted || cert.directions.size() != 361) {
                return {false, "certificate at q = " + cert.q.get_str() + " lacks the direction grid"};
            }
        }
    }
    // the same vectors from a generated solution, at a level small enough to walk
    const MeromorphicPotential m = make_maryland(0.3);
    const TorusPoint theta(mpq_class(1, 4));
    SpikeSchedule s;
    s.target = 1.0;
    s.lead = 8;
    s.spikes = 1;
    const ContinuedFraction cf = cf_from_coeffs(phase_compensated_coefficients(s, theta, m.poles));
    const long long q = cf.q(8).get_si();
    const GordonMatrices gm = gordon_matrices(m, 0.0, theta, cf, q);
    const Vec2<Real> v = contracted_direction(gm);
    const GordonLhs lhs = gordon_lhs(gm, v);
    const bool small = std::max(lhs.log_square, lhs.log_inverse) <= -0.01 * static_cast<double>(q);
    const SolutionSegment seg =
        solve_recurrence(m, 0.0, theta, cf, {v.x.to_double(), v.y.to_double()}, -q - 1, 2 * q, gm.prec);
    const MaxInequality walk = max_inequality(seg, q, small);
    worst = std::min(worst, walk.max_norm);
    const bool pass = certified >= 3 && small && worst >= 0.25 - kMaxNormTolerance;
    return {pass, std::to_string(certified) + " certified levels, " + std::to_string(directions + 1) +
                      " directions, min max_norm " + fmt("%.4f", worst)};
}

Outcome criterion9() {
    double worst = 0.0;
    std::size_t levels = 0;
    const Pole half{TorusPoint(mpq_class(1, 2)), 1};
    const std::vector<ContinuedFraction> cfs = {cf_from_coeffs(golden_coefficients(40)),
                                                cf_from_coeffs(silver_coefficients(30)),
                                                cf_from_coeffs(std::vector<mpz_class>{3, 1, 4, 1, 5, 9, 2, 6, 5, 3})};
    for (const ContinuedFraction& cf : cfs) {
        for (const TorusPoint& theta : {TorusPoint(mpq_class(1, 5)), TorusPoint(mpq_class(3, 7)),
                                        TorusPoint::parse("0.318309886183790671")}) {
            const IndexValue b = beta(cf);
            const IndexValue d0 = delta_index(cf, theta, {});
            if (b.per_level.size() != d0.per_level.size()) {
                return {false, "m = 0 level count differs"};
            }
            for (std::size_t n = 0; n < b.per_level.size(); ++n) {
                if (std::memcmp(&b.per_level[n], &d0.per_level[n], sizeof(double)) != 0) {
                    return {false, "m = 0 differs from beta at level " + std::to_string(n)};
                }
            }
            const IndexValue d = delta_index(cf, theta, std::span<const Pole>(&half, 1));
            for (std::size_t n = 0; n < d.per_level.size(); ++n) {
                const mpq_class dist = torus_dist(cf.q(n) * (*theta.rational() - mpq_class(1, 2)));
                const Bits prec = 256;
                Real oracle = (log(Real(dist, prec)) + log(Real(cf.q(n + 1), prec))) / Real(cf.q(n), prec);
                const double want = oracle.to_double();
                if (dist == 0) {
                    if (!std::isinf(d.per_level[n])) {
                        return {false, "exact zero distance not -inf"};
                    }
                    continue;
                }
                worst = std::max(worst, std::abs(d.per_level[n] - want) / std::max(1.0, std::abs(want)));
                ++levels;
            }
        }
    }
    return {worst <= 1e-10, "beta bitwise equal; " + std::to_string(levels) + " Eq. (8) levels, worst " +
                                 fmt("%.3g", worst)};
}

std::size_t charpoly_count(const std::vector<double>& d, double x) {
    long double prev = 1.0L;
    long double cur = static_cast<long double>(x) - d[0];
    long double last = 1.0L;
    std::size_t changes = 0;
    auto step = [&](long double v) {
        const long double s = v == 0.0L ? -last : v;
        changes += (s < 0) != (last < 0);
        last = s;
    };
    step(cur);
    for (std::size_t k = 1; k < d.size(); ++k) {
        const long double next = (static_cast<long double>(x) - d[k]) * cur - prev;
        prev = cur;
        cur = next;
        const long double scale = std::fabs(cur) + std::fabs(prev);
        if (scale > 1e100L) {
            prev /= scale;
            cur /= scale;
        }
        step(cur);
    }
    return d.size() - changes;
}

Outcome criterion10() {
    const std::vector<double> e3 = tridiagonal_eigenvalues({0.0, 0.0, 0.0});
    const double err3 =
        std::max({std::abs(e3[0] + std::sqrt(2.0)), std::abs(e3[1]), std::abs(e3[2] - std::sqrt(2.0))});
    if (err3 > 1e-10) {
        return {false, "N = 3 error " + fmt("%.3g", err3)};
    }
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(40));
    std::size_t pairs = 0;
    for (const MeromorphicPotential& p : {make_amo(2.0), make_maryland(1.0)}) {
        const Tridiagonal big = truncation(p, TorusPoint(mpq_class(1, 9)), cf, 64);
        std::vector<double> prev;
        for (std::size_t N = 1; N <= 64; ++N) {
            const std::vector<double> d(big.diagonal.begin(), big.diagonal.begin() + static_cast<long>(N));
            const std::vector<double> e = tridiagonal_eigenvalues(d);
            for (std::size_t k = 0; k + 1 < N; ++k) {
                if (e[k] > prev[k] + 1e-9 || prev[k] > e[k + 1] + 1e-9) {
                    return {false, "interlacing fails at N = " + std::to_string(N)};
                }
                ++pairs;
            }
            prev = e;
        }
    }
    const Tridiagonal t = truncation(make_amo(2.0), TorusPoint(mpq_class(0)), cf, 512);
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-4.5, 4.5);
    for (int i = 0; i < 20; ++i) {
        const double x = u(rng);
        if (sturm_count(t.diagonal, x) != charpoly_count(t.diagonal, x)) {
            return {false, "sign count differs at " + fmt("%.6f", x)};
        }
    }
    return {true, "N = 3 error " + fmt("%.2g", err3) + ", " + std::to_string(pairs) +
                      " interlacing pairs, 20 probes at N = 512"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion11() {
    const fs::path dir = fs::temp_directory_path() / ("qpspec_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "run.ini";
    std::ofstream(cfg) << "[model]\nkind = maryland\nlambda = 1\n\n[alpha]\nkind = golden\nterms = 30\n\n"
                          "[run]\ntheta = 1/4\nepsilon = 0.2\nseed = 11\n\n[energies]\nkind = random\nmin = -3\n"
                          "max = 3\ncount = 24\n\n[lyapunov]\nn = 10000\n\n[gordon]\nlevels = 6, 8\n";
    std::size_t files = 0;
    for (const std::string& cmd : {"indices", "lyapunov", "gordon", "classify", "cf"}) {
        for (const std::string& run : {"t1a", "t1b", "t8"}) {
            const std::string threads = run == "t8" ? "8" : "1";
            const std::string line = std::string(QPSPEC_CLI) + " " + cmd + " --config " + cfg.string() + " --out " +
                                     (dir / run).string() + " --threads " + threads + " 2>/dev/null";
            const int status = std::system(line.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
                return {false, cmd + " exited with " + std::to_string(status)};
            }
        }
    }
    for (const auto& entry : fs::directory_iterator(dir / "t1a")) {
        const std::string base = slurp(entry.path());
        for (const std::string& other : {"t1b", "t8"}) {
            if (slurp(dir / other / entry.path().filename()) != base) {
                return {false, entry.path().filename().string() + " differs in " + other};
            }
        }
        ++files;
    }
    fs::remove_all(dir);
    return {files >= 9, std::to_string(files) + " files byte-identical across two runs and threads 1 / 8"};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8,
                                                            criterion9, criterion10, criterion11};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %zu: %s  %s (%.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
