#include "qpspec/error.hpp"
#include "qpspec/spectral.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace qpspec;

namespace {

// eigenvalues below x from the sign changes of det(x - T_k), rescaled as it goes
std::size_t charpoly_count(const std::vector<double>& d, double x) {
    long double prev = 1.0L;
    long double cur = static_cast<long double>(x) - d[0];
    std::size_t changes = 0;
    auto sign_of = [](long double v, long double before) { return v == 0.0L ? -before : v; };
    long double last = 1.0L;
    long double s = sign_of(cur, last);
    changes += (s < 0) != (last < 0);
    last = s;
    for (std::size_t k = 1; k < d.size(); ++k) {
        const long double next = (static_cast<long double>(x) - d[k]) * cur - prev;
        prev = cur;
        cur = next;
        const long double scale = std::fabs(cur) + std::fabs(prev);
        if (scale > 1e100L) {
            prev /= scale;
            cur /= scale;
        }
        s = sign_of(cur, last);
        changes += (s < 0) != (last < 0);
        last = s;
    }
    return d.size() - changes;
}

ContinuedFraction ln4_alpha() {
    SpikeSchedule s;
    s.target = std::log(4.0);
    s.lead = 7;
    s.spikes = 1;
    return cf_from_coeffs(liouville_coefficients(s));
}

}  // namespace

TEST_CASE("N = 3 Laplacian") {
    const std::vector<double> e = tridiagonal_eigenvalues({0.0, 0.0, 0.0});
    REQUIRE(e.size() == 3);
    CHECK(std::abs(e[0] + std::sqrt(2.0)) < 1e-10);
    CHECK(std::abs(e[1]) < 1e-10);
    CHECK(std::abs(e[2] - std::sqrt(2.0)) < 1e-10);

    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(20));
    const TruncatedSpectrum t = truncated_spectrum(make_constant(0.0), TorusPoint(mpq_class(0)), cf, 3);
    CHECK(std::abs(t.eigenvalues[2] - std::sqrt(2.0)) < 1e-10);
}

TEST_CASE("constant shift") {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(20));
    const TorusPoint theta(mpq_class(1, 3));
    const auto zero = truncated_spectrum(make_constant(0.0), theta, cf, 40).eigenvalues;
    const auto shifted = truncated_spectrum(make_constant(1.75), theta, cf, 40).eigenvalues;
    for (std::size_t k = 0; k < zero.size(); ++k) {
        CHECK(std::abs(shifted[k] - zero[k] - 1.75) < 1e-9);
        CHECK(std::abs(zero[k] - 2.0 * std::cos(std::numbers::pi * (40 - k) / 41.0)) < 1e-9);
    }
}

TEST_CASE("Sturm counts agree with the characteristic polynomial oracle, AMO N = 512") {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(40));
    const Tridiagonal t = truncation(make_amo(2.0), TorusPoint(mpq_class(0)), cf, 512);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-4.5, 4.5);
    for (int i = 0; i < 20; ++i) {
        const double x = u(rng);
        CHECK(sturm_count(t.diagonal, x) == charpoly_count(t.diagonal, x));
    }
    const auto e = tridiagonal_eigenvalues(t.diagonal);
    CHECK(e.size() == 512);
    CHECK(std::is_sorted(e.begin(), e.end()));
}

TEST_CASE("Cauchy interlacing for N <= 64") {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(30));
    for (const MeromorphicPotential& p : {make_amo(1.7), make_maryland(0.6)}) {
        const Tridiagonal big = truncation(p, TorusPoint(mpq_class(2, 9)), cf, 64);
        std::vector<double> prev;
        for (std::size_t N = 1; N <= 64; ++N) {
            const std::vector<double> d(big.diagonal.begin(), big.diagonal.begin() + static_cast<long>(N));
            const std::vector<double> e = tridiagonal_eigenvalues(d);
            for (std::size_t k = 0; k + 1 < N; ++k) {
                CHECK(e[k] <= prev[k] + 1e-9);
                CHECK(prev[k] <= e[k + 1] + 1e-9);
            }
            prev = e;
        }
    }
}

TEST_CASE("pole policies") {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(30));
    const MeromorphicPotential m = make_maryland(1.0);
    const TorusPoint theta(mpq_class(1, 2));
    SpectrumOptions strict;
    strict.policy = PolePolicy::Strict;
    try {
        truncated_spectrum(m, theta, cf, 16, strict);
        FAIL("expected a pole error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Pole);
        CHECK(std::string(e.what()).find("k = 0") != std::string::npos);
    }
    const TruncatedSpectrum capped = truncated_spectrum(m, theta, cf, 16);
    CHECK(capped.capped_sites == std::vector<long long>{0});
    std::size_t flagged = 0;
    for (std::size_t k = 0; k < capped.eigenvalues.size(); ++k) {
        flagged += capped.pole_influenced[k];
    }
    CHECK(flagged == 1);
    CHECK(std::abs(capped.eigenvalues.back()) > 1e11);
}

TEST_CASE("Neumann boundary of the free Laplacian") {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(20));
    SpectrumOptions o;
    o.boundary = Boundary::Neumann;
    const auto e = truncated_spectrum(make_constant(0.0), TorusPoint(mpq_class(0)), cf, 10, o).eigenvalues;
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK(std::abs(e[k] - 2.0 * std::cos(std::numbers::pi * (9 - k) / 10.0)) < 1e-9);
    }
}

TEST_CASE("lyapunov_scan examples") {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(40));
    LyapunovOptions o;
    o.n = 10000;
    const auto flat = lyapunov_scan(make_constant(0.0), cf, {-3.0, 0.0, 3.0}, o);
    const double rho = std::log((3.0 + std::sqrt(5.0)) / 2.0);
    CHECK(std::abs(flat[0].estimate->value - rho) < 1e-2);
    CHECK(std::abs(flat[1].estimate->value) < 1e-2);
    CHECK(std::abs(flat[2].estimate->value - rho) < 1e-2);

    const MeromorphicPotential m = make_maryland(1.0);
    const auto single = lyapunov_scan(m, cf, {0.7}, o);
    CHECK(single[0].estimate->value == lyapunov(m, 0.7, cf, o).value);

    std::vector<double> grid;
    for (int i = 0; i < 64; ++i) {
        grid.push_back(-4.0 + 8.0 * i / 63.0);
    }
    o.threads = 4;
    const auto scan = lyapunov_scan(m, cf, grid, o);
    REQUIRE(scan.size() == 64);
    for (std::size_t i = 0; i < scan.size(); ++i) {
        CHECK(scan[i].E == grid[i]);
        REQUIRE(scan[i].estimate.has_value());
        CHECK(scan[i].estimate->value >= 0.0);
        if (i > 0) {
            CHECK(std::abs(scan[i].estimate->value - scan[i - 1].estimate->value) < 0.1);
        }
    }
    o.threads = 1;
    const auto serial = lyapunov_scan(m, cf, grid, o);
    for (std::size_t i = 0; i < scan.size(); ++i) {
        CHECK(serial[i].estimate->value == scan[i].estimate->value);
    }
}

TEST_CASE("regime labels only change through uncertain") {
    for (double L : {0.1, 0.5, 0.9, 1.3}) {
        RegimeLabel prev = regime_label(L, 0.0, 0.6, 0.8);
        for (double u = 0.0; u < 2.0; u += 0.01) {
            const RegimeLabel now = regime_label(L, u, 0.6, 0.8);
            if (now != prev) {
                CHECK(now == RegimeLabel::Uncertain);
            }
            prev = now;
        }
    }
    CHECK(regime_label(0.1, 0.05, 0.6, 0.8) == RegimeLabel::ScCandidate);
    CHECK(regime_label(1.0, 0.05, 0.6, 0.8) == RegimeLabel::AboveDelta);
    CHECK(regime_label(0.7, 0.0, 0.6, 0.8) == RegimeLabel::Uncertain);
}

TEST_CASE("classify: AMO lambda = 2, golden alpha has no sc-candidate") {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(30));
    const MeromorphicPotential amo = make_amo(2.0);
    const TorusPoint theta(mpq_class(0));
    const IndexValue d = delta_index(cf, theta, amo.poles);
    const TruncatedSpectrum sp = truncated_spectrum(amo, theta, cf, 256);
    std::vector<double> energies;
    for (std::size_t i = 0; i < 256; i += 32) {
        energies.push_back(sp.eigenvalues[i]);
    }
    LyapunovOptions o;
    o.n = 10000;
    const RegimeClassification c = classify_regime(amo, cf, energies, d, o);
    CHECK(c.delta_upper < 0.01);
    for (RegimeLabel label : c.labels) {
        CHECK(label != RegimeLabel::ScCandidate);
    }
}

TEST_CASE("classify: AMO lambda = 2, beta near ln 4 gives sc-candidates") {
    const ContinuedFraction cf = ln4_alpha();
    const MeromorphicPotential amo = make_amo(2.0);
    const TorusPoint theta(mpq_class(1, 8));
    const IndexValue d = delta_index(cf, theta, amo.poles);
    REQUIRE(d.per_level.size() >= 8);
    const TruncatedSpectrum sp = truncated_spectrum(amo, theta, cf, 256);
    std::vector<double> energies;
    for (std::size_t i = 0; i < 256; i += 32) {
        energies.push_back(sp.eigenvalues[i]);
    }
    LyapunovOptions o;
    o.n = 10000;
    const RegimeClassification c = classify_regime(amo, cf, energies, d, o);
    CHECK(c.delta_lower == doctest::Approx(std::log(4.0)).epsilon(1e-2));
    for (std::size_t i = 0; i < energies.size(); ++i) {
        CHECK(c.labels[i] == regime_label(c.L_values[i], c.uncertainty[i], c.delta_lower, c.delta_upper));
        CHECK(c.labels[i] == RegimeLabel::ScCandidate);
    }
    CHECK(c.uncertain_fraction == 0.0);
}

TEST_CASE("classify: empty grid") {
    const ContinuedFraction cf = cf_from_coeffs(golden_coefficients(30));
    const IndexValue d = delta_index(cf, TorusPoint(mpq_class(0)), {});
    const RegimeClassification c = classify_regime(make_amo(2.0), cf, {}, d);
    CHECK(c.energies.empty());
    CHECK(c.labels.empty());
    CHECK(c.uncertain_fraction == 0.0);
}
