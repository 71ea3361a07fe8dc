#include "qpspec/spectral.hpp"

#include "qpspec/error.hpp"
#include "qpspec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpspec {

namespace {

constexpr Bits kSiteBits = 128;

}  // namespace

const char* to_string(Boundary b) {
    return b == Boundary::Dirichlet ? "dirichlet" : "neumann";
}

const char* to_string(PolePolicy p) {
    return p == PolePolicy::Cap ? "cap" : "strict";
}

const char* to_string(RegimeLabel label) {
    switch (label) {
        case RegimeLabel::ScCandidate:
            return "sc-candidate";
        case RegimeLabel::AboveDelta:
            return "above-delta";
        case RegimeLabel::Uncertain:
            return "uncertain";
    }
    return "uncertain";
}

Tridiagonal truncation(const MeromorphicPotential& pot, const TorusPoint& theta, const ContinuedFraction& cf,
                       std::size_t N, const SpectrumOptions& options) {
    if (N < 2) {
        throw Error(ErrorKind::InvalidInput, "truncation needs N >= 2");
    }
    if (!(options.v_cap > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "v_cap must be positive");
    }
    Tridiagonal t;
    t.diagonal.resize(N);
    OrbitWalker walk(theta, cf, 0, kSiteBits);
    for (std::size_t k = 0; k < N; ++k, walk.advance()) {
        double v = options.v_cap;
        bool capped = true;
        try {
            v = eval_V(pot, walk.point()).value.to_double();
            capped = !(std::abs(v) <= options.v_cap);
            if (capped) {
                v = std::copysign(options.v_cap, v);
            }
        } catch (const PoleError&) {
        }
        if (capped) {
            t.capped_sites.push_back(static_cast<long long>(k));
        }
        t.diagonal[k] = v;
    }
    if (options.policy == PolePolicy::Strict && !t.capped_sites.empty()) {
        std::string sites;
        for (long long k : t.capped_sites) {
            sites += (sites.empty() ? "" : ",") + std::to_string(k);
        }
        throw Error(ErrorKind::Pole, "pole in truncation window at k = " + sites);
    }
    if (options.boundary == Boundary::Neumann) {
        t.diagonal.front() += 1.0;
        t.diagonal.back() += 1.0;
    }
    return t;
}

std::size_t sturm_count(const std::vector<double>& diagonal, double x) {
    const double pivmin = std::numeric_limits<double>::min();
    std::size_t count = 0;
    double d = 1.0;
    for (std::size_t k = 0; k < diagonal.size(); ++k) {
        d = (diagonal[k] - x) - (k == 0 ? 0.0 : 1.0 / d);
        if (std::abs(d) < pivmin) {
            d = -pivmin;
        }
        if (d < 0.0) {
            ++count;
        }
    }
    return count;
}

std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& diagonal, double tolerance) {
    if (diagonal.empty()) {
        return {};
    }
    const auto [lo_it, hi_it] = std::minmax_element(diagonal.begin(), diagonal.end());
    const double lower = *lo_it - 2.0 - tolerance;
    const double upper = *hi_it + 2.0 + tolerance;
    std::vector<double> out(diagonal.size());
    for (std::size_t k = 0; k < diagonal.size(); ++k) {
        // invariant: count(lo) <= k < count(hi)
        double lo = k == 0 ? lower : std::max(lower, out[k - 1] - tolerance);
        double hi = upper;
        while (hi - lo > 0.25 * tolerance) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;
            }
            if (sturm_count(diagonal, mid) <= k) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out[k] = 0.5 * (lo + hi);
    }
    return out;
}

TruncatedSpectrum truncated_spectrum(const MeromorphicPotential& pot, const TorusPoint& theta,
                                     const ContinuedFraction& cf, std::size_t N, const SpectrumOptions& options) {
    Tridiagonal t = truncation(pot, theta, cf, N, options);
    TruncatedSpectrum s;
    s.eigenvalues = tridiagonal_eigenvalues(t.diagonal, options.tolerance);
    s.capped_sites = std::move(t.capped_sites);
    s.pole_influenced.resize(s.eigenvalues.size(), false);
    if (!s.capped_sites.empty()) {
        for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
            s.pole_influenced[k] = std::abs(s.eigenvalues[k]) >= 0.5 * options.v_cap;
        }
    }
    return s;
}

std::vector<ScanEntry> lyapunov_scan(const MeromorphicPotential& pot, const ContinuedFraction& cf,
                                     const std::vector<double>& energies, const LyapunovOptions& options) {
    std::vector<ScanEntry> out(energies.size());
    if (energies.empty()) {
        return out;
    }
    const std::vector<double> orbit = rotation_orbit(cf, options.n);
    LyapunovOptions inner = options;
    inner.threads = 1;
    parallel_for(energies.size(), options.threads, [&](std::size_t i) {
        out[i].E = energies[i];
        try {
            out[i].estimate = lyapunov(pot, energies[i], orbit, inner);
        } catch (const Error& e) {
            out[i].error = std::string(to_string(e.kind())) + ": " + e.what();
        }
    });
    return out;
}

RegimeLabel regime_label(double L, double uncertainty, double delta_lower, double delta_upper) {
    if (L + uncertainty < delta_lower) {
        return RegimeLabel::ScCandidate;
    }
    if (L - uncertainty > delta_upper) {
        return RegimeLabel::AboveDelta;
    }
    return RegimeLabel::Uncertain;
}

RegimeClassification classify_regime(const MeromorphicPotential& pot, const ContinuedFraction& cf,
                                     const std::vector<double>& energies, const IndexValue& delta_hat,
                                     const LyapunovOptions& options) {
    RegimeClassification out;
    out.energies = energies;
    out.delta_hat = delta_hat;
    const std::size_t levels = delta_hat.per_level.size();
    out.delta_lower = delta_hat.max_over_last((levels + 3) / 4);
    out.delta_upper = delta_hat.max_over_last((levels + 1) / 2);
    if (energies.empty()) {
        return out;
    }

    LyapunovOptions half = options;
    half.n = std::max<std::size_t>(1, options.n / 2);
    const std::vector<ScanEntry> full = lyapunov_scan(pot, cf, energies, options);
    const std::vector<ScanEntry> coarse = lyapunov_scan(pot, cf, energies, half);

    const double inf = std::numeric_limits<double>::infinity();
    std::size_t uncertain = 0;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        double L = std::numeric_limits<double>::quiet_NaN();
        double disc = inf;
        double u = inf;
        std::string error = full[i].error.empty() ? coarse[i].error : full[i].error;
        if (full[i].estimate && coarse[i].estimate) {
            L = full[i].estimate->value;
            disc = full[i].estimate->discrepancy;
            u = disc + std::abs(L - coarse[i].estimate->value);
        }
        const RegimeLabel label =
            error.empty() ? regime_label(L, u, out.delta_lower, out.delta_upper) : RegimeLabel::Uncertain;
        uncertain += label == RegimeLabel::Uncertain ? 1 : 0;
        out.L_values.push_back(L);
        out.discrepancy.push_back(disc);
        out.uncertainty.push_back(u);
        out.labels.push_back(label);
        out.errors.push_back(std::move(error));
    }
    out.uncertain_fraction = static_cast<double>(uncertain) / static_cast<double>(energies.size());
    return out;
}

}  // namespace qpspec
