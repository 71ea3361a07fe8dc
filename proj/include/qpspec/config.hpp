#pragma once

#include "qpspec/arithmetic.hpp"
#include "qpspec/cocycle.hpp"
#include "qpspec/potential.hpp"
#include "qpspec/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qpspec {

struct ModelConfig {
    std::string kind = "amo";  // amo | maryland | constant | custom
    double lambda = 1.0;
    double value = 0.0;  // constant
    std::string g = "cos2pi";
    double coupling = 1.0;
    std::string poles;  // "1/2, 1/3:2"
    int sign = 1;
};

struct AlphaConfig {
    std::string kind = "golden";  // golden | silver | coefficients | decimal | liouville | compensated | file
    std::size_t terms = 30;
    std::string coefficients;
    std::string value;
    Bits precision = 0;
    std::string path;
    SpikeSchedule spikes;
};

struct EnergyConfig {
    std::string kind = "list";  // list | uniform | random | spectrum
    std::vector<double> values{0.0};
    double min = -4.0;
    double max = 4.0;
    std::size_t count = 64;
    std::size_t N = 256;
    SpectrumOptions spectrum;
};

struct GordonConfig {
    double rate = 0.01;
    std::size_t directions = 360;
    std::size_t budget = 1'000'000;
    Bits precision = 0;
    /// Empty means the qualifying levels of delta.
    std::vector<std::size_t> levels;
};

struct RunConfig {
    ModelConfig model;
    AlphaConfig alpha;
    std::string theta = "0";
    double epsilon = 0.1;
    std::uint64_t seed = 1;
    EnergyConfig energies;
    std::size_t lyapunov_n = 10000;
    std::size_t lyapunov_grid = 64;
    CocycleKind lyapunov_kind = CocycleKind::D;
    LyapunovMethod lyapunov_method = LyapunovMethod::PhaseAverage;
    long long gamma_n_max = 10000;
    long long delta_horizon = 10000;
    GordonConfig gordon;
    std::string out = "out";
};

/// INI text: sections [model] [alpha] [run] [energies] [lyapunov] [indices]
/// [gordon] [output]. Unknown sections or keys and invalid values throw
/// Error(Config) naming the key.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

MeromorphicPotential build_potential(const ModelConfig& model);
TorusPoint build_theta(const RunConfig& config);
ContinuedFraction build_alpha(const RunConfig& config, const MeromorphicPotential& pot, const TorusPoint& theta);
/// Ascending energies; random grids draw from seed.
std::vector<double> build_energies(const RunConfig& config, const MeromorphicPotential& pot, const TorusPoint& theta,
                                   const ContinuedFraction& cf);

std::vector<Pole> parse_poles(const std::string& text);

}  // namespace qpspec
