#pragma once

#include <stdexcept>
#include <string>

namespace qpspec {

enum class ErrorKind {
    InvalidInput,
    PrecisionExhausted,
    ExcludedPhase,
    Pole,
    PoleOnOrbit,
    Budget,
    Subsequence,
    DegenerateModel,
    Range,
    Numeric,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// The phase lies on (or within resolution of) a translate theta_l + k*alpha.
class ExcludedPhaseError : public Error {
public:
    ExcludedPhaseError(std::size_t pole, long long translate, const std::string& what)
        : Error(ErrorKind::ExcludedPhase, what), pole_(pole), translate_(translate) {}
    std::size_t pole() const { return pole_; }
    long long translate() const { return translate_; }

private:
    std::size_t pole_;
    long long translate_;
};

// A pole was hit exactly, or an orbit step came within the pole floor.
class PoleError : public Error {
public:
    PoleError(ErrorKind kind, std::size_t pole, long long step, const std::string& what)
        : Error(kind, what), pole_(pole), step_(step) {}
    std::size_t pole() const { return pole_; }
    long long step() const { return step_; }

private:
    std::size_t pole_;
    long long step_;
};

}  // namespace qpspec
