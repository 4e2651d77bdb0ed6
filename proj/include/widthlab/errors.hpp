#pragma once

#include <stdexcept>
#include <string>

namespace widthlab {

enum class Errc {
    InvalidArgument,
    DegenerateCovariance,
    NotPSD,
    NegativeVariance,
    IndexOutOfRange,
    NonFiniteInput,
    DimensionMismatch,
    NotSymmetric,
    IndefiniteKernel,
    SingularKernel,
    ZeroEigenvalue,
    LogOfNonPositive,
    NegativeQ,
    EnumerationTooLarge,
    ShapeMismatch,
    ZeroInput,
    StepTooSmall,
    ConfigInvalid,
    IoFailure,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace widthlab
