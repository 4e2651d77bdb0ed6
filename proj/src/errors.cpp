#include "widthlab/errors.hpp"

namespace widthlab {

const char* to_string(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DegenerateCovariance: return "DegenerateCovariance";
    case Errc::NotPSD: return "NotPSD";
    case Errc::NegativeVariance: return "NegativeVariance";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::IndefiniteKernel: return "IndefiniteKernel";
    case Errc::SingularKernel: return "SingularKernel";
    case Errc::ZeroEigenvalue: return "ZeroEigenvalue";
    case Errc::LogOfNonPositive: return "LogOfNonPositive";
    case Errc::NegativeQ: return "NegativeQ";
    case Errc::EnumerationTooLarge: return "EnumerationTooLarge";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::ZeroInput: return "ZeroInput";
    case Errc::StepTooSmall: return "StepTooSmall";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

} // namespace widthlab

#include <iostream>
#include <mutex>

#include "widthlab/log.hpp"

namespace widthlab {

namespace {
std::mutex g_warn_mu;
WarningHandler g_handler = [](const std::string& m) { std::cerr << "widthlab: warning: " << m << '\n'; };
} // namespace

void set_warning_handler(WarningHandler handler) {
    std::lock_guard<std::mutex> lock(g_warn_mu);
    g_handler = std::move(handler);
}

void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(g_warn_mu);
    if (g_handler) g_handler(message);
}

} // namespace widthlab
