#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freesde {

/// Failure categories raised by the library. Every public operation that can
/// fail throws freesde::Error carrying one of these codes.
enum class Errc {
    invalid_argument,
    evaluator_domain,
    non_finite,
    excess_clamping,
    grid_too_coarse,
    grid_mismatch,
    order_too_high,
    zero_polynomial,
    degree_too_high,
    moments_unavailable,
    step_too_large,
    outside_surface,
    on_support_real,
    newton_diverged,
    branch_violation,
    past_blowup,
    no_transform,
    overflow,
    odd_order,
    eigen_fail,
    no_contraction,
    invalid_config,
    empty_histogram,
    parse_error,
};

constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::evaluator_domain: return "EvaluatorDomain";
        case Errc::non_finite: return "NonFinite";
        case Errc::excess_clamping: return "ExcessClamping";
        case Errc::grid_too_coarse: return "GridTooCoarse";
        case Errc::grid_mismatch: return "GridMismatch";
        case Errc::order_too_high: return "OrderTooHigh";
        case Errc::zero_polynomial: return "ZeroPolynomial";
        case Errc::degree_too_high: return "DegreeTooHigh";
        case Errc::moments_unavailable: return "MomentsUnavailable";
        case Errc::step_too_large: return "StepTooLarge";
        case Errc::outside_surface: return "OutsideSurface";
        case Errc::on_support_real: return "OnSupportReal";
        case Errc::newton_diverged: return "NewtonDiverged";
        case Errc::branch_violation: return "BranchViolation";
        case Errc::past_blowup: return "PastBlowup";
        case Errc::no_transform: return "NoTransform";
        case Errc::overflow: return "Overflow";
        case Errc::odd_order: return "OddOrder";
        case Errc::eigen_fail: return "EigenFail";
        case Errc::no_contraction: return "NoContraction";
        case Errc::invalid_config: return "InvalidConfig";
        case Errc::empty_histogram: return "EmptyHistogram";
        case Errc::parse_error: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
    if (!condition) fail(code, what);
}

}  // namespace freesde
