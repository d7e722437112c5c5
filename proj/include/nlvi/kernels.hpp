#pragma once

// Radial interaction kernels gamma(x, y) = g(|x - y|) with compact support
// on the ball of radius delta. Every supported family is a power law
//
//     g(r) = sigma * r^p     for r <= delta,     0 otherwise,
//
// with p = -(n + 2s) (fractional type), p = -1 (peridynamic type) or p = 0
// (constant, square integrable). Moments of the profile therefore have
// closed forms, which the assembly routines lean on.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "nlvi/errors.hpp"

namespace nlvi {

inline constexpr double infinite_horizon = std::numeric_limits<double>::infinity();

enum class KernelCase { FractionalType, ConstantIntegrable, Peridynamic };

/// How the kernel scale sigma is chosen.
struct SigmaMode {
    enum class Kind {
        Constant,                 ///< sigma = value
        FractionalNormalization,  ///< sigma = c_{n,s} / 2
        LocalScaling,             ///< sigma = (2 - 2s) / delta^{2 - 2s}
        InverseTwoDeltaSq         ///< sigma = 1 / (2 delta^2)
    };

    Kind kind = Kind::Constant;
    double value = 1.0;

    static SigmaMode constant(double v) { return {Kind::Constant, v}; }
    static SigmaMode fractional_normalization() { return {Kind::FractionalNormalization, 0.0}; }
    static SigmaMode local_scaling() { return {Kind::LocalScaling, 0.0}; }
    static SigmaMode inverse_two_delta_sq() { return {Kind::InverseTwoDeltaSq, 0.0}; }
};

inline std::string to_string(KernelCase c) {
    switch (c) {
        case KernelCase::FractionalType: return "fractional";
        case KernelCase::ConstantIntegrable: return "constant";
        case KernelCase::Peridynamic: return "peridynamic";
    }
    return "unknown";
}

inline std::string to_string(const SigmaMode& m) {
    switch (m.kind) {
        case SigmaMode::Kind::Constant: {
            std::ostringstream os;
            os.precision(17);
            os << "constant:" << m.value;
            return os.str();
        }
        case SigmaMode::Kind::FractionalNormalization: return "fractional";
        case SigmaMode::Kind::LocalScaling: return "local";
        case SigmaMode::Kind::InverseTwoDeltaSq: return "inv2delta2";
    }
    return "unknown";
}

/// Validated kernel description with sigma resolved to a number.
/// Construct through make_kernel().
class KernelSpec {
public:
    KernelCase kernel_case() const { return case_; }
    /// Fractional order; only present for KernelCase::FractionalType.
    std::optional<double> s() const { return s_; }
    double delta() const { return delta_; }
    double sigma() const { return sigma_; }
    SigmaMode sigma_mode() const { return mode_; }
    int dimension() const { return n_; }
    bool finite_horizon() const { return std::isfinite(delta_); }

    /// Power p of the radial profile g(r) = sigma r^p.
    double exponent() const {
        switch (case_) {
            case KernelCase::FractionalType: return -(static_cast<double>(n_) + 2.0 * *s_);
            case KernelCase::Peridynamic: return -1.0;
            case KernelCase::ConstantIntegrable: return 0.0;
        }
        return 0.0;
    }

    bool singular() const { return case_ != KernelCase::ConstantIntegrable; }

    /// Same kernel with a different horizon (sigma is re-resolved).
    KernelSpec with_delta(double delta) const;

    /// Same kernel with sigma multiplied by `factor`.
    KernelSpec scaled(double factor) const {
        KernelSpec k = *this;
        k.sigma_ *= factor;
        k.mode_ = SigmaMode::constant(k.sigma_);
        return k;
    }

private:
    friend KernelSpec make_kernel(KernelCase, std::optional<double>, double, SigmaMode, int);

    KernelCase case_ = KernelCase::FractionalType;
    std::optional<double> s_;
    double delta_ = 1.0;
    double sigma_ = 1.0;
    SigmaMode mode_;
    int n_ = 1;
};

/// Normalization constant of the integral fractional Laplacian,
/// c_{n,s} = 2^{2s} s Gamma(s + n/2) / (pi^{n/2} Gamma(1 - s)).
inline double c_ns(int n, double s) {
    detail::require(n >= 1, "dimension must be a positive integer");
    detail::require(s > 0.0 && s < 1.0, "s must lie in (0,1)");
    const double half_n = 0.5 * n;
    return std::pow(2.0, 2.0 * s) * s * std::tgamma(s + half_n) /
           (std::pow(std::numbers::pi, half_n) * std::tgamma(1.0 - s));
}

inline KernelSpec make_kernel(KernelCase kernel_case, std::optional<double> s, double delta,
                              SigmaMode sigma_mode, int n = 1) {
    detail::require(n >= 1, "dimension must be a positive integer");
    detail::require(delta > 0.0 && !std::isnan(delta), "delta must be positive");

    if (kernel_case == KernelCase::FractionalType) {
        detail::require(s.has_value(), "fractional kernels need an order s");
        detail::require(*s > 0.0 && *s < 1.0, "s must lie in (0,1)");
    } else {
        s.reset();
    }
    if (kernel_case == KernelCase::Peridynamic && n == 1) {
        detail::require(std::isfinite(delta),
                        "peridynamic kernel needs a finite horizon: non-integrable tail in 1D");
    }

    double sigma = 0.0;
    switch (sigma_mode.kind) {
        case SigmaMode::Kind::Constant:
            sigma = sigma_mode.value;
            break;
        case SigmaMode::Kind::FractionalNormalization:
            detail::require(s.has_value(), "fractional normalization needs a fractional kernel");
            sigma = 0.5 * c_ns(n, *s);
            break;
        case SigmaMode::Kind::LocalScaling:
            detail::require(s.has_value(), "local scaling needs a fractional kernel");
            detail::require(std::isfinite(delta), "local scaling needs a finite horizon");
            sigma = (2.0 - 2.0 * *s) / std::pow(delta, 2.0 - 2.0 * *s);
            break;
        case SigmaMode::Kind::InverseTwoDeltaSq:
            detail::require(std::isfinite(delta), "sigma = 1/(2 delta^2) needs a finite horizon");
            sigma = 1.0 / (2.0 * delta * delta);
            break;
    }
    detail::require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");

    KernelSpec k;
    k.case_ = kernel_case;
    k.s_ = s;
    k.delta_ = delta;
    k.sigma_ = sigma;
    k.mode_ = sigma_mode;
    k.n_ = n;
    return k;
}

inline KernelSpec KernelSpec::with_delta(double delta) const {
    return make_kernel(case_, s_, delta, mode_, n_);
}

/// gamma as a function of the distance r. Zero beyond the horizon.
inline double kernel_value(const KernelSpec& spec, double r) {
    if (r < 0.0 || std::isnan(r)) throw std::domain_error("kernel distance must be non-negative");
    if (r > spec.delta()) return 0.0;
    if (spec.singular() && r == 0.0)
        throw std::domain_error("singular kernel evaluated on the diagonal");
    return spec.sigma() * std::pow(r, spec.exponent());
}

/// Integral of r^k g(r) over [a, b] for the untruncated profile g(r) = sigma r^p.
/// `a` may be zero when the integrand is integrable there, `b` may be
/// infinite when the tail is integrable.
inline double radial_moment(const KernelSpec& spec, int k, double a, double b) {
    detail::require(a >= 0.0 && b >= a, "radial moment needs 0 <= a <= b");
    if (a == b) return 0.0;
    const double e = static_cast<double>(k) + spec.exponent() + 1.0;
    if (std::isinf(b)) {
        if (e >= 0.0) throw NumericalError("radial tail integral diverges at infinity");
        return -spec.sigma() * std::pow(a, e) / e;
    }
    if (a == 0.0) {
        if (e <= 0.0) throw NumericalError("radial moment diverges at r = 0");
        return spec.sigma() * std::pow(b, e) / e;
    }
    const double log_ratio = std::log(b / a);
    if (std::abs(e) < 1e-14) return spec.sigma() * log_ratio;
    // (b^e - a^e) / e without cancellation for small |e|.
    return spec.sigma() * std::pow(a, e) * std::expm1(e * log_ratio) / e;
}

/// Closed-form integral of the (untruncated) radial profile over [a, b].
inline double radial_tail_integral(const KernelSpec& spec, double a, double b) {
    detail::require(a > 0.0 && b >= a, "radial tail integral needs 0 < a <= b");
    return radial_moment(spec, 0, a, b);
}

/// Coefficient C(delta, n) of the mass term that turns the truncated
/// operator into its infinite-horizon counterpart when delta >= diam(Omega):
/// C = 2 * integral of the untruncated kernel over |z| > delta.
inline double truncation_constant(const KernelSpec& spec) {
    if (spec.kernel_case() != KernelCase::FractionalType)
        throw NumericalError("truncation constant needs an integrable tail; " +
                             to_string(spec.kernel_case()) + " kernel diverges");
    detail::require(spec.finite_horizon(), "truncation constant needs a finite horizon");
    const double n = spec.dimension();
    const double s = *spec.s();
    const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
    return 2.0 * spec.sigma() * sphere * std::pow(spec.delta(), -2.0 * s) / (2.0 * s);
}

}  // namespace nlvi
