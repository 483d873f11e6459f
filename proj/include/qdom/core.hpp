#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdom {

using cplx = std::complex<double>;
using cplxl = std::complex<long double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;

enum class ErrorCode {
    InvalidArgument,
    Unsupported,
    NoRoot,
    NotImplemented,
    LossOfOrthogonality,
    NonConvergence,
    SelfIntersection,
    DegenerateMap,
    StiffRegion,
    SignFlip,
    StepTooSmall,
    IterationCap,
    CoincidentPoints,
    Io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::NotImplemented: return "NotImplemented";
    case ErrorCode::LossOfOrthogonality: return "LossOfOrthogonality";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SelfIntersection: return "SelfIntersection";
    case ErrorCode::DegenerateMap: return "DegenerateMap";
    case ErrorCode::StiffRegion: return "StiffRegion";
    case ErrorCode::SignFlip: return "SignFlip";
    case ErrorCode::StepTooSmall: return "StepTooSmall";
    case ErrorCode::IterationCap: return "IterationCap";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// A real number or +infinity, with the infinite case explicit instead of a
/// floating-point inf that could leak into later arithmetic.
class ExtendedReal {
public:
    constexpr ExtendedReal(double v = 0.0) : value_(v), infinite_(false) {}

    static constexpr ExtendedReal infinity() {
        ExtendedReal r;
        r.infinite_ = true;
        return r;
    }

    constexpr bool is_finite() const { return !infinite_; }
    constexpr bool is_infinite() const { return infinite_; }

    double value() const {
        if (infinite_)
            throw Error(ErrorCode::InvalidArgument, "value() on +infinity");
        return value_;
    }

    constexpr double value_or(double fallback) const { return infinite_ ? fallback : value_; }

    friend constexpr ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_ || b.infinite_)
            return infinity();
        return ExtendedReal(a.value_ + b.value_);
    }
    friend constexpr ExtendedReal operator-(ExtendedReal a, double b) {
        if (a.infinite_)
            return infinity();
        return ExtendedReal(a.value_ - b);
    }
    friend constexpr ExtendedReal operator*(double s, ExtendedReal a) {
        // only nonnegative scalings keep the +infinity marker meaningful
        if (a.infinite_)
            return s == 0.0 ? ExtendedReal(0.0) : infinity();
        return ExtendedReal(s * a.value_);
    }
    friend constexpr bool operator<(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_)
            return false;
        return b.infinite_ || a.value_ < b.value_;
    }
    friend constexpr bool operator>=(ExtendedReal a, ExtendedReal b) { return !(a < b); }

private:
    double value_;
    bool infinite_;
};

/// Pairwise summation with a fixed reduction order (results are reproducible
/// bit for bit for a given input order).
template <class T>
T pairwise_sum(std::span<const T> xs) {
    constexpr std::size_t block = 64;
    if (xs.size() <= block) {
        T acc{};
        for (const T& x : xs)
            acc += x;
        return acc;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

template <class T>
T pairwise_sum(const std::vector<T>& xs) {
    return pairwise_sum(std::span<const T>(xs.data(), xs.size()));
}

template <class R>
constexpr R sqr(R x) { return x * x; }

} // namespace qdom
