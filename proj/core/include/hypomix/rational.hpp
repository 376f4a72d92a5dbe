#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

#include "hypomix/errors.hpp"

namespace hypomix {

/// Exact rational scalar used for all symbolic computations.
using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

/// Parse "num", "-num" or "num/den" (den > 0 after normalization).
inline Rat rat_from_string(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rat(boost::multiprecision::cpp_int(s));
        boost::multiprecision::cpp_int num(s.substr(0, slash));
        boost::multiprecision::cpp_int den(s.substr(slash + 1));
        if (den == 0) throw ValidationError("rational with zero denominator: " + s);
        return Rat(num, den);
    } catch (const std::exception& e) {
        throw ValidationError("cannot parse rational '" + s + "': " + e.what());
    }
}

/// Canonical text form: "num" or "num/den".
inline std::string rat_to_string(const Rat& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

} // namespace hypomix
