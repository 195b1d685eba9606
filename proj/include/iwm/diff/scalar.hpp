#pragma once

#include <cmath>

namespace iwm::diff {

// symlog(x) = sign(x) ln(1+|x|), its inverse symexp; both C1 at the origin.
inline double symlog_d(double x) { return x >= 0.0 ? std::log1p(x) : -std::log1p(-x); }
inline double symexp_d(double x) { return x >= 0.0 ? std::expm1(x) : -std::expm1(-x); }

}  // namespace iwm::diff
