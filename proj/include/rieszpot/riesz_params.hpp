#ifndef RIESZPOT_RIESZ_PARAMS_HPP_
#define RIESZPOT_RIESZ_PARAMS_HPP_

#include <cmath>
#include <cstddef>

#include "rieszpot/error.hpp"

namespace rieszpot {

/// Ambient dimension n >= 2 and Riesz order 0 < alpha <= 2, alpha < n.
struct RieszParams {
    std::size_t n = 3;
    double alpha = 2.0;

    RieszParams() = default;
    RieszParams(std::size_t n_, double alpha_) : n(n_), alpha(alpha_) { validate(); }

    void validate() const {
        require(n >= 2, "ambient dimension must be at least 2");
        require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 2.0, "alpha must lie in (0, 2]");
        require(alpha < static_cast<double>(n), "alpha must be smaller than the dimension");
    }

    /// Kernel exponent alpha - n (always negative).
    double exponent() const { return alpha - static_cast<double>(n); }
    bool newtonian() const { return alpha == 2.0 && n == 3; }

    bool operator==(const RieszParams&) const = default;
};

} // namespace rieszpot

#endif // RIESZPOT_RIESZ_PARAMS_HPP_
