#pragma once

#include <cstdint>
#include <span>

namespace lsps {

// Least-squares fit of y = alpha + nu * t within one stratum.
struct StratumOls {
    double alpha = 0.0;  // control mean
    double nu = 0.0;     // treated mean minus control mean
    double se_nu = 0.0;  // infinite when the stratum has no residual degrees of freedom
};

// Throws DataError when the stratum lacks either group.
StratumOls fit_ols_stratum(std::span<const double> y, std::span<const std::uint8_t> t);

}  // namespace lsps
