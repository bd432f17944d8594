#include "lsps/ols.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lsps/error.hpp"

namespace lsps {

StratumOls fit_ols_stratum(std::span<const double> y, std::span<const std::uint8_t> t) {
    if (y.size() != t.size()) throw ConfigError("outcome and treatment lengths differ");
    double sum[2] = {0.0, 0.0};
    double count[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < y.size(); ++i) {
        sum[t[i]] += y[i];
        count[t[i]] += 1.0;
    }
    if (count[0] == 0.0 || count[1] == 0.0)
        throw DataError("stratum regression needs both groups (treated " +
                        std::to_string(static_cast<long>(count[1])) + ", control " +
                        std::to_string(static_cast<long>(count[0])) + ")");
    const double mean0 = sum[0] / count[0];
    const double mean1 = sum[1] / count[1];
    double rss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - (t[i] ? mean1 : mean0);
        rss += e * e;
    }
    StratumOls fit;
    fit.alpha = mean0;
    fit.nu = mean1 - mean0;
    const double dof = count[0] + count[1] - 2.0;
    fit.se_nu = dof > 0.0 ? std::sqrt(rss / dof * (1.0 / count[0] + 1.0 / count[1]))
                          : std::numeric_limits<double>::infinity();
    return fit;
}

}  // namespace lsps
