#ifndef RKCQ_CONVERGENCE_HPP
#define RKCQ_CONVERGENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rkcq {

/// Shortest decimal form that round-trips a double.
inline std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct ConvergenceLevel {
    double k = 0.0;
    double error = 0.0;
    /// Set for levels below a roundoff floor; EOC values touching them are
    /// left out of tail statistics.
    bool excluded = false;
};

/// Per-level (k, error) pairs with the empirical orders
/// eoc_i = log(e_{i-1}/e_i) / log(k_{i-1}/k_i).
struct ConvergenceReport {
    std::string experiment;
    std::string method;
    std::string quantity;
    std::vector<ConvergenceLevel> levels;
    std::vector<double> eoc;
    bool valid = true;
    std::string invalid_reason;
    std::map<std::string, std::string> metadata;

    void compute_eoc()
    {
        for (std::size_t i = 1; i < levels.size(); ++i) {
            if (!(levels[i].k < levels[i - 1].k)) {
                throw std::invalid_argument("ConvergenceReport: levels must be sorted by decreasing k");
            }
        }
        eoc.clear();
        for (std::size_t i = 1; i < levels.size(); ++i) {
            eoc.push_back(std::log(levels[i - 1].error / levels[i].error) / std::log(levels[i - 1].k / levels[i].k));
        }
    }

    /// Median of the last `count` EOC values whose two levels are both
    /// retained. Empty if none qualify.
    std::optional<double> median_tail_eoc(std::size_t count = 3) const
    {
        std::vector<double> usable;
        for (std::size_t i = 1; i < levels.size() && i - 1 < eoc.size(); ++i) {
            if (!levels[i].excluded && !levels[i - 1].excluded && std::isfinite(eoc[i - 1])) {
                usable.push_back(eoc[i - 1]);
            }
        }
        if (usable.empty()) {
            return std::nullopt;
        }
        if (usable.size() > count) {
            usable.erase(usable.begin(), usable.end() - static_cast<std::ptrdiff_t>(count));
        }
        std::sort(usable.begin(), usable.end());
        const std::size_t n = usable.size();
        return n % 2 == 1 ? usable[n / 2] : 0.5 * (usable[n / 2 - 1] + usable[n / 2]);
    }

    bool errors_strictly_decreasing() const
    {
        for (std::size_t i = 1; i < levels.size(); ++i) {
            if (!(levels[i].error < levels[i - 1].error)) {
                return false;
            }
        }
        return true;
    }
};

} // namespace rkcq

#endif // RKCQ_CONVERGENCE_HPP
