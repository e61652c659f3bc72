#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relq/nn.hpp"

namespace relq {

// Analytic-vs-central-finite-difference comparison for the three training
// losses, on small random double-precision nets positioned away from the
// non-smooth points (relu kinks, |.| at zero).
struct GradCheckEntry {
    std::string loss_name;
    std::string net_shape;
    double max_rel_err = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;

    double worst() const {
        double w = 0;
        for (const auto& e : entries) w = std::max(w, e.max_rel_err);
        return w;
    }
    bool all_ok(double tol = 1e-4) const { return worst() < tol; }
};

GradCheckReport run_gradcheck(uint64_t seed = 42);

// Largest relative disagreement between two parameter-shaped gradients.
double max_rel_err(const ParamShaped<double>& analytic, const ParamShaped<double>& oracle);

}  // namespace relq
