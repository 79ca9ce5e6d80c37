#pragma once

#include <cstdint>
#include <vector>

#include "inkwell/unet.hpp"

namespace inkwell {

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators, one pair per parameter block.
struct OptimState {
    std::vector<std::vector<double>> first;
    std::vector<std::vector<double>> second;
    std::int64_t step = 0;

    static OptimState for_params(const UNetParams& p);
};

/// One bias-corrected Adam update. Throws TrainingError naming the first block
/// with a non-finite gradient; in that case nothing is modified.
void adam_step(UNetParams& p, const ParamGrads& grads, OptimState& state, double lr, const AdamOptions& opt = {});

}  // namespace inkwell
