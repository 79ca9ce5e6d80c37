#include "inkwell/optim.hpp"

#include <cmath>

#include "inkwell/error.hpp"

namespace inkwell {

OptimState OptimState::for_params(const UNetParams& p)
{
    OptimState s;
    for (const auto& b : p.blocks) {
        s.first.emplace_back(b.value.size(), 0.0);
        s.second.emplace_back(b.value.size(), 0.0);
    }
    return s;
}

void adam_step(UNetParams& p, const ParamGrads& grads, OptimState& state, double lr, const AdamOptions& opt)
{
    if (grads.size() != p.blocks.size() || state.first.size() != p.blocks.size())
        throw ShapeError("adam_step: parameter, gradient and state block counts differ");
    for (std::size_t b = 0; b < grads.size(); ++b) {
        if (grads[b].size() != p.blocks[b].value.size() || state.first[b].size() != grads[b].size())
            throw ShapeError("adam_step: size mismatch in block '" + p.blocks[b].name + "'");
        for (double g : grads[b].data()) {
            if (!std::isfinite(g)) throw TrainingError("non-finite gradient in parameter block '" + p.blocks[b].name + "'");
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(opt.beta1, t);
    const double c2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t b = 0; b < grads.size(); ++b) {
        auto w = p.blocks[b].value.data();
        const auto g = grads[b].data();
        auto& m = state.first[b];
        auto& v = state.second[b];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + opt.epsilon);
        }
    }
}

}  // namespace inkwell
