#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace semaigc {

// Image semantic information z at a given diffusion step. step counts down
// from T (pure noise) to 0 (clean latent).
struct Latent {
    std::vector<double> values;
    int step = 0;

    int dim() const { return static_cast<int>(values.size()); }

    void require_finite() const {
        for (double v : values) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("Latent: non-finite value");
            }
        }
    }
};

// Conditioning for generation: a discrete label plus its embedding vector.
struct Guidance {
    int label = 0;
    std::vector<double> embedding;
};

}  // namespace semaigc
