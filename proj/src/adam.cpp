/* Copyright (c) 2026 The facefill Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "facefill/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace facefill {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               AdamState& state, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam_step: lr must be positive");
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    for (Eigen::Index i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads(i))) {
            throw std::runtime_error("adam_step: non-finite gradient at index " +
                                     std::to_string(i) + " (value " +
                                     std::to_string(grads(i)) + ")");
        }
    }
    ++state.t;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v.array().matrix() +
              (1.0 - state.beta2) * grads.array().square().matrix();
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    const Eigen::ArrayXd m_hat = state.m.array() / bc1;
    const Eigen::ArrayXd v_hat = state.v.array() / bc2;
    params.array() -= lr * m_hat / (v_hat.sqrt() + state.eps);
}

} // namespace facefill
