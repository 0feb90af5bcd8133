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

#pragma once

#include <Eigen/Core>

namespace facefill {

/// First/second moment state for Adam (beta1 = 0.9, beta2 = 0.999,
/// eps = 1e-8).
struct AdamState {
    Eigen::VectorXd m, v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(Eigen::Index n = 0)
        : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// One bias-corrected Adam update, in place. Rejects non-finite gradients
/// with the offending index in the message.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               AdamState& state, double lr);

} // namespace facefill
