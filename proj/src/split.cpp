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

#include "facefill/split.hpp"

#include "facefill/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace facefill {

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    throw std::invalid_argument("unknown split name: " + name);
}

Split SplitAssignment::at(int identity) const {
    const auto it = by_identity.find(identity);
    if (it == by_identity.end()) {
        throw std::invalid_argument("identity not in split: " + std::to_string(identity));
    }
    return it->second;
}

std::vector<int> SplitAssignment::identities(Split s) const {
    std::vector<int> out;
    for (const auto& [id, sp] : by_identity) {
        if (sp == s) out.push_back(id);
    }
    return out;
}

SplitAssignment split_dataset(const std::vector<int>& identities,
                              std::uint64_t seed) {
    if (identities.size() < 5) {
        throw std::invalid_argument("split_dataset: need at least 5 identities");
    }
    if (std::set<int>(identities.begin(), identities.end()).size() != identities.size()) {
        throw std::invalid_argument("split_dataset: identities must be unique");
    }
    std::vector<int> order(identities);
    std::sort(order.begin(), order.end()); // independent of caller's ordering
    Rng rng(mix_seed(seed, 0x73706c6974ULL)); // "split"
    // Fisher-Yates.
    for (size_t i = order.size() - 1; i > 0; --i) {
        const size_t j = rng.uniform_index(i + 1);
        std::swap(order[i], order[j]);
    }
    const auto n = static_cast<double>(order.size());
    const size_t n_train = static_cast<size_t>(std::llround(0.6 * n));
    const size_t n_val = static_cast<size_t>(std::llround(0.2 * n));
    SplitAssignment split;
    for (size_t i = 0; i < order.size(); ++i) {
        const Split s = i < n_train ? Split::train
                        : i < n_train + n_val ? Split::validation
                                              : Split::test;
        split.by_identity[order[i]] = s;
    }
    return split;
}

} // namespace facefill
