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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace facefill {

enum class Split { train, validation, test };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

/// Identity-disjoint partition: every identity belongs to exactly one split.
struct SplitAssignment {
    std::map<int, Split> by_identity;

    Split at(int identity) const;
    std::vector<int> identities(Split s) const; // ascending
};

/// Deterministic 6:2:2 split by identity count (rounded; the test set takes
/// the remainder). Requires at least 5 identities.
SplitAssignment split_dataset(const std::vector<int>& identities,
                              std::uint64_t seed);

} // namespace facefill
