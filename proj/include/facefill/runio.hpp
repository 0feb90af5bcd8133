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

/// FNV-1a 64-bit content hash, hex-encoded.
std::string content_hash_hex(const std::string& bytes);
std::string file_content_hash(const std::string& path);

/// Write-to-temp-then-rename, so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& contents);

/// Record of one CLI run: the command, its effective configuration, content
/// hashes of the inputs, the produced paths, duration and seed. Written
/// atomically at run end.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::map<std::string, std::string> input_hashes;
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;
    std::uint64_t seed = 0;
};

void write_run_manifest(const RunManifest& manifest, const std::string& path);

} // namespace facefill
