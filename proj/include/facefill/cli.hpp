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

namespace facefill {

/// Command-line entry point. Subcommands: gen-data, pretrain, finetune,
/// eval, repair, extract, export, report. Returns 0 on success, 1 on usage
/// errors, 2 on data/validation errors.
int dispatch(int argc, const char* const* argv);

} // namespace facefill
