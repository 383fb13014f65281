/* Copyright 2026 The OVSNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef OVSNET_VERSION_HPP
#define OVSNET_VERSION_HPP

#include <string_view>

namespace ovsnet {

// Version string embedded in every machine-readable output (JSON, CSV,
// manifests). Bump when an output schema changes shape.
inline constexpr std::string_view kFormatVersion = "ovsnet-1";

}  // namespace ovsnet

#endif  // OVSNET_VERSION_HPP
