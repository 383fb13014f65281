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
#ifndef OVSNET_OVSNET_HPP
#define OVSNET_OVSNET_HPP

#include "ovsnet/bench.hpp"
#include "ovsnet/embedding.hpp"
#include "ovsnet/errors.hpp"
#include "ovsnet/fusion.hpp"
#include "ovsnet/io.hpp"
#include "ovsnet/mask.hpp"
#include "ovsnet/metrics.hpp"
#include "ovsnet/parallel.hpp"
#include "ovsnet/proxy.hpp"
#include "ovsnet/random.hpp"
#include "ovsnet/version.hpp"

#endif  // OVSNET_OVSNET_HPP
