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
#ifndef OVSNET_ERRORS_HPP
#define OVSNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ovsnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameters: bad flag values, out-of-range
// hyperparameters, non-convergent solver configurations. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent data: file format violations, shape mismatches,
// degenerate inputs such as zero-norm embeddings. CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace ovsnet

#endif  // OVSNET_ERRORS_HPP
