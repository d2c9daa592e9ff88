// Copyright 2026-present the permlearn project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace permlearn {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct SizeError : Error {
    using Error::Error;
};

struct FeasibilityError : Error {
    using Error::Error;
};

struct OverflowError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

struct TapeError : Error {
    using Error::Error;
};

}  // namespace permlearn
