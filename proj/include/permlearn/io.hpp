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

#include <string>

#include "permlearn/matrix.hpp"

namespace permlearn::io {

enum class Format { Csv, Json };

// Format inferred from the extension (.csv / .json). CSV rows are
// comma-separated decimals; a leading non-numeric row is treated as a header
// and skipped. JSON accepts either a bare array-of-arrays or the
// {"schema_version": 1, "matrix": [...]} document save_matrix emits.
Matrix load_matrix(const std::string& path);

// CSV gets a "c0,c1,..." header and 17-significant-digit decimals; JSON gets
// a schema_version wrapper with exact round-trip doubles.
void save_matrix(const std::string& path, const Matrix& m);
void save_matrix(const std::string& path, const Matrix& m, Format f);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace permlearn::io
