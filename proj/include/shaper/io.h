// Copyright 2026 The Shaper Authors.
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

#ifndef SHAPER_IO_H_
#define SHAPER_IO_H_

#include <string>
#include <string_view>

namespace shaper {

// Whole-file read; throws a data error when the file cannot be opened.
std::string ReadFile(const std::string& path);

// Writes to "<path>.tmp" and renames over `path`, so readers never observe a
// partially written file. Throws a data error on failure.
void WriteFileAtomic(const std::string& path, std::string_view contents);

// Round-trippable decimal form of a double ("%.17g").
std::string FormatDouble(double v);

}  // namespace shaper

#endif  // SHAPER_IO_H_
