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

#ifndef SHAPER_RUNTIME_H_
#define SHAPER_RUNTIME_H_

namespace shaper {

// Keeps large activation buffers on the heap instead of mapping fresh pages
// for every allocation. Training allocates and frees many multi-megabyte
// tensors per step, and the default glibc thresholds turn each of them into
// an mmap/munmap pair. Call once at program start; a no-op elsewhere.
void TuneAllocator();

}  // namespace shaper

#endif  // SHAPER_RUNTIME_H_
