/*
 * Copyright 2026 The attrcam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <iostream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "attrcam/commands.hpp"

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training frees and reallocates the same large tape buffers every batch;
  // keep them in the heap instead of returning them to the kernel.
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  return attrcam::run_cli(argc, argv, std::cout, std::cerr);
}
