// Copyright 2026 The hginet-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>

// Row-major accumulate-into kernels shared by matmul, linear and conv2d.
namespace hgi::gemm {

// c[m×n] += a[m×k]·b[k×n]
void nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
        const double* b, double* c);
// c[m×k] += g[m×n]·b[k×n]ᵀ
void nt(std::size_t m, std::size_t n, std::size_t k, const double* g,
        const double* b, double* c);
// c[k×n] += a[m×k]ᵀ·g[m×n]
void tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
        const double* g, double* c);

}  // namespace hgi::gemm
