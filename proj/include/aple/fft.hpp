// SPDX-License-Identifier: Apache-2.0
//
// aple — scalable near-field localization with partitioned planar arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>

namespace aple::fft {

std::size_t next_pow2(std::size_t n);

/// In-place radix-2 transform, n a power of two. Forward uses e^{-j2pi k n/N};
/// the inverse is unnormalized.
void transform_pow2(std::complex<double>* data, std::size_t n, bool inverse);

/// 2-D forward transform over a power-of-two-sized matrix (rows then columns).
void transform2d(Eigen::MatrixXcd& m, bool inverse);

} // namespace aple::fft
