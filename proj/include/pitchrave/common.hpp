// Copyright 2026 The PitchRAVE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PITCHRAVE_COMMON_HPP_
#define PITCHRAVE_COMMON_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pitchrave {

// Storage type of autodiff tensors. Signal processing and metrics always run
// in double; only the tensor engine follows this alias.
#ifdef PITCHRAVE_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

inline constexpr int kSampleRate = 16000;
inline constexpr int kNumNotes = 88;
inline constexpr int kLowestMidiNote = 21;

// Base of all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate a precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data (files, manifests, records).
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf detected or a numerically undefined quantity requested.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline bool IsPowerOfTwo(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace pitchrave

#endif  // PITCHRAVE_COMMON_HPP_
