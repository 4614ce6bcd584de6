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


#ifndef PITCHRAVE_BRANCH_TRACE_HPP_
#define PITCHRAVE_BRANCH_TRACE_HPP_

#include <cstdint>

namespace pitchrave {

// Fingerprint of the branches taken at non-smooth points (ReLU, |.|) during
// one evaluation. Two evaluations with equal signatures lie on the same
// smooth piece of the function, so a finite difference between them is a
// valid derivative estimate. Instrumented code calls BranchTrace::Active()
// once per loop and notes each sign decision; with no trace installed that
// pointer is null and the cost is one branch.
class BranchTrace {
 public:
  // Installs this trace for the current thread until destruction.
  BranchTrace() : previous_(active_) { active_ = this; }
  ~BranchTrace() { active_ = previous_; }
  BranchTrace(const BranchTrace&) = delete;
  BranchTrace& operator=(const BranchTrace&) = delete;

  static BranchTrace* Active() { return active_; }

  // Three-way sign so that an exact zero is its own branch.
  void Note(double v) {
    const std::uint64_t side = v > 0 ? 1 : (v < 0 ? 2 : 3);
    hash_ = (hash_ ^ side) * 0x100000001b3ULL;
  }

  std::uint64_t signature() const { return hash_; }

 private:
  static inline thread_local BranchTrace* active_ = nullptr;
  BranchTrace* previous_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace pitchrave

#endif  // PITCHRAVE_BRANCH_TRACE_HPP_
