// Copyright 2026 The kgsumm Authors.
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

#ifndef KGSUMM_ERRORS_H_
#define KGSUMM_ERRORS_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace kgsumm {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ServiceUnavailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input. Carries the admissible values when there is a closed set
// (aspect labels, aspect ids).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& message,
                           std::vector<std::string> valid = {})
      : std::runtime_error(message), valid_(std::move(valid)) {}
  const std::vector<std::string>& valid() const { return valid_; }

 private:
  std::vector<std::string> valid_;
};

class EmptyGraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kgsumm

#endif  // KGSUMM_ERRORS_H_
