// Copyright 2026 The hgt Authors.
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

namespace hgt {

// Root of every error raised by the library. Subclasses name the failure
// category; the message carries the context.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define HGT_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                   \
   public:                                                      \
    using Error::Error;                                         \
    const char* kind() const noexcept override { return #Name; } \
  }

HGT_DEFINE_ERROR(ParseError);
HGT_DEFINE_ERROR(ValidationError);
HGT_DEFINE_ERROR(IndexError);
HGT_DEFINE_ERROR(ShapeError);
HGT_DEFINE_ERROR(StateError);
HGT_DEFINE_ERROR(FormatError);
HGT_DEFINE_ERROR(EmptyClassError);
HGT_DEFINE_ERROR(EmptyInputError);
HGT_DEFINE_ERROR(NormalizationError);
HGT_DEFINE_ERROR(ProbError);
HGT_DEFINE_ERROR(RangeError);
HGT_DEFINE_ERROR(NaNError);
HGT_DEFINE_ERROR(DataError);
HGT_DEFINE_ERROR(IOError);
HGT_DEFINE_ERROR(ConfigError);

#undef HGT_DEFINE_ERROR

// Formats "<kind>: <what>" for user-facing reporting.
std::string describe(const Error& e);

}  // namespace hgt
