// Copyright 2026 The revloc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace revloc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define REVLOC_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

REVLOC_DEFINE_ERROR(MalformedSourceError);
REVLOC_DEFINE_ERROR(RevisionOrderError);
REVLOC_DEFINE_ERROR(UnresolvedReferenceError);
REVLOC_DEFINE_ERROR(ShapeError);
REVLOC_DEFINE_ERROR(VocabularyError);
REVLOC_DEFINE_ERROR(NumericError);
REVLOC_DEFINE_ERROR(EmptySequenceError);
REVLOC_DEFINE_ERROR(DegenerateInputError);
REVLOC_DEFINE_ERROR(EmptyEvaluationError);
REVLOC_DEFINE_ERROR(PlanningError);
REVLOC_DEFINE_ERROR(ArgumentError);
REVLOC_DEFINE_ERROR(FormatError);

#undef REVLOC_DEFINE_ERROR

}  // namespace revloc
