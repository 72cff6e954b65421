// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mtdfl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MTDFL_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

MTDFL_DEFINE_ERROR(InvalidStateError);
MTDFL_DEFINE_ERROR(DomainError);
MTDFL_DEFINE_ERROR(InfeasibleLinkError);
MTDFL_DEFINE_ERROR(ShapeError);
MTDFL_DEFINE_ERROR(TrainingError);
MTDFL_DEFINE_ERROR(AggregationError);
MTDFL_DEFINE_ERROR(DegenerateStatisticsError);
MTDFL_DEFINE_ERROR(ConfigError);
MTDFL_DEFINE_ERROR(InsufficientHistoryError);
MTDFL_DEFINE_ERROR(ParseError);
MTDFL_DEFINE_ERROR(IoError);

#undef MTDFL_DEFINE_ERROR

}  // namespace mtdfl
