#pragma once

#include <stdexcept>
#include <string>

namespace seqrank {

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define SEQRANK_DEFINE_ERROR(Name)                         \
  struct Name : Error {                                    \
    explicit Name(const std::string& msg) : Error(msg) {}  \
  }

SEQRANK_DEFINE_ERROR(InvalidObservation);  // non-finite data point
SEQRANK_DEFINE_ERROR(InvalidRandomizer);   // randomization variable outside (0,1)
SEQRANK_DEFINE_ERROR(TiesPresent);         // tie-free precondition violated
SEQRANK_DEFINE_ERROR(InvalidInput);        // empty/mismatched containers
SEQRANK_DEFINE_ERROR(InvalidRank);         // rank outside [0,1]
SEQRANK_DEFINE_ERROR(InvalidCounts);       // count matrix inconsistent with N
SEQRANK_DEFINE_ERROR(InvalidMatrix);       // non-positive entry in cell matrix
SEQRANK_DEFINE_ERROR(InvalidRectangle);    // degenerate or out-of-range rectangle
SEQRANK_DEFINE_ERROR(InvalidDepth);        // bad grid depth / BET order
SEQRANK_DEFINE_ERROR(ConfigError);         // invalid session or aggregator config
SEQRANK_DEFINE_ERROR(ObserveAfterStop);    // observation after the session stopped
SEQRANK_DEFINE_ERROR(CorruptSnapshot);     // unparsable snapshot payload
SEQRANK_DEFINE_ERROR(SnapshotVersionMismatch);
SEQRANK_DEFINE_ERROR(DataError);           // malformed input file

#undef SEQRANK_DEFINE_ERROR

}  // namespace seqrank
