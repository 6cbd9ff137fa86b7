#pragma once

#include <stdexcept>
#include <string>

namespace geff {

// Error codes shared with the C API (see capi/include/geff/geff.h).
enum class ErrorCode : int {
    Ok = 0,
    InvalidArgument = 1,
    ShapeError = 2,
    NotScalar = 3,
    NonFinite = 4,
    EmptyCloud = 5,
    EmptyBatch = 6,
    QueryNoMatch = 7,
    NoPath = 8,
    InvalidEndpoint = 9,
    NoReachableGoal = 10,
    PlacementFailed = 11,
    InvalidPixel = 12,
    Io = 13,
    Parse = 14,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

struct InvalidPixelError : Error {
    explicit InvalidPixelError(const std::string& w) : Error(ErrorCode::InvalidPixel, w) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& w) : Error(ErrorCode::ShapeError, w) {}
};
struct NotScalarError : Error {
    explicit NotScalarError(const std::string& w) : Error(ErrorCode::NotScalar, w) {}
};
struct NonFiniteError : Error {
    explicit NonFiniteError(const std::string& w) : Error(ErrorCode::NonFinite, w) {}
};
struct EmptyCloudError : Error {
    explicit EmptyCloudError(const std::string& w) : Error(ErrorCode::EmptyCloud, w) {}
};
struct EmptyBatchError : Error {
    explicit EmptyBatchError(const std::string& w) : Error(ErrorCode::EmptyBatch, w) {}
};
struct QueryNoMatchError : Error {
    // pass_index: 1 = object pass, 2 = part pass (0 when not a two-pass query).
    QueryNoMatchError(int pass_index, const std::string& w)
        : Error(ErrorCode::QueryNoMatch, w), pass(pass_index) {}
    int pass;
};
struct NoReachableGoalError : Error {
    explicit NoReachableGoalError(const std::string& w) : Error(ErrorCode::NoReachableGoal, w) {}
};
struct InvalidEndpointError : Error {
    explicit InvalidEndpointError(const std::string& w) : Error(ErrorCode::InvalidEndpoint, w) {}
};
struct PlacementFailedError : Error {
    explicit PlacementFailedError(const std::string& w) : Error(ErrorCode::PlacementFailed, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorCode::Io, w) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error(ErrorCode::Parse, w) {}
};

}  // namespace geff
