#pragma once

#include <stdexcept>
#include <string>

namespace spe {

enum class Errc {
    DuplicateCoord,
    OutOfBounds,
    BadVectorLength,
    UnsortedInput,
    StrideUnsupported,
    BadKernelShape,
    SelectionNotSubset,
    ShapeMismatch,
    EmptyCalibrationPool,
    SpecMismatch,
    DensityOverflow,
    ParseError,
    IoError,
    InvalidArgument,
};

const char* errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can dispatch on the kind rather than the message.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace spe
