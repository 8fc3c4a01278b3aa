#include "spe/error.hpp"

namespace spe {

const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::DuplicateCoord: return "DuplicateCoord";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::BadVectorLength: return "BadVectorLength";
    case Errc::UnsortedInput: return "UnsortedInput";
    case Errc::StrideUnsupported: return "StrideUnsupported";
    case Errc::BadKernelShape: return "BadKernelShape";
    case Errc::SelectionNotSubset: return "SelectionNotSubset";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyCalibrationPool: return "EmptyCalibrationPool";
    case Errc::SpecMismatch: return "SpecMismatch";
    case Errc::DensityOverflow: return "DensityOverflow";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace spe
