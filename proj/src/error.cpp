#include "collapsim/error.hpp"

namespace collapsim {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::DegenerateInput: return "degenerate-input error";
    case ErrorKind::Resource: return "resource error";
    case ErrorKind::KernelIntegrity: return "kernel-integrity error";
    case ErrorKind::StepSize: return "step-size error";
    case ErrorKind::NumericalOverflow: return "numerical-overflow error";
    case ErrorKind::DegenerateHit: return "degenerate-hit error";
    case ErrorKind::DegenerateDynamics: return "degenerate-dynamics error";
    case ErrorKind::UnsupportedModel: return "unsupported-model error";
    case ErrorKind::InconclusiveCollapse: return "inconclusive-collapse error";
    case ErrorKind::FitQuality: return "fit-quality error";
    case ErrorKind::Data: return "data error";
    }
    return "error";
}

}  // namespace collapsim
