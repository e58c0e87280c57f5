#include "lab/errors.hpp"

#include <utility>

namespace lab {

ConvergenceFailure::ConvergenceFailure(const std::string& what, double residual,
                                       std::vector<double> last_iterate, double lambda)
    : std::runtime_error(what), residual_(residual), last_(std::move(last_iterate)), lambda_(lambda) {}

CalibrationFailure::CalibrationFailure(const std::string& what, std::string worst_check,
                                       double worst_margin)
    : std::runtime_error(what), worst_check_(std::move(worst_check)), worst_margin_(worst_margin) {}

}  // namespace lab
