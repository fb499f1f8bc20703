#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gradix {

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;   // worst error seen
    double tolerance = 0.0;
    std::string detail;
};

/// The property suite: autodiff against finite differences, quadrature
/// exactness, Sobol reference points, erf, residuals at exact solutions,
/// characteristic-oracle agreement, manufactured graded-index residuals and
/// the training-error identity. The last entry times the whole suite.
std::vector<CheckResult> run_verify_suite();

/// One line per check; returns true when every check passed.
bool print_checks(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace gradix
