#ifndef SEMSEL_ERRORS_HPP
#define SEMSEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace semsel {

/// Bad user input at the configuration level: malformed model grammar,
/// missing columns, non-nested candidate specifications, invalid study
/// parameters. Maps to CLI exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Unusable data: non-finite values, too few rows for the requested fit,
/// empty datasets. Maps to CLI exit code 3.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical degeneracy: a perfect in-sample fit (sigma2 = 0), a zero
/// covariance block, a matrix that is not positive semidefinite, or a
/// selection run where every candidate was degenerate. Maps to CLI exit
/// code 4.
class degeneracy_error : public std::runtime_error {
public:
    explicit degeneracy_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace semsel

#endif // SEMSEL_ERRORS_HPP
