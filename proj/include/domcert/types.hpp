#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace domcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Error with a stable machine-readable code, mapped to CLI diagnostics.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
  throw Error(code, what);
}

namespace defaults {
// Relative gap threshold below which U_p / S_{d-p} are declared undefined.
inline constexpr double tol_gap = 1e-8;
// Cauchy-residual target for limit-space iterations.
inline constexpr double residual_target = 1e-6;
// Smallest containment margin accepted as a certificate.
inline constexpr double margin_floor = 1e-6;
// Ball enumeration cap.
inline constexpr std::size_t ball_cap = 2'000'000;
inline constexpr int ell_min = 8;
inline constexpr int max_bg_depth = 500;
inline constexpr int cone_probe_radius = 4;
}  // namespace defaults

}  // namespace domcert
