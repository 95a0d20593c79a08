#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace lipcert {

enum class Method { kSsSdp, kDenseSdp, kSpectral, kEmpirical };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct SolverStats {
  std::string backend;
  std::string status;
  int iterations = 0;
  double wall_ms = 0.0;
  double relative_gap = 0.0;
  double lmi_residual = 0.0;
};

enum class AuditStatus { kNotRun, kPass, kFail };

struct Certificate {
  Method method = Method::kSsSdp;
  double gamma = 0.0;
  double gamma_tilde = 0.0;
  double mu_product = 1.0;
  std::optional<int> n0;  // dense-sdp only
  std::map<std::string, Eigen::MatrixXd> multipliers;
  SolverStats solver;
  AuditStatus audit = AuditStatus::kNotRun;
  std::uint64_t problem_fingerprint = 0;
};

inline constexpr std::string_view kCertificateFormat = "lipcert-cert-v1";

/// Throws Error{ParseError} on malformed input.
Certificate certificate_from_json(const std::string& text);
std::string certificate_to_json(const Certificate& cert);
Certificate load_certificate(const std::filesystem::path& path);
void save_certificate(const Certificate& cert, const std::filesystem::path& path);

}  // namespace lipcert
