#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lipcert/certificate.hpp"
#include "lipcert/error.hpp"

namespace lipcert {

using nlohmann::json;

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kSsSdp: return "ss-sdp";
    case Method::kDenseSdp: return "dense-sdp";
    case Method::kSpectral: return "spectral";
    case Method::kEmpirical: return "empirical";
  }
  return "ss-sdp";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kSsSdp, Method::kDenseSdp, Method::kSpectral, Method::kEmpirical})
    if (method_name(m) == name) return m;
  return std::nullopt;
}

namespace {

const char* audit_name(AuditStatus s) {
  switch (s) {
    case AuditStatus::kNotRun: return "not_run";
    case AuditStatus::kPass: return "PASS";
    case AuditStatus::kFail: return "FAIL";
  }
  return "not_run";
}

AuditStatus parse_audit(const std::string& s) {
  if (s == "PASS") return AuditStatus::kPass;
  if (s == "FAIL") return AuditStatus::kFail;
  if (s == "not_run") return AuditStatus::kNotRun;
  throw Error(ErrorCode::kParseError, "unknown audit status '" + s + "'");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (!rows.is_array()) throw Error(ErrorCode::kParseError, "multiplier must be an array of rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index cols = n == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(n, cols);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::kParseError, "multiplier rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

std::string certificate_to_json(const Certificate& cert) {
  json doc;
  doc["format"] = kCertificateFormat;
  doc["method"] = std::string(method_name(cert.method));
  doc["gamma"] = cert.gamma;
  doc["gamma_tilde"] = cert.gamma_tilde;
  doc["mu_product"] = cert.mu_product;
  if (cert.n0) doc["n0"] = *cert.n0;
  json mult = json::object();
  for (const auto& [name, m] : cert.multipliers) mult[name] = matrix_to_json(m);
  doc["multipliers"] = std::move(mult);
  doc["solver"] = {{"backend", cert.solver.backend},
                   {"status", cert.solver.status},
                   {"iterations", cert.solver.iterations},
                   {"wall_ms", cert.solver.wall_ms},
                   {"relative_gap", cert.solver.relative_gap},
                   {"lmi_residual", cert.solver.lmi_residual}};
  doc["audit"] = audit_name(cert.audit);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(cert.problem_fingerprint));
  doc["problem_fingerprint"] = hex;
  return doc.dump(2) + "\n";
}

Certificate certificate_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != kCertificateFormat) {
      throw Error(ErrorCode::kParseError, "not a lipcert-cert-v1 document");
    }
    Certificate cert;
    const std::string method = doc.at("method").get<std::string>();
    auto m = parse_method(method);
    if (!m || (*m != Method::kSsSdp && *m != Method::kDenseSdp)) {
      throw Error(ErrorCode::kParseError, "certificate method must be ss-sdp or dense-sdp");
    }
    cert.method = *m;
    cert.gamma = doc.at("gamma").get<double>();
    cert.gamma_tilde = doc.at("gamma_tilde").get<double>();
    cert.mu_product = doc.at("mu_product").get<double>();
    if (doc.contains("n0")) cert.n0 = doc.at("n0").get<int>();
    for (const auto& [name, value] : doc.at("multipliers").items()) cert.multipliers[name] = matrix_from_json(value);
    if (doc.contains("solver")) {
      const json& s = doc.at("solver");
      cert.solver.backend = s.value("backend", std::string());
      cert.solver.status = s.value("status", std::string());
      cert.solver.iterations = s.value("iterations", 0);
      cert.solver.wall_ms = s.value("wall_ms", 0.0);
      cert.solver.relative_gap = s.value("relative_gap", 0.0);
      cert.solver.lmi_residual = s.value("lmi_residual", 0.0);
    }
    cert.audit = parse_audit(doc.value("audit", std::string("not_run")));
    if (doc.contains("problem_fingerprint")) {
      cert.problem_fingerprint = std::stoull(doc.at("problem_fingerprint").get<std::string>(), nullptr, 16);
    }
    return cert;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::kParseError, "bad problem_fingerprint");
  }
}

Certificate load_certificate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return certificate_from_json(buffer.str());
}

void save_certificate(const Certificate& cert, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kParseError, "cannot write " + path.string());
  out << certificate_to_json(cert);
}

}  // namespace lipcert
