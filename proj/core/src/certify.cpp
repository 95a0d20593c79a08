#include "lipcert/certify.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "lipcert/baselines.hpp"
#include "lipcert/error.hpp"

namespace lipcert {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::optional<int> default_length(const ValidatedNetwork& net, std::optional<int> n0) {
  if (n0) return n0;
  return net.implied_input_length();
}

struct GridNetwork {
  ValidatedNetwork net;
  std::optional<int> c1;
  std::optional<int> c2;
  std::optional<std::uint64_t> seed;
};

struct Cell {
  std::size_t network = 0;
  Method method = Method::kSsSdp;
  std::optional<int> n0;
  std::optional<int> audit_n0;
};

ReportRow run_cell(const GridNetwork& g, const Cell& cell, const CompareOptions& options) {
  ReportRow row;
  row.method = std::string(method_name(cell.method));
  row.n0 = cell.n0;
  row.c1 = g.c1;
  row.c2 = g.c2;
  row.seed = g.seed;
  row.kind = cell.method == Method::kEmpirical ? "lower" : "upper";
  const auto start = std::chrono::steady_clock::now();
  try {
    switch (cell.method) {
      case Method::kSsSdp: {
        CertifyOptions co = options.certify;
        if (!co.audit.n0) co.audit.n0 = cell.audit_n0;
        const Certificate cert = certify(g.net, Method::kSsSdp, std::nullopt, co);
        row.bound = cert.gamma;
        row.wall_ms = cert.solver.wall_ms;
        break;
      }
      case Method::kDenseSdp: {
        const Certificate cert = certify(g.net, Method::kDenseSdp, cell.n0, options.certify);
        row.bound = cert.gamma;
        row.wall_ms = cert.solver.wall_ms;
        break;
      }
      case Method::kSpectral:
      case Method::kEmpirical: {
        if (!cell.n0) throw Error(ErrorCode::kInvalidValue, "this method needs an input length");
        row.bound = cell.method == Method::kSpectral
                        ? spectral_product(g.net, *cell.n0)
                        : empirical_lower_bound(g.net, *cell.n0, options.empirical_trials,
                                                options.seed + g.seed.value_or(0));
        row.wall_ms = elapsed_ms(start);
        break;
      }
    }
    row.status = "ok";
  } catch (const Error& e) {
    row.bound = 0.0;
    row.wall_ms = elapsed_ms(start);
    row.status = "error:" + std::string(error_code_name(e.code()));
  }
  return row;
}

std::vector<ReportRow> run_cells(const std::vector<GridNetwork>& nets, const std::vector<Cell>& cells,
                                 const CompareOptions& options) {
  std::vector<ReportRow> rows(cells.size());
  int jobs = options.jobs > 0 ? options.jobs : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      rows[k] = run_cell(nets[cells[k].network], cells[k], options);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

EstimateReport evaluate_grid(const std::vector<GridNetwork>& nets, const std::vector<Method>& methods,
                             const std::vector<int>& n0_values, const CompareOptions& options) {
  if (methods.empty()) throw Error(ErrorCode::kInvalidValue, "no methods requested");

  // n0 values per network; an empty list falls back to the implied length.
  std::vector<std::vector<std::optional<int>>> lengths;
  for (const auto& g : nets) {
    std::vector<std::optional<int>> l;
    if (n0_values.empty()) {
      l.push_back(g.net.implied_input_length());
    } else {
      for (int n : n0_values) l.emplace_back(n);
    }
    lengths.push_back(std::move(l));
  }

  std::vector<Cell> cells;
  struct Slot {
    std::size_t cell;
    std::optional<int> n0;
  };
  std::vector<Slot> slots;
  for (std::size_t g = 0; g < nets.size(); ++g) {
    for (Method m : methods) {
      if (m == Method::kSsSdp) {
        cells.push_back({g, m, std::nullopt, lengths[g].front()});
        for (const auto& n : lengths[g]) slots.push_back({cells.size() - 1, n});
      } else {
        for (const auto& n : lengths[g]) {
          cells.push_back({g, m, n, n});
          slots.push_back({cells.size() - 1, n});
        }
      }
    }
  }

  const std::vector<ReportRow> results = run_cells(nets, cells, options);
  EstimateReport report;
  for (const Slot& s : slots) {
    ReportRow row = results[s.cell];
    row.n0 = s.n0;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace

Certificate certificate_from_solution(const CertificationProblem& problem, const Solution& solution, Method method) {
  const VariableRef& gv = problem.sdp.variables[static_cast<std::size_t>(problem.gamma_variable)];
  const double value = std::max(0.0, solution.y(gv.offset));
  Certificate cert;
  cert.method = method;
  if (problem.kind == ProblemKind::kStateSpace) {
    cert.gamma_tilde = std::sqrt(value);
    cert.mu_product = problem.plan.mu_product;
    cert.gamma = cert.gamma_tilde * cert.mu_product;
  } else {
    cert.gamma = std::sqrt(value);
    cert.gamma_tilde = cert.gamma;
    cert.mu_product = 1.0;
    cert.n0 = problem.n0;
  }
  for (const auto& [name, m] : solution.assignments)
    if (name != gv.name) cert.multipliers[name] = m;
  cert.solver.backend = solution.backend;
  cert.solver.status = std::string(solve_status_name(solution.status));
  cert.solver.iterations = solution.iterations;
  cert.solver.wall_ms = solution.wall_ms;
  cert.solver.relative_gap = solution.relative_gap;
  cert.solver.lmi_residual = solution.lmi_residual;
  cert.problem_fingerprint = fingerprint(problem.sdp);
  return cert;
}

Certificate certify(const ValidatedNetwork& net, Method method, std::optional<int> n0, const CertifyOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  CertificationProblem problem;
  if (method == Method::kSsSdp) {
    problem = assemble_ss_sdp(net, options.solver.psd_floor);
  } else if (method == Method::kDenseSdp) {
    const auto length = default_length(net, n0);
    if (!length) throw Error(ErrorCode::kInvalidValue, "dense-sdp needs an input length (n0)");
    problem = assemble_dense_oracle_sdp(net, *length, options.solver.psd_floor);
  } else {
    throw Error(ErrorCode::kInvalidValue, "certify supports ss-sdp and dense-sdp only");
  }

  const Solution solution = solve_sdp(problem.sdp, options.solver);
  if (!solution.ok()) {
    throw Error(ErrorCode::kSolverFailure, std::string(solve_status_name(solution.status)) +
                                               (solution.message.empty() ? "" : ": " + solution.message));
  }
  Certificate cert = certificate_from_solution(problem, solution, method);
  cert.solver.wall_ms = elapsed_ms(start);

  AuditOptions audit = options.audit;
  if (!audit.n0) audit.n0 = default_length(net, n0);
  const AuditReport report = audit_certificate(net, cert, audit);
  if (!report.pass()) {
    std::string msg = "certificate failed its audit";
    for (const auto& f : report.failures) msg += "; " + f;
    throw Error(ErrorCode::kAuditFailure, msg);
  }
  cert.audit = AuditStatus::kPass;
  return cert;
}

EstimateReport compare(const ValidatedNetwork& net, const std::vector<Method>& methods,
                       const std::vector<int>& n0_values, const CompareOptions& options) {
  std::vector<GridNetwork> nets{{net, std::nullopt, std::nullopt, std::nullopt}};
  return evaluate_grid(nets, methods, n0_values, options);
}

EstimateReport sweep(const SweepFamily& family, const std::vector<Method>& methods, const CompareOptions& options) {
  std::vector<GridNetwork> nets;
  for (std::uint64_t seed : family.seeds) {
    if (family.channel_pairs.empty()) {
      nets.push_back({validate_network(random_network(family.arch, seed)), std::nullopt, std::nullopt, seed});
      continue;
    }
    for (const auto& [c1, c2] : family.channel_pairs) {
      const int length = family.arch.input_length > 0 ? family.arch.input_length : 128;
      const ArchDescriptor arch = two_stage_pooling_arch(c1, c2, length);
      nets.push_back({validate_network(random_network(arch, seed)), c1, c2, seed});
    }
  }
  return evaluate_grid(nets, methods, family.n0_values, options);
}

std::vector<int> parse_n0_range(const std::string& text) {
  std::vector<long> parts;
  std::size_t pos = 0;
  try {
    while (true) {
      const std::size_t colon = text.find(':', pos);
      const std::string piece = text.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
      std::size_t used = 0;
      parts.push_back(std::stol(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
      if (colon == std::string::npos) break;
      pos = colon + 1;
    }
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "bad n0 value '" + text + "'");
  }
  if (parts.size() > 3) throw Error(ErrorCode::kParseError, "n0 range must be a:b:step");
  const long a = parts[0];
  const long b = parts.size() > 1 ? parts[1] : a;
  const long step = parts.size() > 2 ? parts[2] : 1;
  if (a < 1 || b < a || step < 1 || b > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::kParseError, "n0 range '" + text + "' is empty or not positive");
  }
  std::vector<int> out;
  for (long n = a; n <= b; n += step) out.push_back(static_cast<int>(n));
  return out;
}

}  // namespace lipcert
