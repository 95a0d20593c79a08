#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lipcert/audit.hpp"
#include "lipcert/certificate.hpp"
#include "lipcert/certify.hpp"
#include "lipcert/error.hpp"
#include "lipcert/model.hpp"
#include "lipcert/model_io.hpp"

using namespace lipcert;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitSolver = 4;
constexpr int kExitAudit = 5;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return kExitParse;
    case ErrorCode::kSolverFailure: return kExitSolver;
    case ErrorCode::kAuditFailure: return kExitAudit;
    default: return kExitValidation;
  }
}

const std::vector<std::string> kMethodNames{"ss-sdp", "dense-sdp", "spectral", "empirical"};

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(*parse_method(n));
  return out;
}

std::optional<PoolLayerSpec> parse_pool(const std::string& text) {
  if (text == "none") return std::nullopt;
  PoolLayerSpec pool;
  std::string digits;
  if (text.rfind("avg", 0) == 0) {
    pool.kind = PoolKind::kAverage;
    digits = text.substr(3);
  } else if (text.rfind("max", 0) == 0) {
    pool.kind = PoolKind::kMaximum;
    digits = text.substr(3);
  } else {
    throw Error(ErrorCode::kParseError, "bad pool '" + text + "' (expected none, avg<l> or max<l>)");
  }
  try {
    std::size_t used = 0;
    pool.window = std::stoi(digits, &used);
    if (used != digits.size() || pool.window < 1) throw std::invalid_argument(digits);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "bad pool window in '" + text + "'");
  }
  return pool;
}

bool is_two_stage(const std::string& arch) { return arch == "two-stage" || arch == "fig2"; }

struct ArchFlags {
  std::string arch;
  std::vector<int> channels;
  std::vector<int> kernels;
  std::vector<std::string> pools;
  std::vector<int> dense;
  int input_length = 0;
  std::string activation = "relu";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--arch", arch, "Preset architecture (fig2 is an alias of two-stage)")
        ->check(CLI::IsMember({"two-stage", "fig2", "fully-conv"}));
    cmd->add_option("--channels", channels, "Conv channels c0,c1,...")->delimiter(',');
    cmd->add_option("--kernels", kernels, "Kernel sizes l1,l2,...")->delimiter(',');
    cmd->add_option("--pools", pools, "Pooling after each conv: none, avg<l>, max<l>")->delimiter(',');
    cmd->add_option("--dense", dense, "Dense widths after the conv part")->delimiter(',');
    cmd->add_option("--input-length", input_length, "Input length used to size the first dense layer");
    cmd->add_option("--activation", activation, "Hidden activation")
        ->check(CLI::IsMember({"relu", "tanh", "sigmoid"}));
  }

  ArchDescriptor custom() const {
    if (channels.empty()) throw Error(ErrorCode::kParseError, "--channels is required without --arch");
    ArchDescriptor a;
    a.channels = channels;
    a.kernels = kernels;
    for (const auto& p : pools) a.pools.push_back(parse_pool(p));
    a.dense_widths = dense;
    a.input_length = input_length;
    a.hidden_activation = *parse_activation(activation);
    return a;
  }
};

void write_report(const EstimateReport& report, const std::string& out, const std::string& plot) {
  if (out.empty()) {
    write_csv(report, std::cout);
  } else {
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::kInvalidValue, "cannot write " + out);
    write_csv(report, f);
  }
  if (!plot.empty()) {
    std::ofstream f(plot);
    if (!f) throw Error(ErrorCode::kInvalidValue, "cannot write " + plot);
    write_svg(report, f);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lipschitz bounds for 1D convolutional networks"};
  app.require_subcommand(1);

  std::string model_path, cert_path, out_path, plot_path, method = "ss-sdp", n0_text;
  double tol = 1e-8, floor = kDefaultPsdFloor, audit_tol = 1e-6;
  std::uint64_t seed = 0;
  int jobs = 0, trials = 10;

  auto* certify_cmd = app.add_subcommand("certify", "Certify an upper bound and audit it");
  certify_cmd->add_option("model", model_path, "Model file (lipcert-v1 JSON)")->required();
  certify_cmd->add_option("--method", method, "ss-sdp or dense-sdp")->check(CLI::IsMember(kMethodNames));
  certify_cmd->add_option("--n0", n0_text, "Input length");
  certify_cmd->add_option("--tol", tol, "Solver gap and feasibility tolerance");
  certify_cmd->add_option("--eps-floor", floor, "Strict-positivity floor on multipliers");
  certify_cmd->add_option("--seed", seed, "Seed for the audit's random pairs");
  certify_cmd->add_option("--out,-o", out_path, "Write the certificate here");

  std::vector<std::string> methods{"ss-sdp", "dense-sdp", "spectral", "empirical"};
  auto add_report_flags = [&](CLI::App* cmd) {
    cmd->add_option("--method", methods, "Methods, comma separated")
        ->delimiter(',')
        ->check(CLI::IsMember(kMethodNames));
    cmd->add_option("--n0", n0_text, "Input length or range a:b:step");
    cmd->add_option("--tol", tol, "Solver gap and feasibility tolerance");
    cmd->add_option("--eps-floor", floor, "Strict-positivity floor on multipliers");
    cmd->add_option("--jobs", jobs, "Parallel cells (default: logical processors)");
    cmd->add_option("--trials", trials, "Random restarts for the empirical bound");
    cmd->add_option("--out,-o", out_path, "CSV output (default stdout)");
    cmd->add_option("--plot", plot_path, "SVG plot output");
  };

  auto* compare_cmd = app.add_subcommand("compare", "Evaluate several methods on one model");
  compare_cmd->add_option("model", model_path, "Model file")->required();
  compare_cmd->add_option("--seed", seed, "Seed for the empirical bound");
  add_report_flags(compare_cmd);

  ArchFlags sweep_arch;
  std::vector<int> c1s, c2s;
  std::vector<std::uint64_t> seeds;
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate methods over a family of random networks");
  sweep_arch.add_to(sweep_cmd);
  sweep_cmd->add_option("--c1", c1s, "First-stage channels for --arch two-stage")->delimiter(',');
  sweep_cmd->add_option("--c2", c2s, "Second-stage channels for --arch two-stage")->delimiter(',');
  sweep_cmd->add_option("--seed", seeds, "Network seeds, comma separated")->delimiter(',');
  add_report_flags(sweep_cmd);

  ArchFlags gen_arch;
  int gen_c1 = 2, gen_c2 = 4, classes = 5;
  auto* gen_cmd = app.add_subcommand("gen", "Write a seeded random model");
  gen_arch.add_to(gen_cmd);
  gen_cmd->add_option("--c1", gen_c1, "First-stage channels for --arch two-stage");
  gen_cmd->add_option("--c2", gen_c2, "Second-stage channels for --arch two-stage");
  gen_cmd->add_option("--classes", classes, "Output width for --arch two-stage");
  gen_cmd->add_option("--seed", seed, "Weight seed");
  gen_cmd->add_option("--out,-o", out_path, "Model output (default stdout)");

  auto* audit_cmd = app.add_subcommand("audit", "Re-verify a certificate");
  audit_cmd->add_option("model", model_path, "Model file")->required();
  audit_cmd->add_option("certificate", cert_path, "Certificate file")->required();
  audit_cmd->add_option("--tol", audit_tol, "Eigenvalue and consistency tolerance");
  audit_cmd->add_option("--n0", n0_text, "Input length for the random-pair check");
  audit_cmd->add_option("--seed", seed, "Seed for the random pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitParse;
  }

  try {
    auto single_n0 = [&]() -> std::optional<int> {
      if (n0_text.empty()) return std::nullopt;
      const auto values = parse_n0_range(n0_text);
      if (values.size() != 1) throw Error(ErrorCode::kParseError, "--n0 takes a single length here");
      return values.front();
    };
    auto compare_options = [&] {
      CompareOptions o;
      o.certify.solver.gap_tolerance = tol;
      o.certify.solver.feasibility_tolerance = tol;
      o.certify.solver.psd_floor = floor;
      o.empirical_trials = trials;
      o.jobs = jobs;
      return o;
    };

    if (*certify_cmd) {
      const std::optional<int> n0 = single_n0();
      const ValidatedNetwork net = validate_network(load_network(model_path));
      CertifyOptions opts;
      opts.solver.gap_tolerance = tol;
      opts.solver.feasibility_tolerance = tol;
      opts.solver.psd_floor = floor;
      opts.audit.seed = seed;
      const Certificate cert = certify(net, *parse_method(method), n0, opts);
      std::printf("gamma = %.6f\n", cert.gamma);
      std::printf("solver: %s, %s, %d iterations, %.1f ms\n", cert.solver.backend.c_str(),
                  cert.solver.status.c_str(), cert.solver.iterations, cert.solver.wall_ms);
      std::printf("audit: PASS\n");
      if (!out_path.empty()) save_certificate(cert, out_path);
      return 0;
    }

    if (*compare_cmd) {
      const std::vector<int> n0s = n0_text.empty() ? std::vector<int>{} : parse_n0_range(n0_text);
      const ValidatedNetwork net = validate_network(load_network(model_path));
      CompareOptions opts = compare_options();
      opts.seed = seed;
      write_report(compare(net, parse_methods(methods), n0s, opts), out_path, plot_path);
      return 0;
    }

    if (*sweep_cmd) {
      SweepFamily family;
      if (is_two_stage(sweep_arch.arch)) {
        if (c1s.empty() && c2s.empty()) {
          c1s = {2, 4, 6};
          c2s = {4, 8, 12};
        }
        if (c1s.size() != c2s.size()) throw Error(ErrorCode::kParseError, "--c1 and --c2 need equal lengths");
        for (std::size_t k = 0; k < c1s.size(); ++k) family.channel_pairs.emplace_back(c1s[k], c2s[k]);
        family.arch.input_length = sweep_arch.input_length;
      } else if (sweep_arch.arch == "fully-conv") {
        family.arch = fully_convolutional_arch();
      } else {
        family.arch = sweep_arch.custom();
      }
      if (!n0_text.empty()) family.n0_values = parse_n0_range(n0_text);
      if (!seeds.empty()) family.seeds = seeds;
      write_report(sweep(family, parse_methods(methods), compare_options()), out_path, plot_path);
      return 0;
    }

    if (*gen_cmd) {
      ArchDescriptor arch;
      if (is_two_stage(gen_arch.arch)) {
        arch = two_stage_pooling_arch(gen_c1, gen_c2, gen_arch.input_length > 0 ? gen_arch.input_length : 128,
                                      classes);
      } else if (gen_arch.arch == "fully-conv") {
        arch = fully_convolutional_arch();
      } else {
        arch = gen_arch.custom();
      }
      const NetworkSpec spec = random_network(arch, seed);
      validate_network(spec);
      if (out_path.empty()) {
        std::cout << network_to_json(spec);
      } else {
        save_network(spec, out_path);
      }
      return 0;
    }

    if (*audit_cmd) {
      const ValidatedNetwork net = validate_network(load_network(model_path));
      const Certificate cert = load_certificate(cert_path);
      AuditOptions opts;
      opts.tolerance = audit_tol;
      opts.seed = seed;
      opts.n0 = single_n0();
      const AuditReport report = audit_certificate(net, cert, opts);
      for (const auto& b : report.blocks)
        std::printf("%-16s min eig = % .6e\n", b.label.c_str(), b.min_eigenvalue);
      std::printf("multipliers: %s\n", report.multipliers_ok ? "ok" : "bad");
      std::printf("gamma consistency: %s\n", report.gamma_consistent ? "ok" : "bad");
      std::printf("random pairs (n0 = %d): worst margin % .3e\n", report.telescoping_input_length,
                  report.worst_telescoping_margin);
      for (const auto& f : report.failures) std::printf("  %s\n", f.c_str());
      std::printf("%s\n", report.pass() ? "PASS" : "FAIL");
      return report.pass() ? 0 : kExitAudit;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "lipcert: %s: %s\n", std::string(error_code_name(e.code())).c_str(), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lipcert: %s\n", e.what());
    return 1;
  }
  return 0;
}
