#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lipcert/baselines.hpp"
#include "lipcert/certify.hpp"
#include "lipcert/error.hpp"
#include "lipcert/lmi.hpp"
#include "lipcert/statespace.hpp"
#include "support.hpp"

using namespace lipcert;
using namespace lipcert::testing;
using Eigen::MatrixXd;

namespace {

double gamma_of(const NetworkSpec& spec, Method m = Method::kSsSdp, std::optional<int> n0 = std::nullopt) {
  return certify(validate_network(spec), m, n0).gamma;
}

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST(Certify, DenseClosedForms) {
  MatrixXd d = MatrixXd::Zero(2, 2);
  d.diagonal() << 3, 4;
  EXPECT_NEAR(gamma_of(single_dense(d)), 4.0, 1e-4);
  EXPECT_NEAR(gamma_of(single_dense(d), Method::kDenseSdp), 4.0, 1e-4);
  EXPECT_NEAR(gamma_of(single_dense(MatrixXd::Identity(3, 3))), 1.0, 1e-4);
  EXPECT_NEAR(gamma_of(single_dense(MatrixXd::Zero(2, 3))), 0.0, 1e-3);
}

TEST(Certify, ConvClosedForms) {
  EXPECT_NEAR(gamma_of(single_conv({scalar(2.0)})), 2.0, 1e-4);
  EXPECT_NEAR(gamma_of(single_conv({scalar(1.0), scalar(1.0)})), 2.0, 1e-4);
}

TEST(Certify, DifferenceFilter) {
  EXPECT_NEAR(gamma_of(single_conv({scalar(1.0), scalar(-1.0)})), 2.0, 1e-4);
}

TEST(Certify, DenseOracleOnLinearConvIsToeplitzNorm) {
  const auto spec = random_single_conv(700, 2, 4);
  const double expected = toeplitz_gain(std::get<ConvLayerSpec>(spec.layers[0]), 32);
  EXPECT_NEAR(gamma_of(spec, Method::kDenseSdp, 32), expected, 1e-4 * expected);
}

TEST(Certify, LinearIdentityConvPooling) {
  for (int l : {2, 4, 8}) {
    const auto avg = identity_pool_net(PoolKind::kAverage, l, 1, 2 * l, Activation::kLinear);
    EXPECT_NEAR(gamma_of(avg), 1.0 / std::sqrt(l), 1e-4);
    const auto mx = identity_pool_net(PoolKind::kMaximum, l, 1, 2 * l, Activation::kLinear);
    EXPECT_LE(gamma_of(mx), 1.0 + 1e-4);
  }
}

TEST(Certify, SingleConvMatchesFrequencyGain) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto spec = random_single_conv(300 + s, 3, 5);
    const double g = fir_l2_gain(std::get<ConvLayerSpec>(spec.layers[0]));
    EXPECT_NEAR(gamma_of(spec), g, 1e-4 * g);
  }
}

TEST(Certify, AveragePoolingGivesInverseSqrtWindow) {
  for (int l : {2, 4}) {
    const auto spec = identity_pool_net(PoolKind::kAverage, l, 2, 2 * l);
    const auto cert = certify(validate_network(spec), Method::kSsSdp);
    EXPECT_NEAR(cert.gamma, 1.0 / std::sqrt(l), 1e-4);
    EXPECT_NEAR(cert.mu_product, 1.0 / std::sqrt(l), 1e-15);
    EXPECT_NEAR(cert.gamma_tilde, 1.0, 1e-4);
  }
}

TEST(Certify, MaxPoolingBoundedByOne) {
  const auto net = validate_network(identity_pool_net(PoolKind::kMaximum, 2, 2, 4));
  const double g = certify(net, Method::kSsSdp).gamma;
  EXPECT_LE(g, 1.0 + 1e-4);
  EXPECT_GE(g, empirical_lower_bound(net, 4, 5, 0) - 1e-6);
  try {
    certify(net, Method::kDenseSdp, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMaxPoolUnsupported);
  }
}

TEST(Certify, MlpMatchesDenseOracle) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto spec = random_mlp(400 + s, 8);
    const double a = gamma_of(spec);
    const double b = gamma_of(spec, Method::kDenseSdp);
    EXPECT_NEAR(a, b, 1e-3 * b);
  }
}

TEST(Certify, StateSpaceProblemIgnoresInputLength) {
  const auto net = validate_network(random_network(fully_convolutional_arch(), 42));
  const auto a = certify(net, Method::kSsSdp, 3);
  const auto b = certify(net, Method::kSsSdp, 60);
  EXPECT_EQ(a.problem_fingerprint, b.problem_fingerprint);
  EXPECT_EQ(a.gamma, b.gamma);
}

TEST(Certify, Idempotent) {
  const auto net = validate_network(corpus_network(4).spec);
  const auto a = certify(net, Method::kSsSdp);
  const auto b = certify(net, Method::kSsSdp);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.multipliers.size(), b.multipliers.size());
  for (const auto& [name, m] : a.multipliers) EXPECT_TRUE(m == b.multipliers.at(name)) << name;
}

TEST(Certify, FinalLayerScaling) {
  const auto base = corpus_network(2).spec;
  const double g = gamma_of(base);
  for (double alpha : {0.5, 2.0}) EXPECT_NEAR(gamma_of(scale_terminal(base, alpha)), alpha * g, 1e-3 * alpha * g);
}

TEST(Certify, SoundAgainstEmpiricalAndSpectral) {
  for (std::uint64_t i = 0; i < 8; ++i) {
    const auto entry = corpus_network(i);
    const auto net = validate_network(entry.spec);
    const double g = certify(net, Method::kSsSdp, entry.n0).gamma;
    const double lo = empirical_lower_bound(net, entry.n0, 5, i);
    EXPECT_LE(lo, g + 1e-6) << "network " << i;
    EXPECT_LE(lo, spectral_product(net, entry.n0) + 1e-9) << "network " << i;
  }
}

TEST(Certify, MultipliersRespectFloors) {
  CertifyOptions opts;
  opts.solver.psd_floor = 1e-3;
  const auto cert = certify(validate_network(corpus_network(6).spec), Method::kSsSdp, std::nullopt, opts);
  for (const auto& [name, m] : cert.multipliers) {
    if (name.rfind("Lambda_", 0) == 0 || name.rfind("P_", 0) == 0) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
      EXPECT_GE(es.eigenvalues().minCoeff(), 1e-3 - 1e-7) << name;
    }
  }
}

TEST(Lmi, PoolingPlan) {
  const auto avg = validate_network(identity_pool_net(PoolKind::kAverage, 4, 1, 8));
  EXPECT_NEAR(pooling_plan(avg).mu_product, 0.5, 1e-15);
  EXPECT_FALSE(pooling_plan(avg).diagonal_q[0]);
  const auto mx = validate_network(identity_pool_net(PoolKind::kMaximum, 4, 1, 8));
  EXPECT_DOUBLE_EQ(pooling_plan(mx).mu_product, 1.0);
  EXPECT_TRUE(pooling_plan(mx).diagonal_q[0]);
}

TEST(Lmi, StateSpaceVariables) {
  const auto net = validate_network(random_network(fully_convolutional_arch(), 1));
  const auto p = assemble_ss_sdp(net);
  EXPECT_EQ(p.sdp.blocks.size(), 3u);
  ASSERT_NE(p.sdp.find_variable("Q_0"), nullptr);
  EXPECT_EQ(p.sdp.find_variable("Q_0")->kind, VariableKind::kSymmetric);
  EXPECT_EQ(p.sdp.find_variable("Lambda_1")->dim, 5);
  EXPECT_EQ(p.sdp.find_variable("P_2")->dim, 2 * 5);
  // the terminal conv carries no multipliers
  EXPECT_EQ(p.sdp.find_variable("Q_2"), nullptr);
}

TEST(Lmi, DenseOracleBlockMatchesHandAssembly) {
  std::mt19937_64 gen(9);
  const MatrixXd w0 = random_matrix(gen, 3, 2), w1 = random_matrix(gen, 2, 3);
  NetworkSpec s;
  s.input_channels = 2;
  s.layers.emplace_back(dense_layer(w0, Activation::kRelu));
  s.layers.emplace_back(dense_layer(w1, Activation::kLinear));
  const auto p = assemble_dense_oracle_sdp(validate_network(s), 1);
  ASSERT_EQ(p.sdp.blocks.size(), 1u);
  Eigen::VectorXd y(p.sdp.num_coords());
  y << 2.0, 0.5, 0.7, 0.9;
  const MatrixXd lam = Eigen::Vector3d(0.5, 0.7, 0.9).asDiagonal();
  MatrixXd expected(5, 5);
  expected << 2.0 * MatrixXd::Identity(2, 2), -w0.transpose() * lam,
              -lam * w0, 2 * lam - w1.transpose() * w1;
  EXPECT_TRUE(evaluate_block(p.sdp.blocks[0], y).isApprox(expected));
}

TEST(Lmi, UnrollMergesPooling) {
  const auto net = validate_network(identity_pool_net(PoolKind::kAverage, 2, 1, 4));
  const auto layers = unroll_network(net, 4);
  ASSERT_EQ(layers.size(), 2u);
  EXPECT_TRUE(layers[0].nonlinear);
  EXPECT_TRUE(layers[1].weight.isApprox(average_pool_matrix(1, 4, 2)));
}

TEST(Compare, RowsAndCsvRoundTrip) {
  const auto net = validate_network(random_network(fully_convolutional_arch(), 3));
  CompareOptions opts;
  opts.empirical_trials = 3;
  const auto report = compare(net, {Method::kSsSdp, Method::kSpectral, Method::kEmpirical}, {4, 8}, opts);
  ASSERT_EQ(report.rows.size(), 6u);
  EXPECT_EQ(report.rows[0].bound, report.rows[1].bound);
  EXPECT_EQ(report.rows[4].kind, "lower");
  for (const auto& r : report.rows) EXPECT_EQ(r.status, "ok");

  std::stringstream buf;
  write_csv(report, buf);
  EXPECT_EQ(read_csv(buf).rows, report.rows);
}

TEST(Compare, ErrorsGoToStatusColumn) {
  const auto net = validate_network(identity_pool_net(PoolKind::kMaximum, 2, 1, 4));
  const auto report = compare(net, {Method::kDenseSdp}, {4});
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].status, "error:MaxPoolUnsupported");
  EXPECT_EQ(report.rows[0].bound, 0.0);
}

TEST(Compare, SweepOverChannelPairs) {
  SweepFamily fam;
  fam.channel_pairs = {{1, 2}, {2, 2}};
  fam.arch.input_length = 16;
  fam.seeds = {0, 1};
  CompareOptions opts;
  opts.jobs = 2;
  const auto report = sweep(fam, {Method::kSpectral}, opts);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_EQ(report.rows[1].c1, 2);
  EXPECT_EQ(report.rows[2].seed, 1u);
  EXPECT_EQ(report.rows[0].n0, 16);
}

TEST(Compare, ParseN0Range) {
  EXPECT_EQ(parse_n0_range("7"), std::vector<int>{7});
  EXPECT_EQ(parse_n0_range("3:12:3"), (std::vector<int>{3, 6, 9, 12}));
  EXPECT_EQ(parse_n0_range("3:60:3").size(), 20u);
  EXPECT_THROW(parse_n0_range("a:b"), Error);
  EXPECT_THROW(parse_n0_range("5:2"), Error);
  EXPECT_THROW(parse_n0_range("0"), Error);
}

TEST(Compare, CsvRejectsMalformedInput) {
  std::stringstream bad("method,n0\n");
  EXPECT_THROW(read_csv(bad), Error);
  std::stringstream short_row(std::string(kCsvHeader) + "\nss-sdp,1,2\n");
  EXPECT_THROW(read_csv(short_row), Error);
}

TEST(Report, SvgHasTwoPanels) {
  EstimateReport r;
  r.rows.push_back({"ss-sdp", 3, std::nullopt, std::nullopt, 0, 1.0, "upper", 5.0, "ok"});
  r.rows.push_back({"ss-sdp", 6, std::nullopt, std::nullopt, 0, 1.0, "upper", 5.0, "ok"});
  std::stringstream out;
  write_svg(r, out);
  const std::string svg = out.str();
  EXPECT_NE(svg.find("Lipschitz bound"), std::string::npos);
  EXPECT_NE(svg.find("log"), std::string::npos);
  EXPECT_EQ(svg.rfind("</svg>"), svg.size() - 7);
}
