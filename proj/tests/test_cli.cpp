#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lipcert/certificate.hpp"
#include "lipcert/certify.hpp"
#include "lipcert/model_io.hpp"
#include "support.hpp"

using namespace lipcert;
using namespace lipcert::testing;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lipcert_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) {
    const std::string cmd = std::string(LIPCERT_CLI) + " " + args + " > " + path("stdout.txt") + " 2> " +
                            path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, CertifyDiagonalModel) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d.diagonal() << 3, 4;
  save_network(single_dense(d), path("m.json"));
  ASSERT_EQ(run("certify " + path("m.json") + " --method ss-sdp --out " + path("c.json")), 0);
  EXPECT_NE(read("stdout.txt").find("gamma = 4.000000"), std::string::npos) << read("stdout.txt");
  const Certificate cert = load_certificate(path("c.json"));
  EXPECT_EQ(cert.audit, AuditStatus::kPass);
  EXPECT_EQ(cert.multipliers.size(), 0u);
}

TEST_F(Cli, CertificateCarriesMultipliers) {
  ASSERT_EQ(run("gen --channels 1,3,5,10 --kernels 3,3,3 --seed 7 -o " + path("net.json")), 0);
  ASSERT_EQ(run("certify " + path("net.json") + " --out " + path("c.json")), 0);
  const Certificate cert = load_certificate(path("c.json"));
  EXPECT_TRUE(cert.multipliers.count("Lambda_0"));
  EXPECT_TRUE(cert.multipliers.count("Q_1"));
  EXPECT_TRUE(cert.multipliers.count("P_2"));
  EXPECT_EQ(run("audit " + path("net.json") + " " + path("c.json")), 0);
  EXPECT_NE(read("stdout.txt").find("PASS"), std::string::npos);
  EXPECT_NE(read("stdout.txt").find("conv_0"), std::string::npos);
}

TEST_F(Cli, MaxPoolDenseIsValidationError) {
  save_network(identity_pool_net(PoolKind::kMaximum, 2, 1, 32), path("m.json"));
  EXPECT_EQ(run("certify " + path("m.json") + " --method dense-sdp --n0 32"), 3);
  EXPECT_NE(read("stderr.txt").find("MaxPoolUnsupported"), std::string::npos);
}

TEST_F(Cli, ParseErrors) {
  EXPECT_EQ(run("certify"), 2);
  EXPECT_EQ(run("certify x.json --no-such-flag"), 2);
  EXPECT_EQ(run("certify " + path("missing.json")), 2);
  EXPECT_EQ(run("gen --channels 1,x"), 2);
  EXPECT_EQ(run("gen --channels 1,2 --kernels 3 --pools sum2"), 2);
  EXPECT_EQ(run("compare x.json --method bogus"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, GenIsDeterministic) {
  ASSERT_EQ(run("gen --channels 1,3,5,10 --kernels 3,3,3 --seed 7 -o " + path("a.json")), 0);
  ASSERT_EQ(run("gen --channels 1,3,5,10 --kernels 3,3,3 --seed 7 -o " + path("b.json")), 0);
  EXPECT_EQ(read("a.json"), read("b.json"));
  EXPECT_NO_THROW(validate_network(load_network(path("a.json"))));
}

TEST_F(Cli, GenTwoStageTemplate) {
  ASSERT_EQ(run("gen --arch two-stage --c1 4 --c2 8 --seed 1 -o " + path("f.json")), 0);
  const auto net = validate_network(load_network(path("f.json")));
  EXPECT_EQ(net.conv_layers().size(), 2u);
  EXPECT_EQ(net.pool_layers().size(), 2u);
  EXPECT_EQ(net.channels_before(net.conv_layers()[1]), 4);
  EXPECT_EQ(net.implied_input_length(), 128);
  ASSERT_EQ(run("gen --arch fig2 --c1 4 --c2 8 --seed 1 -o " + path("g.json")), 0);
  EXPECT_EQ(read("f.json"), read("g.json"));
}

TEST_F(Cli, AuditTamperedAndMismatched) {
  ASSERT_EQ(run("gen --channels 1,3,5,10 --kernels 3,3,3 --seed 7 -o " + path("net.json")), 0);
  ASSERT_EQ(run("certify " + path("net.json") + " --out " + path("c.json")), 0);
  Certificate cert = load_certificate(path("c.json"));
  cert.gamma *= 2.0;
  save_certificate(cert, path("tampered.json"));
  EXPECT_EQ(run("audit " + path("net.json") + " " + path("tampered.json")), 5);
  EXPECT_NE(read("stdout.txt").find("FAIL"), std::string::npos);

  ASSERT_EQ(run("gen --channels 1,2,5,10 --kernels 3,3,3 --seed 7 -o " + path("other.json")), 0);
  EXPECT_EQ(run("audit " + path("other.json") + " " + path("c.json")), 3);
}

TEST_F(Cli, ComparePlotOnlyWhenAsked) {
  ASSERT_EQ(run("gen --channels 1,2,2 --kernels 2,2 --seed 3 -o " + path("net.json")), 0);
  ASSERT_EQ(run("compare " + path("net.json") + " --method ss-sdp,spectral --n0 4:8:4 --jobs 1 --out " +
                path("r.csv")),
            0);
  EXPECT_FALSE(fs::exists(path("p.svg")));
  std::ifstream csv(path("r.csv"));
  EXPECT_EQ(read_csv(csv).rows.size(), 4u);
  ASSERT_EQ(run("compare " + path("net.json") + " --method spectral --n0 4 --plot " + path("p.svg")), 0);
  EXPECT_TRUE(fs::exists(path("p.svg")));
  EXPECT_EQ(read("stdout.txt").rfind(kCsvHeader, 0), 0u);
}

TEST_F(Cli, SweepRowsPerMethod) {
  ASSERT_EQ(run("sweep --arch fully-conv --method spectral,empirical --n0 3:60:3 --trials 1 --out " +
                path("s.csv")),
            0);
  std::ifstream csv(path("s.csv"));
  const auto report = read_csv(csv);
  ASSERT_EQ(report.rows.size(), 40u);
  EXPECT_EQ(report.rows.front().n0, 3);
  EXPECT_EQ(report.rows[19].n0, 60);
}
