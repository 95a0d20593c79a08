#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

namespace lipcert {

enum class VariableKind { kSymmetric, kDiagonal, kScalar };

/// A matrix-valued decision variable. Its entries occupy the scalar
/// coordinates [offset, offset + num_coords()) of the problem's decision
/// vector: the upper triangle row by row for symmetric variables, the
/// diagonal for diagonal ones.
struct VariableRef {
  int id = -1;
  std::string name;
  VariableKind kind = VariableKind::kScalar;
  int dim = 1;
  std::optional<double> psd_floor;  // variable >= floor * I
  int offset = 0;

  int num_coords() const;
  /// Coordinate of entry (r, c); r and c may be given in either order.
  int coord(int r, int c) const;
};

struct MatrixEntry {
  int row = 0;  // row <= col
  int col = 0;
  double value = 0.0;
};

struct CoefficientEntry {
  int coord = 0;
  int row = 0;  // row <= col
  int col = 0;
  double value = 0.0;
};

/// Symmetric affine matrix function F(y) = F_0 + sum_k y_k F_k constrained
/// to be positive semidefinite. Only upper-triangle entries are stored.
struct PsdBlock {
  std::string label;
  int size = 0;
  std::vector<MatrixEntry> constant;
  std::vector<CoefficientEntry> terms;  // sorted by (coord, row, col)
};

/// minimize objective^T y  subject to  every block F_b(y) >= 0 and the
/// variable floors.
struct SdpProblem {
  std::vector<VariableRef> variables;
  std::vector<PsdBlock> blocks;
  std::vector<std::pair<int, double>> objective;  // (coord, coefficient)

  int num_coords() const;
  VariableRef add_variable(std::string name, VariableKind kind, int dim,
                                  std::optional<double> psd_floor = std::nullopt);
  const VariableRef* find_variable(const std::string& name) const;
};

/// Accumulates the affine map of one PsdBlock. Terms are placed at block
/// offsets; a term on an off-diagonal position implicitly adds its transpose
/// on the mirrored position.
class BlockBuilder {
 public:
  BlockBuilder(std::string label, int size);

  /// Adds a constant matrix at (row_off, col_off). On the diagonal the
  /// matrix must be symmetric.
  void add_constant(int row_off, int col_off, const Eigen::MatrixXd& m);

  /// Adds scale * L^T V R at (row_off, col_off). L is dim x rows and R is
  /// dim x cols. Scalar variables act as v * I. On the diagonal L must equal R.
  void add_term(int row_off, int col_off, const VariableRef& v, const Eigen::MatrixXd& L,
                const Eigen::MatrixXd& R, double scale = 1.0);

  /// Adds scale * blkdiag(V, ..., V) with `copies` copies at (off, off).
  void add_block_diagonal(int off, const VariableRef& v, int copies, double scale = 1.0);

  /// Adds scale * v * I_n at (off, off) for a scalar variable.
  void add_scaled_identity(int off, int n, const VariableRef& v, double scale = 1.0);

  PsdBlock build() const;

 private:
  void accumulate(int coord, int r, int c, double value);
  void check_region(int row_off, int col_off, Eigen::Index rows, Eigen::Index cols) const;

  std::string label_;
  int size_;
  std::map<std::pair<int, int>, double> constant_;
  std::map<std::tuple<int, int, int>, double> terms_;
};

/// Dense symmetric value of a block at decision vector y.
Eigen::MatrixXd evaluate_block(const PsdBlock& block, const Eigen::VectorXd& y);

/// Unpacks a variable's value from the decision vector.
Eigen::MatrixXd variable_value(const VariableRef& v, const Eigen::VectorXd& y);

/// Writes a variable's value (symmetric part) into the decision vector.
void pack_variable(const VariableRef& v, const Eigen::MatrixXd& value, Eigen::VectorXd& y);

/// Deterministic canonical text form; equal problems serialize to equal bytes.
std::string serialize(const SdpProblem& problem);

/// 64-bit FNV-1a digest of serialize(problem).
std::uint64_t fingerprint(const SdpProblem& problem);

}  // namespace lipcert
