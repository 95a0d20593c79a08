#include "lipcert/sdp_problem.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "lipcert/error.hpp"

namespace lipcert {

namespace {

// Nonzeros of each row of a matrix, skipping exact zeros.
std::vector<std::vector<std::pair<int, double>>> sparse_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(r, c) != 0.0) rows[static_cast<std::size_t>(r)].emplace_back(static_cast<int>(c), m(r, c));
  return rows;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* kind_name(VariableKind k) {
  switch (k) {
    case VariableKind::kSymmetric: return "symmetric";
    case VariableKind::kDiagonal: return "diagonal";
    case VariableKind::kScalar: return "scalar";
  }
  return "scalar";
}

}  // namespace

int VariableRef::num_coords() const {
  switch (kind) {
    case VariableKind::kSymmetric: return dim * (dim + 1) / 2;
    case VariableKind::kDiagonal: return dim;
    case VariableKind::kScalar: return 1;
  }
  return 1;
}

int VariableRef::coord(int r, int c) const {
  if (r > c) std::swap(r, c);
  switch (kind) {
    case VariableKind::kSymmetric: return offset + r * dim - r * (r - 1) / 2 + (c - r);
    case VariableKind::kDiagonal: return offset + r;
    case VariableKind::kScalar: return offset;
  }
  return offset;
}

int SdpProblem::num_coords() const {
  return variables.empty() ? 0 : variables.back().offset + variables.back().num_coords();
}

VariableRef SdpProblem::add_variable(std::string name, VariableKind kind, int dim,
                                            std::optional<double> psd_floor) {
  if (dim < 1) throw Error(ErrorCode::kInvalidValue, "variable '" + name + "' must have dim >= 1");
  if (kind == VariableKind::kScalar && dim != 1) {
    throw Error(ErrorCode::kInvalidValue, "scalar variable '" + name + "' must have dim 1");
  }
  VariableRef v;
  v.id = static_cast<int>(variables.size());
  v.name = std::move(name);
  v.kind = kind;
  v.dim = dim;
  v.psd_floor = psd_floor;
  v.offset = num_coords();
  variables.push_back(std::move(v));
  return variables.back();
}

const VariableRef* SdpProblem::find_variable(const std::string& name) const {
  for (const auto& v : variables)
    if (v.name == name) return &v;
  return nullptr;
}

BlockBuilder::BlockBuilder(std::string label, int size) : label_(std::move(label)), size_(size) {}

void BlockBuilder::check_region(int row_off, int col_off, Eigen::Index rows, Eigen::Index cols) const {
  if (row_off < 0 || col_off < 0 || row_off + rows > size_ || col_off + cols > size_) {
    throw Error(ErrorCode::kDimensionMismatch, label_ + ": term exceeds block size");
  }
  if (row_off != col_off) {
    const bool disjoint = row_off + rows <= col_off || col_off + cols <= row_off;
    if (!disjoint) {
      throw Error(ErrorCode::kDimensionMismatch, label_ + ": off-diagonal term overlaps the diagonal");
    }
  } else if (rows != cols) {
    throw Error(ErrorCode::kDimensionMismatch, label_ + ": diagonal term must be square");
  }
}

void BlockBuilder::accumulate(int coord, int r, int c, double value) {
  if (r > c) std::swap(r, c);
  if (coord < 0) {
    constant_[{r, c}] += value;
  } else {
    terms_[{coord, r, c}] += value;
  }
}

void BlockBuilder::add_constant(int row_off, int col_off, const Eigen::MatrixXd& m) {
  check_region(row_off, col_off, m.rows(), m.cols());
  const bool diagonal = row_off == col_off;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = diagonal ? r : 0; c < m.cols(); ++c)
      if (m(r, c) != 0.0) accumulate(-1, row_off + static_cast<int>(r), col_off + static_cast<int>(c), m(r, c));
}

void BlockBuilder::add_term(int row_off, int col_off, const VariableRef& v, const Eigen::MatrixXd& L,
                            const Eigen::MatrixXd& R, double scale) {
  if (L.rows() != R.rows() || (v.kind != VariableKind::kScalar && L.rows() != v.dim)) {
    throw Error(ErrorCode::kDimensionMismatch, label_ + ": factor rows do not match variable '" + v.name + "'");
  }
  check_region(row_off, col_off, L.cols(), R.cols());
  const bool diagonal = row_off == col_off;
  const auto Lr = sparse_rows(L);
  const auto Rr = sparse_rows(R);

  // Adds scale * L[a,:]^T R[b,:] for coordinate `coord`.
  auto outer = [&](int coord, int a, int b, double weight) {
    for (const auto& [r, lv] : Lr[static_cast<std::size_t>(a)])
      for (const auto& [c, rv] : Rr[static_cast<std::size_t>(b)]) {
        if (diagonal && r > c) continue;
        accumulate(coord, row_off + r, col_off + c, weight * scale * lv * rv);
      }
  };

  const int d = static_cast<int>(L.rows());
  switch (v.kind) {
    case VariableKind::kScalar:
      for (int a = 0; a < d; ++a) outer(v.offset, a, a, 1.0);
      break;
    case VariableKind::kDiagonal:
      for (int a = 0; a < d; ++a) outer(v.coord(a, a), a, a, 1.0);
      break;
    case VariableKind::kSymmetric:
      for (int a = 0; a < d; ++a) {
        outer(v.coord(a, a), a, a, 1.0);
        for (int b = a + 1; b < d; ++b) {
          outer(v.coord(a, b), a, b, 1.0);
          outer(v.coord(a, b), b, a, 1.0);
        }
      }
      break;
  }
}

void BlockBuilder::add_block_diagonal(int off, const VariableRef& v, int copies, double scale) {
  const int d = v.kind == VariableKind::kScalar ? 1 : v.dim;
  check_region(off, off, d * copies, d * copies);
  for (int k = 0; k < copies; ++k) {
    const int base = off + k * d;
    for (int a = 0; a < d; ++a) {
      accumulate(v.coord(a, a), base + a, base + a, scale);
      if (v.kind != VariableKind::kSymmetric) continue;
      for (int b = a + 1; b < d; ++b) accumulate(v.coord(a, b), base + a, base + b, scale);
    }
  }
}

void BlockBuilder::add_scaled_identity(int off, int n, const VariableRef& v, double scale) {
  if (v.kind != VariableKind::kScalar) {
    throw Error(ErrorCode::kDimensionMismatch, label_ + ": scaled identity needs a scalar variable");
  }
  check_region(off, off, n, n);
  for (int a = 0; a < n; ++a) accumulate(v.offset, off + a, off + a, scale);
}

PsdBlock BlockBuilder::build() const {
  PsdBlock block;
  block.label = label_;
  block.size = size_;
  for (const auto& [rc, value] : constant_)
    if (value != 0.0) block.constant.push_back({rc.first, rc.second, value});
  for (const auto& [key, value] : terms_)
    if (value != 0.0) block.terms.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), value});
  return block;
}

Eigen::MatrixXd evaluate_block(const PsdBlock& block, const Eigen::VectorXd& y) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(block.size, block.size);
  for (const auto& e : block.constant) F(e.row, e.col) += e.value;
  for (const auto& t : block.terms) F(t.row, t.col) += t.value * y(t.coord);
  return F.selfadjointView<Eigen::Upper>();
}

Eigen::MatrixXd variable_value(const VariableRef& v, const Eigen::VectorXd& y) {
  if (v.kind == VariableKind::kScalar) return Eigen::MatrixXd::Constant(1, 1, y(v.offset));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(v.dim, v.dim);
  for (int a = 0; a < v.dim; ++a) {
    m(a, a) = y(v.coord(a, a));
    if (v.kind != VariableKind::kSymmetric) continue;
    for (int b = a + 1; b < v.dim; ++b) m(a, b) = m(b, a) = y(v.coord(a, b));
  }
  return m;
}

void pack_variable(const VariableRef& v, const Eigen::MatrixXd& value, Eigen::VectorXd& y) {
  const int d = v.kind == VariableKind::kScalar ? 1 : v.dim;
  if (value.rows() != d || value.cols() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "value for '" + v.name + "' has the wrong shape");
  }
  for (int a = 0; a < d; ++a) {
    y(v.coord(a, a)) = value(a, a);
    if (v.kind != VariableKind::kSymmetric) continue;
    for (int b = a + 1; b < d; ++b) y(v.coord(a, b)) = 0.5 * (value(a, b) + value(b, a));
  }
}

std::string serialize(const SdpProblem& problem) {
  std::ostringstream out;
  out << "sdp-canonical 1\n";
  out << "variables " << problem.variables.size() << "\n";
  for (const auto& v : problem.variables) {
    out << v.id << ' ' << v.name << ' ' << kind_name(v.kind) << ' ' << v.dim << ' ' << v.offset << ' '
        << (v.psd_floor ? format_double(*v.psd_floor) : std::string("-")) << "\n";
  }
  auto objective = problem.objective;
  std::sort(objective.begin(), objective.end());
  out << "objective " << objective.size() << "\n";
  for (const auto& [coord, value] : objective) out << coord << ' ' << format_double(value) << "\n";
  out << "blocks " << problem.blocks.size() << "\n";
  for (const auto& b : problem.blocks) {
    out << "block " << b.label << ' ' << b.size << ' ' << b.constant.size() << ' ' << b.terms.size() << "\n";
    for (const auto& e : b.constant) out << "c " << e.row << ' ' << e.col << ' ' << format_double(e.value) << "\n";
    for (const auto& t : b.terms)
      out << "t " << t.coord << ' ' << t.row << ' ' << t.col << ' ' << format_double(t.value) << "\n";
  }
  return out.str();
}

std::uint64_t fingerprint(const SdpProblem& problem) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char ch : serialize(problem)) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace lipcert
