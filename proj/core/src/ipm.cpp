#include "ipm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

namespace lipcert::detail {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ConeBlock make_block(int size, bool diagonal) {
  ConeBlock b;
  b.size = size;
  b.diagonal = diagonal;
  b.constant = diagonal ? MatrixXd::Zero(size, 1) : MatrixXd::Zero(size, size);
  return b;
}

// Groups triplets by coordinate into the block's parallel arrays.
void set_entries(ConeBlock& b, const std::map<int, std::vector<Triplet>>& by_coord) {
  for (const auto& [coord, list] : by_coord) {
    b.coords.push_back(coord);
    b.entries.push_back(list);
  }
}

double inner(const ConeBlock& b, const MatrixXd& a, const MatrixXd& c) {
  (void)b;
  return (a.array() * c.array()).sum();
}

MatrixXd affine(const ConeBlock& b, const VectorXd& y) {
  MatrixXd f = b.constant;
  for (std::size_t k = 0; k < b.coords.size(); ++k) {
    const double yk = y(b.coords[k]);
    if (yk == 0.0) continue;
    for (const auto& t : b.entries[k]) {
      if (b.diagonal) f(t.row, 0) += yk * t.value;
      else f(t.row, t.col) += yk * t.value;
    }
  }
  return f;
}

// out_i += <F_i, Y>; Y need not be symmetric.
void apply_adjoint(const ConeBlock& b, const MatrixXd& Y, VectorXd& out) {
  for (std::size_t k = 0; k < b.coords.size(); ++k) {
    double s = 0.0;
    for (const auto& t : b.entries[k]) s += t.value * (b.diagonal ? Y(t.row, 0) : Y(t.col, t.row));
    out(b.coords[k]) += s;
  }
}

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Largest alpha in (0, 1e10] with X + alpha dX >= 0, given a Cholesky factor of X.
double max_step(const ConeBlock& b, const MatrixXd& X, const MatrixXd& dX) {
  if (b.diagonal) {
    double alpha = 1e10;
    for (int k = 0; k < b.size; ++k)
      if (dX(k, 0) < 0.0) alpha = std::min(alpha, -X(k, 0) / dX(k, 0));
    return alpha;
  }
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd half = llt.matrixL().solve(dX);
  const MatrixXd W = llt.matrixL().solve(MatrixXd(half.transpose()));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(W), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0.0 ? 1e10 : std::min(1e10, -1.0 / lmin);
}

struct Iterate {
  std::vector<MatrixXd> X, Z;
  VectorXd y;
};

struct Residuals {
  std::vector<MatrixXd> Rd;
  VectorXd rp;
  double objective = 0.0;
  double lower_bound = 0.0;
  double complementarity = 0.0;
  double relative_gap = 0.0;
  double pinf = 0.0;
  double dinf = 0.0;
};

}  // namespace

ConicForm lower_problem(const SdpProblem& problem) {
  ConicForm form;
  form.num_coords = problem.num_coords();
  form.objective = VectorXd::Zero(form.num_coords);
  for (const auto& [coord, value] : problem.objective) form.objective(coord) += value;

  for (const auto& pb : problem.blocks) {
    const bool diagonal = pb.size == 1;
    ConeBlock b = make_block(pb.size, diagonal);
    for (const auto& e : pb.constant) {
      if (diagonal) {
        b.constant(e.row, 0) += e.value;
      } else {
        b.constant(e.row, e.col) += e.value;
        if (e.row != e.col) b.constant(e.col, e.row) += e.value;
      }
    }
    std::map<int, std::vector<Triplet>> by_coord;
    for (const auto& t : pb.terms) {
      auto& list = by_coord[t.coord];
      list.push_back({t.row, t.col, t.value});
      if (t.row != t.col) list.push_back({t.col, t.row, t.value});
    }
    set_entries(b, by_coord);
    form.blocks.push_back(std::move(b));
  }

  for (const auto& v : problem.variables) {
    if (!v.psd_floor) continue;
    const double eps = *v.psd_floor;
    const bool diagonal = v.kind != VariableKind::kSymmetric || v.dim == 1;
    ConeBlock b = make_block(v.dim, diagonal);
    std::map<int, std::vector<Triplet>> by_coord;
    for (int a = 0; a < v.dim; ++a) {
      if (diagonal) {
        b.constant(a, 0) = -eps;
      } else {
        b.constant(a, a) = -eps;
      }
      by_coord[v.coord(a, a)].push_back({a, a, 1.0});
      if (diagonal) continue;
      for (int c = a + 1; c < v.dim; ++c) {
        auto& list = by_coord[v.coord(a, c)];
        list.push_back({a, c, 1.0});
        list.push_back({c, a, 1.0});
      }
    }
    set_entries(b, by_coord);
    form.blocks.push_back(std::move(b));
  }
  return form;
}

IpmResult solve_conic(const ConicForm& form, const IpmOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const int m = form.num_coords;
  const auto& blocks = form.blocks;
  const std::size_t nb = blocks.size();
  const VectorXd& c = form.objective;

  IpmResult result;
  result.y = VectorXd::Zero(m);
  if (m == 0) {
    result.status = IpmStatus::kOptimal;
    return result;
  }

  int total_dim = 0;
  double norm_c0 = 0.0;
  for (const auto& b : blocks) {
    total_dim += b.size;
    norm_c0 += b.constant.squaredNorm();
  }
  norm_c0 = std::sqrt(norm_c0);
  const double norm_obj = c.norm();

  // Initial point.
  Iterate it;
  it.y = VectorXd::Zero(m);
  for (const auto& b : blocks) {
    double norm_a = 0.0;
    double ratio = 0.0;
    for (std::size_t k = 0; k < b.coords.size(); ++k) {
      double s = 0.0;
      for (const auto& t : b.entries[k]) s += t.value * t.value;
      s = std::sqrt(s);
      norm_a = std::max(norm_a, s);
      ratio = std::max(ratio, (1.0 + std::abs(c(b.coords[k]))) / (1.0 + s));
    }
    const double n = b.size;
    const double xi = std::max({10.0, std::sqrt(n), n * ratio});
    const double eta = std::max({10.0, std::sqrt(n), norm_a, 1.0 + b.constant.norm()});
    if (b.diagonal) {
      it.X.push_back(MatrixXd::Constant(b.size, 1, xi));
      it.Z.push_back(MatrixXd::Constant(b.size, 1, eta));
    } else {
      it.X.push_back(xi * MatrixXd::Identity(b.size, b.size));
      it.Z.push_back(eta * MatrixXd::Identity(b.size, b.size));
    }
  }

  auto residuals = [&](const Iterate& p) {
    Residuals r;
    r.Rd.resize(nb);
    VectorXd ax = VectorXd::Zero(m);
    double rd_sq = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      r.Rd[b] = affine(blocks[b], p.y) - p.Z[b];
      rd_sq += r.Rd[b].squaredNorm();
      apply_adjoint(blocks[b], p.X[b], ax);
      r.lower_bound -= inner(blocks[b], blocks[b].constant, p.X[b]);
      r.complementarity += inner(blocks[b], p.X[b], p.Z[b]);
    }
    r.rp = c - ax;
    r.objective = c.dot(p.y);
    r.relative_gap = std::abs(r.complementarity) / (1.0 + std::abs(r.objective) + std::abs(r.lower_bound));
    r.pinf = r.rp.norm() / (1.0 + norm_obj);
    r.dinf = std::sqrt(rd_sq) / (1.0 + norm_c0);
    return r;
  };

  auto merit = [&](const Residuals& r) {
    return std::max({r.relative_gap / options.gap_tolerance, r.pinf / options.feasibility_tolerance,
                     r.dinf / options.feasibility_tolerance});
  };

  double best_merit = std::numeric_limits<double>::infinity();
  auto record_best = [&](const Iterate& p, const Residuals& r, int iteration) {
    const double mval = merit(r);
    if (mval < best_merit) {
      best_merit = mval;
      result.y = p.y;
      result.objective = r.objective;
      result.lower_bound = r.lower_bound;
      result.relative_gap = r.relative_gap;
      result.lmi_residual = r.dinf;
      result.multiplier_residual = r.pinf;
    }
    result.iterations = iteration;
  };

  auto finish = [&](IpmStatus fallback, std::string message) {
    const double near_gap = std::max(1e-6, 100.0 * options.gap_tolerance);
    const double near_feas = std::max(1e-6, 100.0 * options.feasibility_tolerance);
    if (best_merit <= 1.0) {
      result.status = IpmStatus::kOptimal;
    } else if (result.relative_gap <= near_gap && result.lmi_residual <= near_feas &&
               result.multiplier_residual <= near_feas) {
      result.status = IpmStatus::kNearOptimal;
      result.message = std::move(message);
    } else {
      result.status = fallback;
      result.message = std::move(message);
    }
    return result;
  };

  for (int iter = 0;; ++iter) {
    const Residuals r = residuals(it);
    record_best(it, r, iter);
    if (merit(r) <= 1.0) return finish(IpmStatus::kOptimal, "");

    // Farkas certificate of LMI infeasibility: <F_i, X> ~ 0 while <F0, X> < 0.
    if (r.lower_bound > 0.0) {
      VectorXd ax = c - r.rp;
      double xnorm = 0.0;
      for (const auto& x : it.X) xnorm += x.norm();
      if (xnorm > 1e8 && ax.norm() < 1e-8 * r.lower_bound && r.lower_bound > 1e8 * (1.0 + norm_obj)) {
        result.status = IpmStatus::kInfeasible;
        result.message = "the LMI has no feasible point";
        return result;
      }
    }

    if (iter >= options.max_iterations) return finish(IpmStatus::kNumericalFailure, "iteration limit reached");
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > options.time_limit_seconds) return finish(IpmStatus::kTimeLimit, "time limit reached");

    const double mu = r.complementarity / total_dim;

    // Z inverses.
    std::vector<MatrixXd> Zinv(nb);
    bool ok = true;
    for (std::size_t b = 0; b < nb; ++b) {
      if (blocks[b].diagonal) {
        if ((it.Z[b].array() <= 0.0).any()) ok = false;
        Zinv[b] = it.Z[b].cwiseInverse();
      } else {
        Eigen::LLT<MatrixXd> llt(it.Z[b]);
        if (llt.info() != Eigen::Success) {
          ok = false;
          break;
        }
        Zinv[b] = llt.solve(MatrixXd::Identity(blocks[b].size, blocks[b].size));
        Zinv[b] = symmetrize(Zinv[b]);
      }
    }
    if (!ok) return finish(IpmStatus::kNumericalFailure, "lost positive definiteness");

    // Schur complement M_ij = sum_b tr(F_i X F_j Z^-1).
    MatrixXd M = MatrixXd::Zero(m, m);
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const ConeBlock& b = blocks[bi];
      const MatrixXd& X = it.X[bi];
      const MatrixXd& Zi = Zinv[bi];
      const std::size_t nk = b.coords.size();
      auto add = [&](std::size_t i, std::size_t j, double v) {
        const int ci = b.coords[i];
        const int cj = b.coords[j];
        if (i == j) {
          M(ci, ci) += v;
        } else {
          M(ci, cj) += v;
          M(cj, ci) += v;
        }
      };
      if (b.diagonal) {
        std::vector<std::vector<std::pair<std::size_t, double>>> rows(static_cast<std::size_t>(b.size));
        for (std::size_t k = 0; k < nk; ++k)
          for (const auto& t : b.entries[k]) rows[static_cast<std::size_t>(t.row)].emplace_back(k, t.value);
        for (int q = 0; q < b.size; ++q) {
          const double d = X(q, 0) * Zi(q, 0);
          const auto& row = rows[static_cast<std::size_t>(q)];
          for (std::size_t u = 0; u < row.size(); ++u)
            for (std::size_t w = u; w < row.size(); ++w) {
              const auto [i, a] = row[u];
              const auto [j, bb] = row[w];
              if (i == j && u != w) {
                M(b.coords[i], b.coords[i]) += 2.0 * a * bb * d;
              } else if (i <= j) {
                add(i, j, a * bb * d);
              } else {
                add(j, i, a * bb * d);
              }
            }
        }
        continue;
      }
      const double n = b.size;
      std::size_t prefix = 0;
      for (std::size_t j = 0; j < nk; ++j) {
        const auto& Fj = b.entries[j];
        prefix += b.entries[j].size();
        const double nnz = static_cast<double>(Fj.size());
        const double cost_sparse = nnz * static_cast<double>(prefix);
        const double cost_dense = std::min(nnz * n * n, n * n * n + nnz * n) + static_cast<double>(prefix);
        if (cost_sparse <= cost_dense) {
          for (std::size_t i = 0; i <= j; ++i) {
            double s = 0.0;
            for (const auto& ti : b.entries[i])
              for (const auto& tj : Fj) s += ti.value * tj.value * X(ti.col, tj.row) * Zi(tj.col, ti.row);
            add(i, j, s);
          }
        } else {
          MatrixXd G;
          if (nnz * n * n <= n * n * n + nnz * n) {
            G = MatrixXd::Zero(b.size, b.size);
            for (const auto& t : Fj) G.noalias() += t.value * X.col(t.row) * Zi.row(t.col);
          } else {
            MatrixXd XF = MatrixXd::Zero(b.size, b.size);
            for (const auto& t : Fj) XF.col(t.col) += t.value * X.col(t.row);
            G.noalias() = XF * Zi;
          }
          for (std::size_t i = 0; i <= j; ++i) {
            double s = 0.0;
            for (const auto& ti : b.entries[i]) s += ti.value * G(ti.col, ti.row);
            add(i, j, s);
          }
        }
      }
    }

    Eigen::LLT<MatrixXd> mchol(M);
    if (mchol.info() != Eigen::Success) {
      const double reg = 1e-12 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
      mchol.compute(M + reg * MatrixXd::Identity(m, m));
      if (mchol.info() != Eigen::Success) return finish(IpmStatus::kNumericalFailure, "singular Schur complement");
    }

    // Solves for a direction given sigma*mu and the second-order correction.
    auto direction = [&](double sigma_mu, const std::vector<MatrixXd>* corr, std::vector<MatrixXd>& dX,
                         VectorXd& dy, std::vector<MatrixXd>& dZ) {
      VectorXd h = -r.rp;
      std::vector<MatrixXd> base(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        if (blocks[b].diagonal) {
          base[b] = sigma_mu * Zinv[b] - it.X[b];
          if (corr) base[b] -= (*corr)[b];
          MatrixXd y = base[b] - (it.X[b].array() * r.Rd[b].array() * Zinv[b].array()).matrix();
          apply_adjoint(blocks[b], y, h);
        } else {
          base[b] = sigma_mu * Zinv[b] - it.X[b];
          if (corr) base[b] -= (*corr)[b];
          MatrixXd y = base[b] - it.X[b] * r.Rd[b] * Zinv[b];
          apply_adjoint(blocks[b], y, h);
        }
      }
      dy = mchol.solve(h);
      dX.resize(nb);
      dZ.resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        dZ[b] = r.Rd[b] + affine(blocks[b], dy) - blocks[b].constant;
        if (blocks[b].diagonal) {
          dX[b] = base[b] - (it.X[b].array() * dZ[b].array() * Zinv[b].array()).matrix();
        } else {
          dX[b] = symmetrize(base[b] - it.X[b] * dZ[b] * Zinv[b]);
        }
      }
    };

    auto step_lengths = [&](const std::vector<MatrixXd>& dX, const std::vector<MatrixXd>& dZ) {
      double ap = 1e10;
      double ad = 1e10;
      for (std::size_t b = 0; b < nb; ++b) {
        ap = std::min(ap, max_step(blocks[b], it.X[b], dX[b]));
        ad = std::min(ad, max_step(blocks[b], it.Z[b], dZ[b]));
      }
      return std::pair<double, double>(ap, ad);
    };

    // Predictor.
    std::vector<MatrixXd> dXa, dZa;
    VectorXd dya;
    direction(0.0, nullptr, dXa, dya, dZa);
    auto [apa, ada] = step_lengths(dXa, dZa);
    apa = std::min(1.0, apa);
    ada = std::min(1.0, ada);
    double mu_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      mu_aff += inner(blocks[b], it.X[b] + apa * dXa[b], it.Z[b] + ada * dZa[b]);
    mu_aff /= total_dim;
    const double ratio = std::clamp(mu_aff / mu, 0.0, 1.0);
    const double expon = std::max(1.0, 3.0 * std::min(apa, ada) * std::min(apa, ada));
    const double sigma = std::pow(ratio, expon);

    // Corrector.
    std::vector<MatrixXd> corr(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      if (blocks[b].diagonal) {
        corr[b] = (dXa[b].array() * dZa[b].array() * Zinv[b].array()).matrix();
      } else {
        corr[b] = dXa[b] * dZa[b] * Zinv[b];
      }
    }
    std::vector<MatrixXd> dX, dZ;
    VectorXd dy;
    direction(sigma * mu, &corr, dX, dy, dZ);
    auto [ap, ad] = step_lengths(dX, dZ);
    const double tau = 0.9 + 0.09 * std::min(apa, ada);
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);
    if (ap < 1e-12 && ad < 1e-12) return finish(IpmStatus::kNumericalFailure, "step length collapsed");

    for (std::size_t b = 0; b < nb; ++b) {
      it.X[b] += ap * dX[b];
      it.Z[b] += ad * dZ[b];
    }
    it.y += ad * dy;
  }
}

}  // namespace lipcert::detail
