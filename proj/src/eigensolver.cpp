#include "bandframe/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include "bandframe/errors.hpp"

namespace bandframe {

namespace {

// Eigenpairs with Euclidean-orthonormal vectors, before discrete normalization.
struct RawPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

RawPairs dense_pairs(const Eigen::SparseMatrix<double>& a, std::size_t count, double cap) {
  const auto n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXd dense = Eigen::MatrixXd(a);
  const bool by_index = count > 0;
  const lapack_int cols = by_index ? static_cast<lapack_int>(count) : n;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, cols);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', by_index ? 'I' : 'V', 'U', n, dense.data(), n, 0.0,
                     cap, 1, by_index ? cols : 1, 0.0, &found, w.data(), z.data(), n,
                     support.data());
  if (info != 0) {
    throw SolverError("dense eigensolver (dsyevr) failed with info " + std::to_string(info),
                      std::numeric_limits<double>::infinity());
  }
  return {w.head(found), z.leftCols(found)};
}

// Orthogonalizes the columns of `w` against q[:, :k] and each other, then appends them.
// Columns that vanish are replaced by fresh random directions.
std::size_t append_block(Eigen::MatrixXd& q, std::size_t& k, Eigen::MatrixXd w,
                         std::mt19937_64& rng) {
  const auto n = q.rows();
  std::normal_distribution<double> normal;
  std::size_t added = 0;
  for (int pass = 0; pass < 2 && k > 0; ++pass) {
    const auto basis = q.leftCols(static_cast<Eigen::Index>(k));
    w -= basis * (basis.transpose() * w);
  }
  for (Eigen::Index c = 0; c < w.cols() && k < static_cast<std::size_t>(q.cols()); ++c) {
    Eigen::VectorXd v = w.col(c);
    for (int attempt = 0; attempt < 4; ++attempt) {
      const double before = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        const auto basis = q.leftCols(static_cast<Eigen::Index>(k));
        v -= basis * (basis.transpose() * v);
      }
      const double after = v.norm();
      if (after > 1e-10 * std::max(before, 1e-300) && after > 0.0) break;
      for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    }
    q.col(static_cast<Eigen::Index>(k)) = v / v.norm();
    ++k;
    ++added;
  }
  return added;
}

// Block Krylov space of L^{-1} (shift-invert at zero) with full reorthogonalization and
// Rayleigh-Ritz against L itself.
RawPairs lanczos_pairs(const Eigen::SparseMatrix<double>& a, std::size_t m, double tol,
                       const SolverOptions& opts) {
  const auto n = static_cast<std::size_t>(a.rows());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol(a);
  if (chol.info() != Eigen::Success) {
    throw SolverError("sparse Cholesky factorization failed; operator is not positive definite",
                      std::numeric_limits<double>::infinity());
  }
  const std::size_t p = std::min(std::max<std::size_t>(opts.block_size, 1), n);
  const std::size_t budget = std::min(n, 6 * m + 20 * p + 200);
  std::size_t next_check = std::min(budget, std::max(m + p, (3 * m) / 2 + 2 * p));

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(budget));
  Eigen::MatrixXd lq(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(budget));
  std::size_t k = 0;

  Eigen::MatrixXd start(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < start.size(); ++i) start.data()[i] = normal(rng);
  std::size_t block_begin = 0;
  std::size_t block_size = append_block(q, k, start, rng);

  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    for (std::size_t c = block_begin; c < k; ++c) {
      lq.col(static_cast<Eigen::Index>(c)) = a * q.col(static_cast<Eigen::Index>(c));
    }
    if (k >= next_check || k >= budget) {
      const auto kk = static_cast<Eigen::Index>(k);
      Eigen::MatrixXd h = q.leftCols(kk).transpose() * lq.leftCols(kk);
      h = 0.5 * (h + h.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      const auto mm = static_cast<Eigen::Index>(std::min(m, k));
      const Eigen::MatrixXd y = es.eigenvectors().leftCols(mm);
      const Eigen::VectorXd theta = es.eigenvalues().head(mm);
      Eigen::MatrixXd v = q.leftCols(kk) * y;
      Eigen::MatrixXd r = lq.leftCols(kk) * y - v * theta.asDiagonal();
      double worst = 0.0;
      for (Eigen::Index i = 0; i < mm; ++i) {
        worst = std::max(worst, r.col(i).norm() / (std::abs(theta[i]) * v.col(i).norm()));
      }
      best = std::min(best, worst);
      if ((worst <= 0.5 * tol && mm == static_cast<Eigen::Index>(m)) || k >= n) {
        return {theta, v};
      }
      if (k >= budget) break;
      next_check = std::min(budget, std::max(k + p, (5 * k) / 4));
    }
    Eigen::MatrixXd w = chol.solve(q.middleCols(static_cast<Eigen::Index>(block_begin),
                                                static_cast<Eigen::Index>(block_size)));
    block_begin = k;
    block_size = append_block(q, k, std::move(w), rng);
    if (block_size == 0) break;
  }
  throw SolverError("iterative eigensolver did not reach tolerance within " +
                        std::to_string(budget) + " basis vectors (best residual " +
                        std::to_string(best) + ")",
                    best);
}

bool use_dense(const OperatorMatrix& op, const SolverOptions& opts) {
  switch (opts.method) {
  case SolverMethod::dense: return true;
  case SolverMethod::iterative: return false;
  case SolverMethod::automatic: break;
  }
  return op.size() <= opts.dense_threshold;
}

void validate_options(const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (!(opts.eta > 0.0)) throw ConfigError("solver.eta must be positive");
}

EigenBasis finish(RawPairs raw, const OperatorMatrix& op, const GridDomain& dom,
                  const SolverOptions& opts, std::string method) {
  EigenBasis basis;
  basis.weight = dom.weight();
  basis.tol = opts.tol;
  basis.lambda_reliable = reliability_cutoff(dom, opts.eta);
  basis.fingerprint = op.fingerprint;
  basis.method = std::move(method);

  Eigen::Index keep = 0;
  while (keep < raw.values.size() && raw.values[keep] <= basis.lambda_reliable) ++keep;
  if (keep < raw.values.size()) {
    basis.warnings.push_back("clipped " + std::to_string(raw.values.size() - keep) +
                             " eigenpairs above the reliability cutoff " +
                             std::to_string(basis.lambda_reliable));
  }
  if (keep == 0) {
    throw UnresolvedBandError("no eigenvalue lies below the reliability cutoff " +
                              std::to_string(basis.lambda_reliable));
  }
  basis.values = raw.values.head(keep);
  basis.vectors = raw.vectors.leftCols(keep) / std::sqrt(dom.weight());
  for (Eigen::Index i = 0; i < keep; ++i) {
    if (!(basis.values[i] > 0.0)) {
      throw SolverError("operator has a non-positive eigenvalue " +
                            std::to_string(basis.values[i]),
                        std::numeric_limits<double>::infinity());
    }
  }
  basis.max_residual = max_relative_residual(basis, op);
  if (basis.max_residual > opts.tol) {
    throw SolverError("eigenpair residual " + std::to_string(basis.max_residual) +
                          " exceeds tolerance " + std::to_string(opts.tol),
                      basis.max_residual);
  }
  return basis;
}

} // namespace

Eigen::VectorXd EigenBasis::coefficients(const GridFunction& f) const {
  if (f.size() != vectors.rows()) {
    throw ContractViolation("EigenBasis::coefficients: grid function length mismatch");
  }
  return weight * (vectors.transpose() * f);
}

GridFunction EigenBasis::expand(const Eigen::VectorXd& c) const {
  if (c.size() != vectors.cols()) {
    throw ContractViolation("EigenBasis::expand: coefficient count mismatch");
  }
  return vectors * c;
}

double reliability_cutoff(const GridDomain& dom, double eta) { return eta / (dom.h() * dom.h()); }

EigenBasis solve_lowest(const OperatorMatrix& op, const GridDomain& dom, std::size_t m,
                        const SolverOptions& opts) {
  validate_options(opts);
  if (op.size() != dom.size()) {
    throw ContractViolation("solve_lowest: operator and domain sizes differ");
  }
  if (m == 0 || m > op.size()) {
    throw ContractViolation("solve_lowest: requested " + std::to_string(m) +
                            " eigenpairs from an operator of size " + std::to_string(op.size()));
  }
  const bool dense = use_dense(op, opts);
  RawPairs raw = dense ? dense_pairs(op.matrix, m, 0.0) : lanczos_pairs(op.matrix, m, opts.tol, opts);
  const bool clipped = raw.values[raw.values.size() - 1] > reliability_cutoff(dom, opts.eta);
  auto basis = finish(std::move(raw), op, dom, opts, dense ? "dense" : "lanczos");
  basis.complete_to = clipped ? basis.lambda_reliable : basis.top();
  return basis;
}

EigenBasis solve_below(const OperatorMatrix& op, const GridDomain& dom, double cap,
                       const SolverOptions& opts) {
  validate_options(opts);
  const double reliable = reliability_cutoff(dom, opts.eta);
  if (cap > reliable) {
    throw UnresolvedBandError("eigenvalue cap " + std::to_string(cap) +
                              " exceeds the reliability cutoff " + std::to_string(reliable));
  }
  if (op.size() != dom.size()) {
    throw ContractViolation("solve_below: operator and domain sizes differ");
  }
  if (use_dense(op, opts)) {
    RawPairs raw = dense_pairs(op.matrix, 0, cap);
    if (raw.values.size() == 0) {
      throw UnresolvedBandError("no eigenvalue lies below " + std::to_string(cap));
    }
    auto basis = finish(std::move(raw), op, dom, opts, "dense");
    basis.complete_to = cap;
    return basis;
  }

  // Weyl-type guess, enlarged until the spectrum passes the cap.
  const double area = dom.measure();
  const double guess = dom.dimension() == 1 ? area * std::sqrt(cap) / std::numbers::pi
                                            : area * cap / (4.0 * std::numbers::pi);
  auto m = std::min<std::size_t>(op.size(), static_cast<std::size_t>(1.3 * guess) + 10);
  for (;;) {
    RawPairs raw = lanczos_pairs(op.matrix, m, opts.tol, opts);
    if (raw.values[raw.values.size() - 1] > cap || m == op.size()) {
      Eigen::Index keep = 0;
      while (keep < raw.values.size() && raw.values[keep] <= cap) ++keep;
      if (keep == 0) throw UnresolvedBandError("no eigenvalue lies below " + std::to_string(cap));
      raw.values.conservativeResize(keep);
      raw.vectors.conservativeResize(Eigen::NoChange, keep);
      auto basis = finish(std::move(raw), op, dom, opts, "lanczos");
      basis.complete_to = cap;
      return basis;
    }
    m = std::min(op.size(), m + m / 2 + 10);
  }
}

std::size_t dim_E(const EigenBasis& basis, double omega) {
  if (omega > basis.lambda_reliable) {
    throw UnresolvedBandError("unresolved band: omega " + std::to_string(omega) +
                              " exceeds the reliability cutoff " +
                              std::to_string(basis.lambda_reliable));
  }
  if (omega > basis.complete_to) {
    throw UnresolvedBandError("unresolved band: eigenpairs are only known up to " +
                              std::to_string(basis.complete_to));
  }
  std::size_t count = 0;
  while (count < basis.size() && basis.values[static_cast<Eigen::Index>(count)] <= omega) ++count;
  return count;
}

SpectralApplyResult spectral_apply(const EigenBasis& basis, const std::function<double(double)>& phi,
                                   const GridFunction& f) {
  Eigen::VectorXd c = basis.coefficients(f);
  const GridFunction inside = basis.expand(c);
  SpectralApplyResult out;
  out.dropped_norm = std::sqrt(basis.weight * (f - inside).squaredNorm());
  for (Eigen::Index m = 0; m < c.size(); ++m) c[m] *= phi(basis.values[m]);
  out.value = basis.expand(c);
  return out;
}

double orthonormality_error(const EigenBasis& basis) {
  const Eigen::MatrixXd gram = basis.weight * (basis.vectors.transpose() * basis.vectors);
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double max_relative_residual(const EigenBasis& basis, const OperatorMatrix& op) {
  double worst = 0.0;
  for (Eigen::Index m = 0; m < basis.vectors.cols(); ++m) {
    const Eigen::VectorXd u = basis.vectors.col(m);
    const Eigen::VectorXd r = op.matrix * u - basis.values[m] * u;
    worst = std::max(worst, std::sqrt(basis.weight) * r.norm() / basis.values[m]);
  }
  return worst;
}

} // namespace bandframe
