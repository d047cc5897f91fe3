#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <vector>

#include "nimbus/textfeat.hpp"

namespace nimbus::lsa {

// Row-major so per-document iteration is cheap; one row per message.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

SparseMatrix from_binary_vectors(const std::vector<textfeat::SparseBinaryVector>& rows);

/// Smoothed inverse document frequencies: idf[j] = ln((1+N)/(1+df_j)) + 1,
/// which keeps every value >= 1 and tolerates features absent from the
/// fitting corpus.
struct TfIdfModel {
  Eigen::VectorXd idf;
  std::int64_t doc_count = 0;

  static TfIdfModel fit(const SparseMatrix& x);
};

/// Scales each nonzero by its feature's idf, then L2-normalizes every row.
/// All-zero rows pass through unchanged.
SparseMatrix apply_tfidf(const TfIdfModel& model, const SparseMatrix& x);

/// Truncated SVD factor: `components` holds the top-k right singular vectors
/// as rows (k x cols, orthonormal rows), singular values non-increasing.
struct LsaModel {
  Eigen::MatrixXd components;
  Eigen::VectorXd singular_values;

  int k() const { return static_cast<int>(components.rows()); }
  int cols() const { return static_cast<int>(components.cols()); }
};

struct SvdOptions {
  int power_iters = 4;
  int oversample = 10;
};

/// Randomized range-finder truncated SVD (Gaussian sketch, QR-stabilized
/// power iterations, dense SVD of the projected matrix). No mean-centering.
/// Deterministic for a fixed seed. Throws ConfigError when k is out of
/// [1, min(rows, cols)].
LsaModel fit_truncated_svd(const SparseMatrix& x, int k, std::uint64_t seed,
                           const SvdOptions& options = {});

/// components * x for one sparse row. Throws DataError on width mismatch.
Eigen::VectorXd project(const LsaModel& model, const textfeat::SparseBinaryVector& x);
Eigen::VectorXd project(const LsaModel& model, const Eigen::VectorXd& x);

/// Projects every row of x; returns rows x k.
Eigen::MatrixXd project_rows(const LsaModel& model, const SparseMatrix& x);

/// Per-dimension affine rescaling to zero mean / unit variance, fitted on a
/// dense feature matrix. Constant dimensions keep scale 1 so they map to 0.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_std;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

// Text persistence: header `rows cols nnz`, then one `row col value` triplet
// per line. Values use shortest round-trip formatting.
void save_sparse_matrix(const SparseMatrix& x, const std::string& path);
SparseMatrix load_sparse_matrix(const std::string& path);

}  // namespace nimbus::lsa
