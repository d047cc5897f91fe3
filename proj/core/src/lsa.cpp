#include "nimbus/lsa.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "nimbus/csv.hpp"
#include "nimbus/error.hpp"
#include "nimbus/rng.hpp"

namespace nimbus::lsa {

namespace {

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

SparseMatrix from_binary_vectors(const std::vector<textfeat::SparseBinaryVector>& rows) {
  const std::uint32_t dim = rows.empty() ? 0 : rows.front().dimension;
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].dimension != dim) {
      throw DataError("feature vectors disagree on dimension at row " + std::to_string(r));
    }
    for (const std::uint32_t j : rows[r].on_indices) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(j), 1.0);
    }
  }
  SparseMatrix x(static_cast<int>(rows.size()), static_cast<int>(dim));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

TfIdfModel TfIdfModel::fit(const SparseMatrix& x) {
  if (x.rows() < 1) throw DataError("tf-idf fit needs at least one row");
  Eigen::VectorXd df = Eigen::VectorXd::Zero(x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) {
      if (it.value() != 0.0) df[it.col()] += 1.0;
    }
  }
  TfIdfModel model;
  model.doc_count = x.rows();
  const double n = static_cast<double>(x.rows());
  model.idf = (((1.0 + n) / (df.array() + 1.0)).log() + 1.0).matrix();
  return model;
}

SparseMatrix apply_tfidf(const TfIdfModel& model, const SparseMatrix& x) {
  if (x.cols() != model.idf.size()) {
    throw DataError("tf-idf model has " + std::to_string(model.idf.size()) +
                    " features, matrix has " + std::to_string(x.cols()));
  }
  SparseMatrix out = x;
  for (int r = 0; r < out.rows(); ++r) {
    double sq = 0.0;
    for (SparseMatrix::InnerIterator it(out, r); it; ++it) {
      it.valueRef() *= model.idf[it.col()];
      sq += it.value() * it.value();
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (SparseMatrix::InnerIterator it(out, r); it; ++it) it.valueRef() *= inv;
    }
  }
  return out;
}

LsaModel fit_truncated_svd(const SparseMatrix& x, int k, std::uint64_t seed,
                           const SvdOptions& options) {
  const int max_rank = static_cast<int>(std::min(x.rows(), x.cols()));
  if (k < 1 || k > max_rank) {
    throw ConfigError("svd rank " + std::to_string(k) + " outside [1, " +
                      std::to_string(max_rank) + "]");
  }
  const int sketch = std::min(k + options.oversample, max_rank);

  Rng rng(mix_seed(seed, kStreamInit));
  Eigen::MatrixXd omega(x.cols(), sketch);
  for (int r = 0; r < omega.rows(); ++r) {
    for (int c = 0; c < omega.cols(); ++c) omega(r, c) = rng.normal();
  }

  Eigen::MatrixXd q = thin_q(x * omega);
  for (int iter = 0; iter < options.power_iters; ++iter) {
    const Eigen::MatrixXd z = thin_q(x.transpose() * q);
    q = thin_q(x * z);
  }

  const Eigen::MatrixXd b = (x.transpose() * q).transpose();  // sketch x cols
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);

  LsaModel model;
  model.singular_values = svd.singularValues().head(k);
  model.components = svd.matrixV().leftCols(k).transpose();
  return model;
}

Eigen::VectorXd project(const LsaModel& model, const textfeat::SparseBinaryVector& x) {
  if (static_cast<int>(x.dimension) != model.cols()) {
    throw DataError("projection input has dimension " + std::to_string(x.dimension) +
                    ", model expects " + std::to_string(model.cols()));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.k());
  for (const std::uint32_t j : x.on_indices) out += model.components.col(j);
  return out;
}

Eigen::VectorXd project(const LsaModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.cols()) {
    throw DataError("projection input has dimension " + std::to_string(x.size()) +
                    ", model expects " + std::to_string(model.cols()));
  }
  return model.components * x;
}

Eigen::MatrixXd project_rows(const LsaModel& model, const SparseMatrix& x) {
  if (x.cols() != model.cols()) {
    throw DataError("projection input has " + std::to_string(x.cols()) +
                    " columns, model expects " + std::to_string(model.cols()));
  }
  return x * model.components.transpose();
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 1) throw DataError("standardizer fit needs at least one row");
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  const Eigen::ArrayXd var =
      (x.rowwise() - s.mean.transpose()).array().square().colwise().mean();
  s.inv_std = (var > 1e-24).select(var.sqrt().inverse(), 1.0).matrix();
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) {
    throw DataError("standardizer fitted on " + std::to_string(mean.size()) +
                    " dims, input has " + std::to_string(x.cols()));
  }
  return (x.rowwise() - mean.transpose()) * inv_std.asDiagonal();
}

void save_sparse_matrix(const SparseMatrix& x, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << x.rows() << ' ' << x.cols() << ' ' << x.nonZeros() << '\n';
  for (int r = 0; r < x.rows(); ++r) {
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) {
      out << r << ' ' << it.col() << ' ' << csv::format_double(it.value()) << '\n';
    }
  }
}

SparseMatrix load_sparse_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  long rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
    throw DataError(path + ": bad sparse matrix header");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  for (long i = 0; i < nnz; ++i) {
    long r = 0, c = 0;
    std::string value_text;
    if (!(in >> r >> c >> value_text)) {
      throw DataError(path + ": truncated triplet list at entry " + std::to_string(i));
    }
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw DataError(path + ": triplet (" + std::to_string(r) + ", " + std::to_string(c) +
                      ") out of bounds");
    }
    triplets.emplace_back(static_cast<int>(r), static_cast<int>(c),
                          csv::parse_double(value_text, path.c_str()));
  }
  SparseMatrix x(static_cast<int>(rows), static_cast<int>(cols));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

}  // namespace nimbus::lsa
