#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "nimbus/lsa.hpp"
#include "nimbus/neural.hpp"
#include "nimbus/pretrain.hpp"

namespace nimbus::model_io {

/// Versioned text container (`nimbus-model 1`) holding one of: a network, an
/// rbm stack, an lsa factor, or a tf-idf model. Floating-point payloads are
/// hex floats, so round-trips are bit-exact. docs/formats.md has the layout.

/// Lossless hex representation of a double (no 0x prefix).
std::string hexfloat(double value);
double parse_hexfloat(const std::string& text, const char* context);

/// `kind` line of a container file, e.g. "network" or "rbm_stack".
std::string peek_kind(const std::string& path);

void save_network(const neural::Network& net, const std::string& path);
neural::Network load_network(const std::string& path);

void save_rbm_stack(const std::vector<pretrain::Rbm>& rbms, const std::string& path);
std::vector<pretrain::Rbm> load_rbm_stack(const std::string& path);

void save_lsa(const lsa::LsaModel& model, const std::string& path);
lsa::LsaModel load_lsa(const std::string& path);

void save_tfidf(const lsa::TfIdfModel& model, const std::string& path);
lsa::TfIdfModel load_tfidf(const std::string& path);

/// Dense matrix text file: `rows cols` header, then one row per line with
/// shortest round-trip decimals. Used for projected feature matrices.
void save_dense_matrix(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd load_dense_matrix(const std::string& path);

}  // namespace nimbus::model_io
