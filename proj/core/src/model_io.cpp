#include "nimbus/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "nimbus/csv.hpp"
#include "nimbus/error.hpp"

namespace nimbus::model_io {

namespace {

constexpr const char* kMagic = "nimbus-model";
constexpr int kVersion = 1;

class Reader {
 public:
  Reader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open file: " + path);
  }

  std::string token() {
    std::string t;
    if (!(in_ >> t)) throw DataError(path_ + ": truncated model file");
    return t;
  }

  void expect(const std::string& literal) {
    const std::string t = token();
    if (t != literal) {
      throw DataError(path_ + ": expected '" + literal + "', found '" + t + "'");
    }
  }

  long integer() { return csv::parse_long(token(), path_.c_str()); }

  long positive(const char* what) {
    const long v = integer();
    if (v < 1) throw DataError(path_ + ": " + what + " must be >= 1");
    return v;
  }

  double value() { return parse_hexfloat(token(), path_.c_str()); }

  Eigen::MatrixXd matrix(long rows, long cols) {
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) m(r, c) = value();
    }
    return m;
  }

  Eigen::VectorXd vector(long n) {
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = value();
    return v;
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

class Writer {
 public:
  Writer(const std::string& path, const char* kind) : out_(path) {
    if (!out_) throw DataError("cannot write file: " + path);
    out_ << kMagic << ' ' << kVersion << '\n' << "kind " << kind << '\n';
  }

  void line(const std::string& text) { out_ << text << '\n'; }

  void matrix(const Eigen::MatrixXd& m) {
    for (long r = 0; r < m.rows(); ++r) {
      for (long c = 0; c < m.cols(); ++c) {
        if (c > 0) out_ << ' ';
        out_ << hexfloat(m(r, c));
      }
      out_ << '\n';
    }
  }

  void vector(const Eigen::VectorXd& v) {
    for (long i = 0; i < v.size(); ++i) {
      if (i > 0) out_ << ' ';
      out_ << hexfloat(v[i]);
    }
    out_ << '\n';
  }

  void finish() { out_ << "end\n"; }

 private:
  std::ofstream out_;
};

std::string read_header_kind(Reader& reader) {
  reader.expect(kMagic);
  const long version = reader.integer();
  if (version != kVersion) {
    throw DataError(reader.path() + ": unsupported container version " +
                    std::to_string(version));
  }
  reader.expect("kind");
  return reader.token();
}

void expect_kind(Reader& reader, const std::string& kind) {
  const std::string found = read_header_kind(reader);
  if (found != kind) {
    throw DataError(reader.path() + ": holds a '" + found + "' model, expected '" + kind +
                    "'");
  }
}

}  // namespace

std::string hexfloat(double value) {
  char buffer[40];
  const auto [end, ec] =
      std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::hex);
  if (ec != std::errc()) throw NumericError("hex float formatting failed");
  return std::string(buffer, end);
}

double parse_hexfloat(const std::string& text, const char* context) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value,
                                         std::chars_format::hex);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw DataError(std::string(context) + ": bad hex float '" + text + "'");
  }
  return value;
}

std::string peek_kind(const std::string& path) {
  Reader reader(path);
  return read_header_kind(reader);
}

void save_network(const neural::Network& net, const std::string& path) {
  net.validate();
  Writer writer(path, "network");
  std::ostringstream head;
  head << "head ";
  if (net.head.softmax_groups.empty()) {
    head << '-';
  } else {
    for (std::size_t i = 0; i < net.head.softmax_groups.size(); ++i) {
      if (i > 0) head << ',';
      head << net.head.softmax_groups[i];
    }
  }
  head << ' ' << net.head.sigmoid_count;
  writer.line(head.str());
  writer.line("layers " + std::to_string(net.layers.size()));
  for (const neural::Layer& layer : net.layers) {
    writer.line("layer " + std::to_string(layer.fan_out()) + ' ' +
                std::to_string(layer.fan_in()) + ' ' + neural::to_string(layer.activation));
    writer.line("W");
    writer.matrix(layer.weights);
    writer.line("b");
    writer.vector(layer.bias);
  }
  writer.finish();
}

neural::Network load_network(const std::string& path) {
  Reader reader(path);
  expect_kind(reader, "network");
  reader.expect("head");
  neural::Network net;
  const std::string groups = reader.token();
  if (groups != "-") {
    net.head.softmax_groups.clear();
    std::istringstream parts(groups);
    std::string part;
    while (std::getline(parts, part, ',')) {
      net.head.softmax_groups.push_back(
          static_cast<int>(csv::parse_long(part, path.c_str())));
    }
  } else {
    net.head.softmax_groups.clear();
  }
  net.head.sigmoid_count = static_cast<int>(reader.integer());
  reader.expect("layers");
  const long layer_count = reader.positive("layer count");
  for (long i = 0; i < layer_count; ++i) {
    reader.expect("layer");
    const long out = reader.positive("fan-out");
    const long in = reader.positive("fan-in");
    const std::string activation_name = reader.token();
    const auto activation = neural::parse_activation(activation_name);
    if (!activation) throw DataError(path + ": unknown activation " + activation_name);
    neural::Layer layer;
    layer.activation = *activation;
    reader.expect("W");
    layer.weights = reader.matrix(out, in);
    reader.expect("b");
    layer.bias = reader.vector(out);
    net.layers.push_back(std::move(layer));
  }
  reader.expect("end");
  net.validate();
  return net;
}

void save_rbm_stack(const std::vector<pretrain::Rbm>& rbms, const std::string& path) {
  Writer writer(path, "rbm_stack");
  writer.line("rbms " + std::to_string(rbms.size()));
  for (const pretrain::Rbm& rbm : rbms) {
    writer.line(std::string("rbm ") + pretrain::to_string(rbm.visible_type) + ' ' +
                std::to_string(rbm.hidden()) + ' ' + std::to_string(rbm.visible()));
    writer.line("W");
    writer.matrix(rbm.weights);
    writer.line("a");
    writer.vector(rbm.visible_bias);
    writer.line("b");
    writer.vector(rbm.hidden_bias);
  }
  writer.finish();
}

std::vector<pretrain::Rbm> load_rbm_stack(const std::string& path) {
  Reader reader(path);
  expect_kind(reader, "rbm_stack");
  reader.expect("rbms");
  const long count = reader.positive("rbm count");
  std::vector<pretrain::Rbm> rbms;
  for (long i = 0; i < count; ++i) {
    reader.expect("rbm");
    const std::string type_name = reader.token();
    const auto type = pretrain::parse_visible_type(type_name);
    if (!type) throw DataError(path + ": unknown visible type " + type_name);
    const long hidden = reader.positive("hidden size");
    const long visible = reader.positive("visible size");
    pretrain::Rbm rbm;
    rbm.visible_type = *type;
    reader.expect("W");
    rbm.weights = reader.matrix(hidden, visible);
    reader.expect("a");
    rbm.visible_bias = reader.vector(visible);
    reader.expect("b");
    rbm.hidden_bias = reader.vector(hidden);
    rbms.push_back(std::move(rbm));
  }
  reader.expect("end");
  return rbms;
}

void save_lsa(const lsa::LsaModel& model, const std::string& path) {
  Writer writer(path, "lsa");
  writer.line("k " + std::to_string(model.k()));
  writer.line("cols " + std::to_string(model.cols()));
  writer.line("singular_values");
  writer.vector(model.singular_values);
  writer.line("components");
  writer.matrix(model.components);
  writer.finish();
}

lsa::LsaModel load_lsa(const std::string& path) {
  Reader reader(path);
  expect_kind(reader, "lsa");
  reader.expect("k");
  const long k = reader.positive("rank");
  reader.expect("cols");
  const long cols = reader.positive("column count");
  lsa::LsaModel model;
  reader.expect("singular_values");
  model.singular_values = reader.vector(k);
  reader.expect("components");
  model.components = reader.matrix(k, cols);
  reader.expect("end");
  return model;
}

void save_tfidf(const lsa::TfIdfModel& model, const std::string& path) {
  Writer writer(path, "tfidf");
  writer.line("docs " + std::to_string(model.doc_count));
  writer.line("cols " + std::to_string(model.idf.size()));
  writer.line("idf");
  writer.vector(model.idf);
  writer.finish();
}

lsa::TfIdfModel load_tfidf(const std::string& path) {
  Reader reader(path);
  expect_kind(reader, "tfidf");
  reader.expect("docs");
  const long docs = reader.integer();
  reader.expect("cols");
  const long cols = reader.positive("column count");
  lsa::TfIdfModel model;
  model.doc_count = docs;
  reader.expect("idf");
  model.idf = reader.vector(cols);
  reader.expect("end");
  return model;
}

void save_dense_matrix(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << m.rows() << ' ' << m.cols() << '\n';
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << csv::format_double(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd load_dense_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw DataError(path + ": bad dense matrix header");
  }
  Eigen::MatrixXd m(rows, cols);
  std::string tokenbuf;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!(in >> tokenbuf)) throw DataError(path + ": truncated dense matrix");
      m(r, c) = csv::parse_double(tokenbuf, path.c_str());
    }
  }
  return m;
}

}  // namespace nimbus::model_io
