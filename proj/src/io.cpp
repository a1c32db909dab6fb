#include "gmmtf/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gmmtf {

using nlohmann::json;

namespace {

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix rows_matrix(const json& rows, Eigen::Index cols, const char* what) {
  if (!rows.is_array()) fail(ErrorCode::io_error, std::string(what) + " must be an array");
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorCode::io_error, std::string(what) + ": ragged row " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = row[j].get<double>();
  }
  return m;
}

json params_json(const GmmParams& p) {
  json j;
  j["d"] = p.dim();
  j["k"] = p.k();
  j["weights"] = std::vector<double>(p.weights.data(), p.weights.data() + p.weights.size());
  j["means"] = matrix_rows(p.means);
  if (p.scales) j["scales"] = matrix_rows(*p.scales);
  return j;
}

GmmParams params_of(const json& j) {
  const int d = j.at("d").get<int>();
  const int k = j.at("k").get<int>();
  GmmParams p;
  const auto w = j.at("weights").get<std::vector<double>>();
  if (static_cast<int>(w.size()) != k) fail(ErrorCode::io_error, "weights length != k");
  p.weights = Eigen::Map<const Vector>(w.data(), k);
  p.means = rows_matrix(j.at("means"), d, "means");
  if (p.means.rows() != k) fail(ErrorCode::io_error, "means count != k");
  if (j.contains("scales") && !j["scales"].is_null()) {
    p.scales = rows_matrix(j["scales"], d, "scales");
    if (p.scales->rows() != k) fail(ErrorCode::io_error, "scales count != k");
  }
  return p;
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::io_error, std::string("malformed JSON: ") + e.what());
  }
}

json flat_matrix(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_of(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    fail(ErrorCode::io_error, "matrix payload does not match its shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
  return m;
}

Activation parse_activation(const std::string& s) {
  if (s == "softmax") return Activation::softmax;
  if (s == "relu_scaled") return Activation::relu_scaled;
  fail(ErrorCode::io_error, "unknown activation '" + s + "'");
}

Pooling parse_pooling(const std::string& s) {
  if (s == "softmax") return Pooling::softmax;
  if (s == "linear_mean") return Pooling::linear_mean;
  fail(ErrorCode::io_error, "unknown pooling '" + s + "'");
}

// -- binary helpers --

static_assert(std::endian::native == std::endian::little,
              "binary weight format assumes a little-endian host");

constexpr char kMagic[8] = {'G', 'M', 'T', 'F', 'W', '\0', '\0', '\1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_matrix(std::ostream& out, const Matrix& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(rm.size() * sizeof(double)));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorCode::io_error, "truncated weight file");
  return v;
}

std::uint8_t get_u8(std::istream& in) {
  char c = 0;
  if (!in.get(c)) fail(ErrorCode::io_error, "truncated weight file");
  return static_cast<std::uint8_t>(c);
}

Matrix get_matrix(std::istream& in) {
  const std::uint32_t rows = get_u32(in);
  const std::uint32_t cols = get_u32(in);
  if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 32)) {
    fail(ErrorCode::io_error, "implausible matrix shape in weight file");
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  if (!in.read(reinterpret_cast<char*>(rm.data()),
               static_cast<std::streamsize>(rm.size() * sizeof(double)))) {
    fail(ErrorCode::io_error, "truncated weight file");
  }
  return rm;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string task_to_json(const Task& task, int indent) {
  json j = params_json(task.truth);
  j["k"] = task.k;
  j["data"] = matrix_rows(task.data);
  if (!task.labels.empty()) j["labels"] = task.labels;
  return j.dump(indent);
}

Task task_from_json(const std::string& text) {
  return guarded([&] {
    const json j = json::parse(text);
    Task t;
    t.truth = params_of(j);
    t.k = j.at("k").get<int>();
    t.data = rows_matrix(j.at("data"), t.truth.dim(), "data");
    if (j.contains("labels")) t.labels = j["labels"].get<std::vector<int>>();
    if (!t.labels.empty() && static_cast<int>(t.labels.size()) != t.n()) {
      fail(ErrorCode::io_error, "labels length != number of data rows");
    }
    return t;
  });
}

std::string params_to_json(const GmmParams& params, int indent) {
  return params_json(params).dump(indent);
}

GmmParams params_from_json(const std::string& text) {
  return guarded([&] { return params_of(json::parse(text)); });
}

std::string weights_to_json(const TfWeights& weights) {
  json j;
  j["format"] = "gmmtf-weights";
  j["version"] = 1;
  j["embed_dim"] = weights.embed_dim;
  json layers = json::array();
  for (const Layer& layer : weights.layers) {
    json heads = json::array();
    for (const AttnHead& h : layer.heads) {
      heads.push_back({{"query", flat_matrix(h.query)},
                       {"key", flat_matrix(h.key)},
                       {"value", flat_matrix(h.value)}});
    }
    layers.push_back({{"activation", to_string(layer.activation)},
                      {"heads", heads},
                      {"mlp", {{"w1", flat_matrix(layer.mlp.w1)}, {"w2", flat_matrix(layer.mlp.w2)}}}});
  }
  j["layers"] = layers;
  if (weights.readout) {
    const Readout& r = *weights.readout;
    j["readout"] = {{"pooling", to_string(r.pooling)},
                    {"value", flat_matrix(r.value)},
                    {"key", flat_matrix(r.key)},
                    {"query", flat_matrix(r.query)}};
  }
  return j.dump();
}

TfWeights weights_from_json(const std::string& text) {
  TfWeights w = guarded([&] {
    const json j = json::parse(text);
    if (j.value("format", "") != "gmmtf-weights") fail(ErrorCode::io_error, "not a weight file");
    TfWeights out;
    out.embed_dim = j.at("embed_dim").get<int>();
    for (const json& lj : j.at("layers")) {
      Layer layer;
      layer.activation = parse_activation(lj.at("activation").get<std::string>());
      for (const json& hj : lj.at("heads")) {
        layer.heads.push_back({matrix_of(hj.at("query")), matrix_of(hj.at("key")),
                               matrix_of(hj.at("value"))});
      }
      layer.mlp = {matrix_of(lj.at("mlp").at("w1")), matrix_of(lj.at("mlp").at("w2"))};
      out.layers.push_back(std::move(layer));
    }
    if (j.contains("readout")) {
      const json& rj = j["readout"];
      Readout r;
      r.pooling = parse_pooling(rj.at("pooling").get<std::string>());
      r.value = matrix_of(rj.at("value"));
      r.key = matrix_of(rj.at("key"));
      r.query = matrix_of(rj.at("query"));
      out.readout = std::move(r);
    }
    return out;
  });
  w.validate();
  return w;
}

void write_weights_binary(std::ostream& out, const TfWeights& weights) {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(weights.embed_dim));
  put_u32(out, static_cast<std::uint32_t>(weights.layers.size()));
  for (const Layer& layer : weights.layers) {
    put_u8(out, layer.activation == Activation::softmax ? 0 : 1);
    put_u32(out, static_cast<std::uint32_t>(layer.heads.size()));
    for (const AttnHead& h : layer.heads) {
      put_matrix(out, h.query);
      put_matrix(out, h.key);
      put_matrix(out, h.value);
    }
    put_matrix(out, layer.mlp.w1);
    put_matrix(out, layer.mlp.w2);
  }
  put_u8(out, weights.readout ? 1 : 0);
  if (weights.readout) {
    put_u8(out, weights.readout->pooling == Pooling::softmax ? 0 : 1);
    put_matrix(out, weights.readout->value);
    put_matrix(out, weights.readout->key);
    put_matrix(out, weights.readout->query);
  }
  if (!out) fail(ErrorCode::io_error, "failed to write weights");
}

TfWeights read_weights_binary(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    fail(ErrorCode::io_error, "bad weight file magic");
  }
  TfWeights w;
  w.embed_dim = static_cast<int>(get_u32(in));
  const std::uint32_t layers = get_u32(in);
  for (std::uint32_t l = 0; l < layers; ++l) {
    Layer layer;
    layer.activation = get_u8(in) == 0 ? Activation::softmax : Activation::relu_scaled;
    const std::uint32_t heads = get_u32(in);
    for (std::uint32_t h = 0; h < heads; ++h) {
      Matrix q = get_matrix(in);
      Matrix k = get_matrix(in);
      Matrix v = get_matrix(in);
      layer.heads.push_back({std::move(q), std::move(k), std::move(v)});
    }
    layer.mlp.w1 = get_matrix(in);
    layer.mlp.w2 = get_matrix(in);
    w.layers.push_back(std::move(layer));
  }
  if (get_u8(in) == 1) {
    Readout r;
    r.pooling = get_u8(in) == 0 ? Pooling::softmax : Pooling::linear_mean;
    r.value = get_matrix(in);
    r.key = get_matrix(in);
    r.query = get_matrix(in);
    w.readout = std::move(r);
  }
  w.validate();
  return w;
}

void save_weights(const std::string& path, const TfWeights& weights) {
  const bool as_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (as_json) {
    write_file(path, weights_to_json(weights));
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path);
  write_weights_binary(out, weights);
}

TfWeights load_weights(const std::string& path) {
  const bool as_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (as_json) return weights_from_json(read_file(path));
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  return read_weights_binary(in);
}

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream lines(text);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::invalid_argument, "config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorCode::invalid_argument, "config line " + std::to_string(number) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
  out << text;
  if (!out) fail(ErrorCode::io_error, "failed writing " + path);
}

}  // namespace gmmtf
