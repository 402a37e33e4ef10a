#include "nntree/weights_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nntree/errors.hpp"

namespace nntree {
namespace {

using json = nlohmann::ordered_json;

const std::set<std::string>& known_activations() {
  static const std::set<std::string> names{
      "identity", "relu", "leaky_relu", "hard_tanh", "quantized_tanh", "quantized_sigmoid",
      "quantized", "pwl"};
  return names;
}

const json& require(const json& j, const char* key, const std::string& field) {
  if (!j.is_object()) throw SchemaError(field, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(field + "." + key, "missing field");
  return *it;
}

int as_int(const json& j, const std::string& field, int min_value) {
  if (!j.is_number_integer()) throw SchemaError(field, "expected an integer");
  const auto v = j.get<long long>();
  if (v < min_value || v > 1'000'000'000) throw SchemaError(field, "integer out of range");
  return static_cast<int>(v);
}

std::vector<double> as_reals(const json& j, const std::string& field) {
  if (!j.is_array()) throw SchemaError(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw SchemaError(field + "[" + std::to_string(i) + "]", "expected a number");
    }
    const double v = j[i].get<double>();
    if (!std::isfinite(v)) {
      throw SchemaError(field + "[" + std::to_string(i) + "]", "non-finite value");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<int> as_shape(const json& j, const std::string& field, std::size_t rank) {
  if (!j.is_array() || j.size() != rank) {
    throw SchemaError(field, "expected " + std::to_string(rank) + " dimensions");
  }
  std::vector<int> dims;
  for (std::size_t i = 0; i < rank; ++i) {
    dims.push_back(as_int(j[i], field + "[" + std::to_string(i) + "]", 1));
  }
  return dims;
}

Matrix matrix_from(const json& j, int rows, int cols, const std::string& field) {
  const auto values = as_reals(j, field);
  if (values.size() != static_cast<std::size_t>(rows) * cols) {
    throw SchemaError(field, "expected " + std::to_string(rows * cols) + " values for shape [" +
                                 std::to_string(rows) + "," + std::to_string(cols) + "], got " +
                                 std::to_string(values.size()));
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r) * cols + c];
  }
  return m;
}

Vector vector_from(const json& j, int size, const std::string& field) {
  const auto values = as_reals(j, field);
  if (values.size() != static_cast<std::size_t>(size)) {
    throw SchemaError(field, "expected " + std::to_string(size) + " values, got " +
                                 std::to_string(values.size()));
  }
  return Eigen::Map<const Vector>(values.data(), size);
}

json matrix_values(const Matrix& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

json vector_values(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json optional_activation(const std::optional<PwlActivation>& act) {
  return act ? activation_to_json(*act) : json(nullptr);
}

std::optional<PwlActivation> optional_activation_from(const json& layer,
                                                      const std::string& field) {
  auto it = layer.find("activation");
  if (it == layer.end() || it->is_null()) return std::nullopt;
  return activation_from_json(*it, field + ".activation");
}

}  // namespace

json activation_to_json(const PwlActivation& act) {
  json j;
  j["name"] = act.name();
  j["breakpoints"] = act.breakpoints();
  j["slopes"] = act.slopes();
  j["intercepts"] = act.intercepts();
  return j;
}

PwlActivation activation_from_json(const json& j, const std::string& field) {
  const json& name_j = require(j, "name", field);
  if (!name_j.is_string()) throw SchemaError(field + ".name", "expected a string");
  const std::string name = name_j.get<std::string>();
  if (!known_activations().contains(name)) {
    throw SchemaError(field + ".name", "unknown activation '" + name + "'");
  }
  const bool has_params = j.contains("slopes");
  if (!has_params) {
    if (name == "identity") return PwlActivation::identity();
    if (name == "relu") return PwlActivation::relu();
    if (name == "leaky_relu") return PwlActivation::leaky_relu();
    if (name == "hard_tanh") return PwlActivation::hard_tanh();
    throw SchemaError(field + ".slopes", "missing field");
  }
  std::vector<double> breakpoints =
      j.contains("breakpoints") ? as_reals(j["breakpoints"], field + ".breakpoints")
                                : std::vector<double>{};
  std::vector<double> slopes = as_reals(j["slopes"], field + ".slopes");
  std::vector<double> intercepts = j.contains("intercepts")
                                       ? as_reals(j["intercepts"], field + ".intercepts")
                                       : std::vector<double>{};
  try {
    return PwlActivation(name, std::move(breakpoints), std::move(slopes), std::move(intercepts));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(field, e.what());
  }
}

json network_to_json(const NetworkSpec& net) {
  const NetworkInfo& info = net.info();
  json doc;
  doc["format"] = "nntree-weights";
  doc["version"] = kWeightsVersion;
  doc["name"] = info.name;
  doc["seed"] = info.seed;
  if (info.input_shape) {
    doc["input_shape"] = {info.input_shape->channels, info.input_shape->height,
                          info.input_shape->width};
  } else {
    doc["input_dim"] = net.declared_input_dim();
  }
  if (info.horizon > 0) doc["horizon"] = info.horizon;
  doc["output_activation"] =
      info.output_activation == OutputActivation::sigmoid ? "sigmoid" : "none";
  if (info.homogeneous) doc["homogeneous"] = true;

  json layers = json::array();
  for (const Layer& layer : net.layers()) {
    json l;
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      l["type"] = "dense";
      l["shape"] = {d->outputs(), d->inputs()};
      l["weights"] = matrix_values(d->weights);
      l["bias"] = vector_values(d->bias);
      l["activation"] = optional_activation(d->activation);
    } else if (const auto* r = std::get_if<ResidualBlock>(&layer)) {
      l["type"] = "residual";
      l["shape"] = {r->width(), r->width()};
      l["weights"] = matrix_values(r->weights);
      l["activation"] = activation_to_json(r->activation);
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      l["type"] = "conv";
      l["shape"] = {c->out_channels, c->in_channels, c->kernel_h, c->kernel_w};
      l["weights"] = c->kernel;
      l["bias"] = vector_values(c->bias);
      l["stride"] = c->stride;
      l["padding"] = c->padding;
      l["activation"] = optional_activation(c->activation);
    } else if (const auto* rnn = std::get_if<RnnCell>(&layer)) {
      l["type"] = "rnn";
      l["shape"] = {rnn->hidden(), rnn->inputs(), rnn->outputs()};
      l["weights"] = {{"w_rec", matrix_values(rnn->w_rec)},
                      {"u_in", matrix_values(rnn->u_in)},
                      {"v_out", matrix_values(rnn->v_out)}};
      l["bias"] = vector_values(rnn->bias_h);
      l["activation"] = activation_to_json(rnn->activation);
    }
    layers.push_back(std::move(l));
  }
  doc["layers"] = std::move(layers);
  return doc;
}

NetworkSpec network_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("<document>", "expected a JSON object");
  const int version = as_int(require(doc, "version", "<document>"), "version", 1);
  if (version != kWeightsVersion) {
    throw SchemaError("version", "unsupported version " + std::to_string(version));
  }

  NetworkInfo info;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw SchemaError("name", "expected a string");
    info.name = doc["name"].get<std::string>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      throw SchemaError("seed", "expected a non-negative integer");
    }
    info.seed = doc["seed"].get<std::uint64_t>();
  }
  int input_dim = 0;
  if (doc.contains("input_shape")) {
    const auto dims = as_shape(doc["input_shape"], "input_shape", 3);
    info.input_shape = TensorShape{dims[0], dims[1], dims[2]};
    input_dim = info.input_shape->size();
  } else {
    input_dim = as_int(require(doc, "input_dim", "<document>"), "input_dim", 1);
  }
  if (doc.contains("horizon")) info.horizon = as_int(doc["horizon"], "horizon", 1);
  if (doc.contains("output_activation")) {
    const json& oa = doc["output_activation"];
    if (oa == "sigmoid") {
      info.output_activation = OutputActivation::sigmoid;
    } else if (oa != "none") {
      throw SchemaError("output_activation", "expected \"none\" or \"sigmoid\"");
    }
  }
  if (doc.contains("homogeneous")) {
    if (!doc["homogeneous"].is_boolean()) throw SchemaError("homogeneous", "expected a boolean");
    info.homogeneous = doc["homogeneous"].get<bool>();
  }

  const json& layers_j = require(doc, "layers", "<document>");
  if (!layers_j.is_array()) throw SchemaError("layers", "expected an array");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < layers_j.size(); ++i) {
    const std::string field = "layers[" + std::to_string(i) + "]";
    const json& l = layers_j[i];
    const json& type_j = require(l, "type", field);
    const std::string type = type_j.is_string() ? type_j.get<std::string>() : std::string();
    if (type == "dense") {
      const auto s = as_shape(require(l, "shape", field), field + ".shape", 2);
      DenseLayer d;
      d.weights = matrix_from(require(l, "weights", field), s[0], s[1], field + ".weights");
      d.bias = vector_from(require(l, "bias", field), s[0], field + ".bias");
      d.activation = optional_activation_from(l, field);
      layers.emplace_back(std::move(d));
    } else if (type == "residual") {
      const auto s = as_shape(require(l, "shape", field), field + ".shape", 2);
      if (s[0] != s[1]) throw SchemaError(field + ".shape", "residual weights must be square");
      ResidualBlock r{matrix_from(require(l, "weights", field), s[0], s[1], field + ".weights"),
                      activation_from_json(require(l, "activation", field),
                                           field + ".activation")};
      layers.emplace_back(std::move(r));
    } else if (type == "conv") {
      const auto s = as_shape(require(l, "shape", field), field + ".shape", 4);
      ConvLayer c;
      c.out_channels = s[0];
      c.in_channels = s[1];
      c.kernel_h = s[2];
      c.kernel_w = s[3];
      c.kernel = as_reals(require(l, "weights", field), field + ".weights");
      if (c.kernel.size() != static_cast<std::size_t>(s[0]) * s[1] * s[2] * s[3]) {
        throw SchemaError(field + ".weights", "size does not match shape");
      }
      c.bias = vector_from(require(l, "bias", field), s[0], field + ".bias");
      if (l.contains("stride")) c.stride = as_int(l["stride"], field + ".stride", 1);
      if (l.contains("padding")) c.padding = as_int(l["padding"], field + ".padding", 0);
      c.activation = optional_activation_from(l, field);
      layers.emplace_back(std::move(c));
    } else if (type == "rnn") {
      const auto s = as_shape(require(l, "shape", field), field + ".shape", 3);
      const json& w = require(l, "weights", field);
      RnnCell cell{matrix_from(require(w, "w_rec", field + ".weights"), s[0], s[0],
                               field + ".weights.w_rec"),
                   matrix_from(require(w, "u_in", field + ".weights"), s[0], s[1],
                               field + ".weights.u_in"),
                   matrix_from(require(w, "v_out", field + ".weights"), s[2], s[0],
                               field + ".weights.v_out"),
                   vector_from(require(l, "bias", field), s[0], field + ".bias"),
                   activation_from_json(require(l, "activation", field),
                                        field + ".activation")};
      layers.emplace_back(std::move(cell));
    } else {
      throw SchemaError(field + ".type", "unknown layer type '" + type + "'");
    }
  }
  return NetworkSpec(input_dim, std::move(layers), std::move(info));
}

std::string dump_network(const NetworkSpec& net) { return network_to_json(net).dump(2) + "\n"; }

NetworkSpec parse_network(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<document>", e.what());
  }
  return network_from_json(doc);
}

void save_network(const NetworkSpec& net, const std::filesystem::path& path) {
  write_text_file(path, dump_network(net));
}

NetworkSpec load_network(const std::filesystem::path& path) {
  return parse_network(read_text_file(path));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace nntree
