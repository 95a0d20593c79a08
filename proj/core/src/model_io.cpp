#include "lipcert/model_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lipcert/error.hpp"

namespace lipcert {

using nlohmann::json;

namespace {

Eigen::MatrixXd matrix_from_json(const json& rows, const char* what) {
  if (!rows.is_array()) throw Error(ErrorCode::kParseError, std::string(what) + " must be an array");
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  Eigen::Index n_cols = n_rows == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols) {
      throw Error(ErrorCode::kParseError, std::string(what) + " rows must be arrays of equal length");
    }
    for (Eigen::Index c = 0; c < n_cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& values, const char* what) {
  if (!values.is_array()) throw Error(ErrorCode::kParseError, std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json values = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) values.push_back(v(i));
  return values;
}

Activation activation_from_json(const json& layer) {
  const std::string name = layer.value("activation", std::string("linear"));
  auto a = parse_activation(name);
  if (!a) throw Error(ErrorCode::kParseError, "unknown activation '" + name + "'");
  return *a;
}

}  // namespace

NetworkSpec network_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  try {
    if (!doc.is_object()) throw Error(ErrorCode::kParseError, "model must be a JSON object");
    if (doc.contains("format") && doc["format"] != kModelFormat) {
      throw Error(ErrorCode::kParseError, "unsupported format " + doc["format"].dump());
    }
    NetworkSpec spec;
    spec.input_channels = doc.at("input_channels").get<int>();
    for (const json& layer : doc.at("layers")) {
      const std::string type = layer.at("type").get<std::string>();
      if (type == "conv") {
        ConvLayerSpec conv;
        for (const json& tap : layer.at("kernel")) conv.kernel.push_back(matrix_from_json(tap, "kernel tap"));
        conv.bias = vector_from_json(layer.at("bias"), "bias");
        conv.activation = activation_from_json(layer);
        spec.layers.emplace_back(std::move(conv));
      } else if (type == "pool") {
        PoolLayerSpec pool;
        const std::string kind = layer.at("kind").get<std::string>();
        if (kind == "avg") {
          pool.kind = PoolKind::kAverage;
        } else if (kind == "max") {
          pool.kind = PoolKind::kMaximum;
        } else {
          throw Error(ErrorCode::kParseError, "unknown pool kind '" + kind + "'");
        }
        pool.window = layer.at("window").get<int>();
        spec.layers.emplace_back(pool);
      } else if (type == "flatten") {
        spec.layers.emplace_back(FlattenMarker{});
      } else if (type == "dense") {
        DenseLayerSpec dense;
        dense.weight = matrix_from_json(layer.at("weight"), "weight");
        dense.bias = vector_from_json(layer.at("bias"), "bias");
        dense.activation = activation_from_json(layer);
        spec.layers.emplace_back(std::move(dense));
      } else {
        throw Error(ErrorCode::kParseError, "unknown layer type '" + type + "'");
      }
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

std::string network_to_json(const NetworkSpec& spec) {
  json doc;
  doc["format"] = kModelFormat;
  doc["input_channels"] = spec.input_channels;
  json layers = json::array();
  for (const LayerSpec& layer : spec.layers) {
    json entry;
    if (const auto* conv = std::get_if<ConvLayerSpec>(&layer)) {
      entry["type"] = "conv";
      json taps = json::array();
      for (const auto& tap : conv->kernel) taps.push_back(matrix_to_json(tap));
      entry["kernel"] = std::move(taps);
      entry["bias"] = vector_to_json(conv->bias);
      entry["activation"] = std::string(activation_name(conv->activation));
    } else if (const auto* pool = std::get_if<PoolLayerSpec>(&layer)) {
      entry["type"] = "pool";
      entry["kind"] = pool->kind == PoolKind::kAverage ? "avg" : "max";
      entry["window"] = pool->window;
    } else if (std::holds_alternative<FlattenMarker>(layer)) {
      entry["type"] = "flatten";
    } else {
      const auto& dense = std::get<DenseLayerSpec>(layer);
      entry["type"] = "dense";
      entry["weight"] = matrix_to_json(dense.weight);
      entry["bias"] = vector_to_json(dense.bias);
      entry["activation"] = std::string(activation_name(dense.activation));
    }
    layers.push_back(std::move(entry));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

NetworkSpec load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return network_from_json(buffer.str());
}

void save_network(const NetworkSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kParseError, "cannot write " + path.string());
  out << network_to_json(spec);
}

}  // namespace lipcert
