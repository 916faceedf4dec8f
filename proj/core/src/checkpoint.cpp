#include <fstream>

#include <json.hpp>

#include "gcsl/data_io.hpp"
#include "gcsl/trainer.hpp"

namespace gcsl {

namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw std::runtime_error("checkpoint: " + what + " must be an array");
  const int rows = static_cast<int>(j.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(j.at(0).size());
  Mat m(rows, cols, 0.0);
  for (int i = 0; i < rows; ++i) {
    const auto& row = j.at(i);
    if (static_cast<int>(row.size()) != cols)
      throw std::runtime_error("checkpoint: ragged rows in " + what);
    for (int c = 0; c < cols; ++c) m(i, c) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace

void save_checkpoint(const HybridModel& model, const std::string& path,
                     const std::string& config_echo_json) {
  json j;
  j["format"] = "gcsl-checkpoint";
  j["version"] = 1;
  j["classes"] = model.classes();
  j["feature_dim"] = model.feature_dim();
  j["input_dim"] = model.input_dim();
  j["disc"]["weights"] = mat_to_json(model.disc.weights);
  j["disc"]["biases"] = model.disc.biases;
  j["gen"]["mix_logits"] = model.gen.mix_logits;
  j["gen"]["means"] = mat_to_json(model.gen.means);
  // packed row-major lower triangle, log-space diagonal
  j["gen"]["precision_chol"] = model.gen.precision.raw();
  if (model.net) {
    json net;
    net["activation"] = model.net->activation == Activation::relu ? "relu" : "tanh";
    json layers = json::array();
    for (const auto& layer : model.net->layers) {
      json l;
      l["weights"] = mat_to_json(layer.weights);
      l["bias"] = layer.bias;
      layers.push_back(std::move(l));
    }
    net["layers"] = std::move(layers);
    j["net"] = std::move(net);
  }
  j["config"] = json::parse(config_echo_json);
  atomic_write_text(path, j.dump(2) + "\n");
}

std::pair<HybridModel, std::string> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/true);
  if (j.value("format", "") != "gcsl-checkpoint")
    throw std::runtime_error("not a gcsl checkpoint: " + path);
  if (j.value("version", 0) != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);

  const int classes = j.at("classes").get<int>();
  const int feature_dim = j.at("feature_dim").get<int>();
  require(classes >= 1 && feature_dim >= 1, "checkpoint: bad dimensions");

  HybridModel model(classes, feature_dim);
  model.disc.weights = mat_from_json(j.at("disc").at("weights"), "disc.weights");
  model.disc.biases = j.at("disc").at("biases").get<Vec>();
  model.gen.mix_logits = j.at("gen").at("mix_logits").get<Vec>();
  model.gen.means = mat_from_json(j.at("gen").at("means"), "gen.means");
  auto chol = j.at("gen").at("precision_chol").get<std::vector<double>>();
  require(static_cast<int>(chol.size()) == CholFactor::packed_size(feature_dim),
          "checkpoint: precision size mismatch");
  model.gen.precision.raw() = std::move(chol);

  if (j.contains("net")) {
    MlpParams net;
    net.activation =
        j.at("net").at("activation").get<std::string>() == "relu" ? Activation::relu
                                                                  : Activation::tanh;
    for (const auto& l : j.at("net").at("layers")) {
      MlpLayer layer;
      layer.weights = mat_from_json(l.at("weights"), "net layer weights");
      layer.bias = l.at("bias").get<Vec>();
      require(layer.weights.rows == static_cast<int>(layer.bias.size()),
              "checkpoint: net layer shape mismatch");
      net.layers.push_back(std::move(layer));
    }
    model.net = std::move(net);
  }

  require(model.disc.weights.rows == classes && model.disc.weights.cols == feature_dim &&
              static_cast<int>(model.disc.biases.size()) == classes &&
              model.gen.means.rows == classes && model.gen.means.cols == feature_dim &&
              static_cast<int>(model.gen.mix_logits.size()) == classes,
          "checkpoint: parameter shapes disagree with dimensions");

  std::string echo = j.contains("config") ? j.at("config").dump() : "{}";
  return {std::move(model), std::move(echo)};
}

}  // namespace gcsl
