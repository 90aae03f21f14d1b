#include "ktuplet/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ktuplet/errors.hpp"

namespace ktuplet {

nlohmann::json net_to_json(const FeedForwardNet& net) {
  nlohmann::json j;
  j["layer_dims"] = net.layer_dims;
  std::vector<std::string> acts;
  for (Activation a : net.activations) acts.push_back(activation_name(a));
  j["activations"] = acts;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    weights.push_back(net.weights[l].values);  // row-major (n_in x n_out)
    biases.push_back(net.biases[l]);
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

FeedForwardNet net_from_json(const nlohmann::json& j) {
  FeedForwardNet net;
  net.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
  for (const auto& name : j.at("activations")) {
    net.activations.push_back(activation_from_name(name.get<std::string>()));
  }
  if (net.layer_dims.size() < 2 ||
      net.activations.size() != net.layer_dims.size() - 1) {
    throw ParseError("net_from_json: inconsistent layer_dims/activations");
  }
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != net.activations.size() ||
      biases.size() != net.activations.size()) {
    throw ParseError("net_from_json: wrong number of parameter arrays");
  }
  for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
    const std::size_t n_in = net.layer_dims[l];
    const std::size_t n_out = net.layer_dims[l + 1];
    auto w = weights[l].get<std::vector<double>>();
    if (w.size() != n_in * n_out) {
      throw ParseError("net_from_json: weight array " + std::to_string(l) +
                       " has wrong length");
    }
    net.weights.emplace_back(n_in, n_out, std::move(w));
    auto b = biases[l].get<std::vector<double>>();
    if (b.size() != n_out) {
      throw ParseError("net_from_json: bias array " + std::to_string(l) +
                       " has wrong length");
    }
    net.biases.push_back(std::move(b));
  }
  return net;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move temp file into place at '" + path + "'");
  }
}

}  // namespace ktuplet
