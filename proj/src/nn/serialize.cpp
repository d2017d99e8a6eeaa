#include "mdgan/nn/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mdgan/error.hpp"

namespace mdgan::nn {
namespace {

using nlohmann::json;

json tensor_json(const std::string& name, const char* kind, const Matrix& m) {
  return json{{"name", name},
              {"kind", kind},
              {"shape", {m.rows(), m.cols()}},
              {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

void read_tensor(const json& entry, const std::string& name, Matrix& target) {
  if (entry.at("name").get<std::string>() != name) {
    throw ParseError("checkpoint tensor '" + entry.at("name").get<std::string>() +
                         "' where '" + name + "' was expected",
                     0);
  }
  const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2 || shape[0] != target.rows() || shape[1] != target.cols()) {
    throw ConfigError("checkpoint tensor '" + name + "' has the wrong shape");
  }
  auto data = entry.at("data").get<std::vector<double>>();
  target = Matrix(shape[0], shape[1], std::move(data));
}

}  // namespace

std::string save_parameters(const LayerStack& stack) {
  json tensors = json::array();
  for (const auto& t : stack.tensors()) {
    tensors.push_back(tensor_json(t.name, t.is_buffer ? "buffer" : "parameter", *t.value));
  }
  json doc{{"magic", kCheckpointMagic},
           {"version", kCheckpointVersion},
           {"input_dim", stack.input_dim()},
           {"widths", stack.widths()},
           {"tensors", std::move(tensors)}};
  return doc.dump();
}

void load_parameters(LayerStack& stack, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(), 0);
  }
  if (doc.value("magic", "") != kCheckpointMagic) throw ParseError("not an mdgan parameter checkpoint", 0);
  if (doc.value("version", 0) != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + doc.value("version", json(0)).dump(), 0);
  }
  if (doc.at("widths").get<std::vector<std::size_t>>() != stack.widths()) {
    throw ConfigError("checkpoint layer widths do not match the target network");
  }
  const auto params = stack.parameters();
  const auto bufs = stack.buffers();
  const auto& tensors = doc.at("tensors");
  if (tensors.size() != params.size() + bufs.size()) {
    throw ConfigError("checkpoint tensor count does not match the target network");
  }
  // Stage into copies so a failed load leaves the stack untouched.
  std::vector<Matrix> staged;
  std::size_t i = 0;
  for (const auto& p : params) {
    staged.push_back(*p.value);
    read_tensor(tensors[i++], p.name, staged.back());
  }
  for (const auto& b : bufs) {
    staged.push_back(*b.value);
    read_tensor(tensors[i++], b.name, staged.back());
  }
  i = 0;
  for (const auto& p : params) *p.value = std::move(staged[i++]);
  for (const auto& b : bufs) *b.value = std::move(staged[i++]);
}

void save_parameters_file(const LayerStack& stack, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << save_parameters(stack) << '\n';
}

void load_parameters_file(LayerStack& stack, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  load_parameters(stack, buffer.str());
}

}  // namespace mdgan::nn
