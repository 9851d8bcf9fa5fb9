#include "imgrid/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "imgrid/errors.hpp"

namespace imgrid::nn {

using nlohmann::json;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json root;
  root["format_version"] = Checkpoint::kFormatVersion;
  root["meta"] = ckpt.meta;
  json nets = json::object();
  for (const auto& [name, net] : ckpt.nets) {
    json jnet;
    jnet["layers"] = json::array();
    for (const Layer& l : net.layers) {
      jnet["layers"].push_back({{"in", l.in},
                                {"out", l.out},
                                {"activation", activation_name(l.act)},
                                {"w", l.w},
                                {"b", l.b}});
    }
    nets[name] = std::move(jnet);
  }
  root["nets"] = std::move(nets);

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  out << root.dump() << '\n';
  if (!out) throw ConfigError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint: " + path.string());
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (root.value("format_version", -1) != Checkpoint::kFormatVersion)
    throw ConfigError("unsupported checkpoint format_version in " + path.string());

  Checkpoint ckpt;
  if (root.contains("meta"))
    ckpt.meta = root["meta"].get<std::map<std::string, double>>();
  for (const auto& [name, jnet] : root.at("nets").items()) {
    DenseNet net;
    for (const json& jl : jnet.at("layers")) {
      Layer l;
      l.in = jl.at("in").get<int>();
      l.out = jl.at("out").get<int>();
      l.act = activation_from_name(jl.at("activation").get<std::string>());
      l.w = jl.at("w").get<std::vector<double>>();
      l.b = jl.at("b").get<std::vector<double>>();
      if (l.in <= 0 || l.out <= 0 ||
          l.w.size() != static_cast<std::size_t>(l.in) * l.out ||
          l.b.size() != static_cast<std::size_t>(l.out))
        throw ConfigError("checkpoint layer shape mismatch in " + path.string());
      if (!net.layers.empty() && net.layers.back().out != l.in)
        throw ConfigError("checkpoint layer chain mismatch in " + path.string());
      net.layers.push_back(std::move(l));
    }
    ckpt.nets.emplace(name, std::move(net));
  }
  return ckpt;
}

}  // namespace imgrid::nn
