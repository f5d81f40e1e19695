#include "dfdrnn/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "dfdrnn/config.hpp"
#include "dfdrnn/error.hpp"

namespace dfdrnn {

using nlohmann::json;

namespace {

std::uint64_t hash_ids(const std::vector<std::string>& ids) {
  std::uint64_t h = fnv1a("");
  for (const auto& id : ids) {
    h = fnv1a(id, h);
    h = fnv1a(std::string_view("\n", 1), h);
  }
  return h;
}

}  // namespace

DatasetFingerprint DatasetFingerprint::of(const Dataset& d) {
  return {d.drugs(), d.diseases(), hash_ids(d.ids.drug_ids), hash_ids(d.ids.disease_ids)};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json tensors = json::array();
  const auto names = ckpt.params.tensor_names();
  const auto values = ckpt.params.tensors();
  for (std::size_t i = 0; i < values.size(); ++i) {
    tensors.push_back({{"name", names[i]},
                       {"rows", values[i]->rows()},
                       {"cols", values[i]->cols()},
                       {"data", values[i]->values()}});
  }
  const json j = {{"version", kCheckpointVersion},
                  {"config", to_json(ckpt.config)},
                  {"fingerprint",
                   {{"drugs", ckpt.fingerprint.drugs},
                    {"diseases", ckpt.fingerprint.diseases},
                    {"drug_hash", ckpt.fingerprint.drug_hash},
                    {"disease_hash", ckpt.fingerprint.disease_hash}}},
                  {"tensors", tensors}};
  const std::vector<std::uint8_t> bytes = json::to_cbor(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const DatasetFingerprint* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  Checkpoint ckpt;
  try {
    const json j = json::from_cbor(bytes);
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw DataError("checkpoint version " + std::to_string(version) + " is not supported");
    }
    ckpt.config = model_config_from_json(j.at("config"));
    const json& fp = j.at("fingerprint");
    ckpt.fingerprint = {fp.at("drugs").get<std::size_t>(), fp.at("diseases").get<std::size_t>(),
                        fp.at("drug_hash").get<std::uint64_t>(),
                        fp.at("disease_hash").get<std::uint64_t>()};

    Rng unused(0);
    ckpt.params = init_params(ckpt.fingerprint.drugs + ckpt.fingerprint.diseases, ckpt.config, unused);
    const auto slots = ckpt.params.tensors();
    const json& tensors = j.at("tensors");
    if (tensors.size() != slots.size()) throw DataError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const json& t = tensors[i];
      Tensor value(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>(),
                   t.at("data").get<std::vector<double>>());
      if (!value.same_shape(*slots[i])) {
        throw DataError("checkpoint tensor '" + t.at("name").get<std::string>() + "' has shape " +
                        value.shape_string() + ", expected " + slots[i]->shape_string());
      }
      *slots[i] = std::move(value);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (expected && !(*expected == ckpt.fingerprint)) {
    throw DataError("checkpoint was trained on a different dataset (" +
                    std::to_string(ckpt.fingerprint.drugs) + "x" +
                    std::to_string(ckpt.fingerprint.diseases) + ")");
  }
  return ckpt;
}

}  // namespace dfdrnn
