#include "conseg/checkpoint.hpp"

#include "conseg/config_io.hpp"
#include "conseg/error.hpp"
#include "conseg/io_formats.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

namespace conseg {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in host byte order");

std::string serialize_model(const BoundaryModel& model) {
  validate(model.params);
  nlohmann::json header = nlohmann::json::object();
  header["input_size"] = model.params.input_size();
  header["hidden_size"] = model.params.hidden_size();
  header["num_layers"] = model.params.num_layers();
  header["config"] = nlohmann::json::parse(train_config_to_json(model.config));
  header["dtype"] = "float64";
  nlohmann::json table = nlohmann::json::array();
  std::size_t values = 0;
  for (const auto& view : tensor_views(model.params)) {
    table.push_back({{"name", view.name}, {"rows", view.rows}, {"cols", view.cols}});
    values += static_cast<std::size_t>(view.size());
  }
  header["tensors"] = table;
  header["payload_bytes"] = values * sizeof(double);

  std::string out(kCheckpointMagic);
  out += '\n';
  out += header.dump();
  out += '\n';
  const std::size_t offset = out.size();
  out.resize(offset + values * sizeof(double));
  char* cursor = out.data() + offset;
  for (const auto& view : tensor_views(model.params)) {
    const std::size_t bytes = static_cast<std::size_t>(view.size()) * sizeof(double);
    std::memcpy(cursor, view.data, bytes);
    cursor += bytes;
  }
  return out;
}

BoundaryModel deserialize_model(std::string_view bytes) {
  const auto fail = [](const std::string& what) { throw ValidationError("checkpoint: " + what); };
  const std::size_t magic_end = bytes.find('\n');
  if (magic_end == std::string_view::npos || bytes.substr(0, magic_end) != kCheckpointMagic) {
    fail("missing magic string " + std::string(kCheckpointMagic));
  }
  const std::size_t header_end = bytes.find('\n', magic_end + 1);
  if (header_end == std::string_view::npos) fail("truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(magic_end + 1, header_end - magic_end - 1));
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed header: ") + e.what());
  }

  BoundaryModel model;
  int input_size = 0;
  int hidden_size = 0;
  int num_layers = 0;
  try {
    input_size = header.at("input_size").get<int>();
    hidden_size = header.at("hidden_size").get<int>();
    num_layers = header.at("num_layers").get<int>();
    if (header.at("dtype").get<std::string>() != "float64") fail("unsupported dtype");
    model.config = train_config_from_json(header.at("config").dump());
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed header: ") + e.what());
  }
  if (input_size < 1 || hidden_size < 1 || num_layers < 1) fail("non-positive dimensions");
  if (hidden_size != model.config.hidden_size || num_layers != model.config.num_layers) {
    fail("dimensions disagree with the stored config");
  }

  model.params = BilstmParams::zeros(input_size, hidden_size, num_layers);
  auto views = tensor_views(model.params);
  const auto& table = header["tensors"];
  if (!table.is_array() || table.size() != views.size()) fail("tensor table has wrong length");
  std::size_t expected_bytes = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& entry = table[i];
    if (!entry.is_object() || entry.value("name", "") != views[i].name ||
        entry.value("rows", -1L) != views[i].rows || entry.value("cols", -1L) != views[i].cols) {
      fail("tensor table entry " + std::to_string(i) + " does not match " + views[i].name);
    }
    expected_bytes += static_cast<std::size_t>(views[i].size()) * sizeof(double);
  }
  const std::string_view payload = bytes.substr(header_end + 1);
  if (payload.size() != expected_bytes) {
    fail("payload has " + std::to_string(payload.size()) + " bytes, expected " +
         std::to_string(expected_bytes));
  }
  const char* cursor = payload.data();
  for (auto& view : views) {
    const std::size_t n = static_cast<std::size_t>(view.size()) * sizeof(double);
    std::memcpy(view.data, cursor, n);
    cursor += n;
  }
  validate(model.params);
  return model;
}

void save_model(const BoundaryModel& model, const std::filesystem::path& path) {
  write_text_file(path, serialize_model(model));
}

BoundaryModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_text_file(path));
}

}  // namespace conseg
