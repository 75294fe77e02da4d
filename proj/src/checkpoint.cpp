#include "cvrl/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "cvrl/error.hpp"

namespace cvrl {

namespace {

constexpr char kMagic[8] = {'C', 'V', 'R', 'L', 'C', 'K', '1', '\0'};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

static_assert(sizeof(float) == 4);

}  // namespace

const std::vector<float>& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, v] : tensors)
    if (n == name) return v;
  throw format_error("checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& [n, v] : tensors)
    if (n == name) return true;
  return false;
}

void Checkpoint::add_tensor(const std::string& name, std::vector<int> shape,
                            std::vector<float> values) {
  std::size_t expect = 1;
  for (int d : shape) expect *= static_cast<std::size_t>(d);
  if (expect != values.size())
    throw config_error("checkpoint tensor '" + name + "' shape does not match value count");
  tensors.emplace_back(name, std::move(values));
  shapes.push_back(std::move(shape));
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["meta"] = ck.meta;
  nlohmann::json tensor_list = nlohmann::json::array();
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    tensor_list.push_back({{"name", ck.tensors[i].first}, {"shape", ck.shapes[i]}});
  }
  manifest["tensors"] = tensor_list;
  std::string text = manifest.dump();

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw io_error("cannot open '" + path + "' for writing");
  if (std::fwrite(kMagic, 1, 8, f.get()) != 8) throw io_error("checkpoint write failed");
  std::uint32_t len = static_cast<std::uint32_t>(text.size());
  unsigned char lenb[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                           static_cast<unsigned char>(len >> 16),
                           static_cast<unsigned char>(len >> 24)};
  if (std::fwrite(lenb, 1, 4, f.get()) != 4) throw io_error("checkpoint write failed");
  if (std::fwrite(text.data(), 1, text.size(), f.get()) != text.size())
    throw io_error("checkpoint write failed");
  for (const auto& [name, values] : ck.tensors) {
    if (std::fwrite(values.data(), 4, values.size(), f.get()) != values.size())
      throw io_error("checkpoint write failed for tensor '" + name + "'");
  }
  if (std::fflush(f.get()) != 0) throw io_error("checkpoint flush failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw io_error("cannot open '" + path + "' for reading");

  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8)
    throw format_error("truncated checkpoint: missing magic");
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw format_error("bad magic bytes: not a CVRLCK1 checkpoint file");

  unsigned char lenb[4];
  if (std::fread(lenb, 1, 4, f.get()) != 4)
    throw format_error("truncated checkpoint: missing manifest length at offset 8");
  std::uint32_t len = static_cast<std::uint32_t>(lenb[0]) | (static_cast<std::uint32_t>(lenb[1]) << 8) |
                      (static_cast<std::uint32_t>(lenb[2]) << 16) |
                      (static_cast<std::uint32_t>(lenb[3]) << 24);
  std::string text(len, '\0');
  if (std::fread(text.data(), 1, len, f.get()) != len)
    throw format_error("truncated checkpoint: manifest at offset 12 shorter than declared " +
                       std::to_string(len) + " bytes");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.contains("format_version") || manifest["format_version"].get<int>() != 1)
    throw format_error("unsupported checkpoint format version");

  Checkpoint ck;
  ck.meta = manifest.value("meta", nlohmann::json::object());
  long offset = 12 + static_cast<long>(len);
  for (const auto& t : manifest["tensors"]) {
    std::string name = t.at("name").get<std::string>();
    std::vector<int> shape = t.at("shape").get<std::vector<int>>();
    std::size_t count = 1;
    for (int d : shape) {
      if (d < 1) throw format_error("checkpoint tensor '" + name + "' has bad shape");
      count *= static_cast<std::size_t>(d);
    }
    std::vector<float> values(count);
    std::size_t got = std::fread(values.data(), 4, count, f.get());
    if (got != count)
      throw format_error("truncated checkpoint: tensor '" + name + "' at offset " +
                         std::to_string(offset) + ": expected " + std::to_string(count) +
                         " floats, got " + std::to_string(got));
    offset += static_cast<long>(count) * 4;
    ck.add_tensor(name, std::move(shape), std::move(values));
  }
  return ck;
}

}  // namespace cvrl
