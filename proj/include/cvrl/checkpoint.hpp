#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cvrl {

// Checkpoint container: arbitrary JSON meta plus named float tensors, stored
// as magic "CVRLCK1\0", u32 manifest length, the manifest JSON (meta + tensor
// names/shapes), then raw 32-bit little-endian values in manifest order.
struct Checkpoint {
  nlohmann::json meta;
  std::vector<std::pair<std::string, std::vector<float>>> tensors;
  std::vector<std::vector<int>> shapes;

  const std::vector<float>& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
  void add_tensor(const std::string& name, std::vector<int> shape, std::vector<float> values);
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cvrl
