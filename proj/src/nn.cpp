#include "cvrl/nn.hpp"

#include <sstream>

namespace cvrl {

R3D50Spec R3D50Spec::table() {
  R3D50Spec spec;
  spec.stages = {
      {"data", 1, 1, 2, 1, 0, "stride 2, 1x1"},
      {"conv1", 5, 7, 2, 2, 0, "5x7x7, 64, stride 2, 2x2"},
      {"pool1", 1, 3, 1, 2, 0, "1x3x3 max, stride 1, 2x2"},
      {"conv2", 1, 3, 1, 1, 3, "[1x1,64; 1x3,64; 1x1,256] x3"},
      {"conv3", 1, 3, 1, 2, 4, "[1x1,128; 1x3,128; 1x1,512] x4"},
      {"conv4", 3, 3, 1, 2, 6, "[3x1,256; 1x3,256; 1x1,1024] x6"},
      {"conv5", 3, 3, 1, 2, 3, "[3x1,512; 1x3,512; 1x1,2048] x3"},
  };
  return spec;
}

std::vector<StageShape> shape_trace(const R3D50Spec& spec, int in_t, int in_s) {
  if (in_t < 1 || in_s < 1) throw config_error("shape_trace: input dimensions must be >= 1");
  std::vector<StageShape> trace;
  int t = in_t, s = in_s;
  for (const R3dStage& stage : spec.stages) {
    t = t / stage.temporal_stride;
    s = s / stage.spatial_stride;
    if (t < 1)
      throw config_error("shape_trace: temporal dimension collapses below 1 at " + stage.name);
    if (s < 1)
      throw config_error("shape_trace: spatial dimension collapses below 1 at " + stage.name);
    trace.push_back({stage.name, t, s});
  }
  trace.push_back({"pool", 1, 1});
  return trace;
}

std::string format_shape_trace(const R3D50Spec& spec, int in_t, int in_s) {
  std::vector<StageShape> trace = shape_trace(spec, in_t, in_s);
  std::ostringstream os;
  os << "stage      kernel                                output TxS^2\n";
  os << "raw clip   -                                     " << in_t << "x" << in_s << "^2\n";
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    os << spec.stages[i].name;
    for (std::size_t p = spec.stages[i].name.size(); p < 11; ++p) os << ' ';
    os << spec.stages[i].block_desc;
    for (std::size_t p = spec.stages[i].block_desc.size(); p < 38; ++p) os << ' ';
    os << trace[i].t << "x" << trace[i].s << "^2\n";
  }
  os << "pool       global average                        1x1^2\n";
  return os.str();
}

}  // namespace cvrl
