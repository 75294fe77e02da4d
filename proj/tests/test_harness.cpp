#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "cvrl/config.hpp"
#include "cvrl/error.hpp"
#include "cvrl/harness.hpp"

using namespace cvrl;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

TinyEncoderConfig tiny_encoder() {
  TinyEncoderConfig c;
  c.stages = {{8, 3, 3, 2, 2}, {12, 3, 3, 2, 2}};
  c.hidden_layers = 1;
  c.hidden_dim = 16;
  c.output_dim = 8;
  c.standardize = true;
  return c;
}

PretrainConfig tiny_pretrain(const Dataset&, std::uint64_t seed) {
  PretrainConfig c;
  c.clip_length = 8;
  c.temporal_stride = 2;
  c.batch_size = 4;
  c.epochs = 2;
  c.base_lr = 0.02;
  c.warmup_epochs = 1;
  c.target_h = 16;
  c.target_w = 16;
  c.seed = seed;
  c.encoder = tiny_encoder();
  return c;
}

EvalConfig tiny_eval(const std::string& checkpoint, std::uint64_t seed) {
  EvalConfig c;
  c.checkpoint_path = checkpoint;
  c.encoder = tiny_encoder();
  c.clip_length = 8;
  c.temporal_stride = 2;
  c.num_dense_clips = 2;
  c.num_spatial_crops = 3;
  c.classifier_epochs = 10;
  c.classifier_lr = 0.5;
  c.train_views = 1;
  c.target_h = 16;
  c.target_w = 16;
  c.seed = seed;
  c.fine_tune_epochs = 2;
  c.fine_tune_lr = 0.01;
  c.fine_tune_batch = 4;
  return c;
}

const Dataset& shared_train() {
  static Dataset ds = generate_synthetic_dataset(2, 8, 64, 32, 32, 100);
  return ds;
}

const Dataset& shared_eval() {
  static Dataset ds = generate_synthetic_dataset(2, 4, 64, 32, 32, 101);
  return ds;
}

}  // namespace

TEST_CASE("epoch batches cover every video exactly once") {
  for (int epoch : {0, 1, 5}) {
    auto batches = epoch_batches(9, epoch, 22, 8);
    CHECK(batches.size() == 3);  // 8 + 8 + 6
    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& b : batches) {
      total += b.size();
      for (int v : b) seen.insert(v);
    }
    CHECK(total == 22);
    CHECK(seen.size() == 22);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 21);
  }
  // different epochs permute differently
  CHECK(epoch_batches(9, 0, 22, 8) != epoch_batches(9, 1, 22, 8));
}

TEST_CASE("pretrain runs, writes metrics, and is bit-identical under replay") {
  const Dataset& ds = shared_train();
  PretrainConfig cfg = tiny_pretrain(ds, 5);

  std::string dir_a = "/tmp/cvrl_test_pre_a";
  std::string dir_b = "/tmp/cvrl_test_pre_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  PretrainResult ra = pretrain(cfg, ds, dir_a);
  PretrainResult rb = pretrain(cfg, ds, dir_b);

  // 16 videos / batch 4 = 4 steps per epoch, 2 epochs
  CHECK(ra.metrics.size() == 8);
  for (const StepMetrics& m : ra.metrics) {
    CHECK(std::isfinite(m.loss));
    CHECK(m.lr > 0.0);
  }
  CHECK(read_file(ra.metrics_path) == read_file(rb.metrics_path));
  CHECK(read_file(ra.checkpoint_path) == read_file(rb.checkpoint_path));

  // a different seed changes the run
  PretrainConfig other = cfg;
  other.seed = 6;
  std::string dir_c = "/tmp/cvrl_test_pre_c";
  std::filesystem::remove_all(dir_c);
  PretrainResult rc = pretrain(other, ds, dir_c);
  CHECK(read_file(ra.metrics_path) != read_file(rc.metrics_path));

  // per-frame consistency runs the identical pipeline shape
  PretrainConfig pf = cfg;
  pf.consistency = Consistency::per_frame;
  std::string dir_d = "/tmp/cvrl_test_pre_d";
  std::filesystem::remove_all(dir_d);
  PretrainResult rd = pretrain(pf, ds, dir_d);
  CHECK(rd.metrics.size() == ra.metrics.size());

  std::filesystem::remove_all(dir_b);
  std::filesystem::remove_all(dir_c);
  std::filesystem::remove_all(dir_d);

  SUBCASE("linear_eval on the checkpoint is deterministic and bounded") {
    EvalConfig ec = tiny_eval(ra.checkpoint_path, 3);
    EvalResult ea = linear_eval(ec, ds, shared_eval());
    EvalResult eb = linear_eval(ec, ds, shared_eval());
    CHECK(ea.top1 == eb.top1);
    CHECK(ea.top1 >= 0.0);
    CHECK(ea.top1 <= 1.0);
    // dense protocol bookkeeping: 2 clips x 3 crops x 8 videos
    CHECK(ea.forward_passes == 2 * 3 * 8);

    SUBCASE("probe is invariant to dataset shuffling") {
      Dataset shuffled = ds;
      std::swap(shuffled.videos[0], shuffled.videos[7]);
      std::swap(shuffled.videos[3], shuffled.videos[12]);
      EvalResult es = linear_eval(ec, shuffled, shared_eval());
      CHECK(es.top1 == ea.top1);
    }

    SUBCASE("model files round-trip") {
      std::string mpath = "/tmp/cvrl_test_model.bin";
      save_model(ea.model, mpath);
      Model back = load_model(mpath);
      CHECK(back.num_classes == ea.model.num_classes);
      CHECK(back.encoder_params == ea.model.encoder_params);
      CHECK(back.classifier_w.size() == ea.model.classifier_w.size());
      CHECK(back.normalized_features == true);
      double t1 = evaluate_top1(back, shared_eval(), 2, 3);
      CHECK(t1 == ea.top1);
      std::remove(mpath.c_str());
    }
  }

  SUBCASE("fine_tune runs from checkpoint and from scratch deterministically") {
    EvalConfig ec = tiny_eval(ra.checkpoint_path, 4);
    EvalResult ft = fine_tune(ec, ds, shared_eval(), true);
    EvalResult ft2 = fine_tune(ec, ds, shared_eval(), true);
    CHECK(ft.top1 == ft2.top1);
    CHECK_FALSE(ft.model.normalized_features);
    EvalResult scratch = fine_tune(ec, ds, shared_eval(), false);
    CHECK(scratch.top1 >= 0.0);
    CHECK(scratch.top1 <= 1.0);
  }

  std::filesystem::remove_all(dir_a);
}

TEST_CASE("pretrain aborts on non-finite loss with diagnostics") {
  const Dataset& ds = shared_train();
  PretrainConfig cfg = tiny_pretrain(ds, 5);

  // poison an init checkpoint with NaN parameters
  TinyEncoder<float> enc(cfg.encoder, cfg.clip_length, cfg.target_h, cfg.target_w);
  std::vector<float> params(enc.param_count(), std::numeric_limits<float>::quiet_NaN());
  Checkpoint ck;
  ck.meta["kind"] = "encoder";
  nlohmann::json ecj;
  {
    // reuse the pretrain path: save via a real encoder checkpoint layout
    PretrainConfig probe_cfg = cfg;
    probe_cfg.epochs = 1;
    (void)probe_cfg;
  }
  for (const TensorInfo& t : enc.param_layout()) {
    std::vector<float> values(params.begin() + t.offset, params.begin() + t.offset + t.size);
    ck.add_tensor(t.name, t.shape, values);
  }
  std::string poison = "/tmp/cvrl_test_poison.bin";
  save_checkpoint(ck, poison);

  PretrainConfig bad = cfg;
  bad.init_checkpoint = poison;
  try {
    pretrain(bad, ds, "/tmp/cvrl_test_pre_poison");
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
  std::remove(poison.c_str());
  std::filesystem::remove_all("/tmp/cvrl_test_pre_poison");
}

TEST_CASE("pretrain validates configuration") {
  const Dataset& ds = shared_train();
  PretrainConfig cfg = tiny_pretrain(ds, 1);
  cfg.batch_size = 1;
  CHECK_THROWS_AS(pretrain(cfg, ds, "/tmp/cvrl_nope"), Error);
  cfg = tiny_pretrain(ds, 1);
  cfg.tau = 0.0;
  CHECK_THROWS_AS(pretrain(cfg, ds, "/tmp/cvrl_nope"), Error);
  cfg = tiny_pretrain(ds, 1);
  cfg.clip_length = 40;  // span 80 > 64 frames
  CHECK_THROWS_AS(pretrain(cfg, ds, "/tmp/cvrl_nope"), Error);
}

TEST_CASE("semi_subset samples balanced classes without replacement") {
  Dataset ds = generate_synthetic_dataset(4, 200, 64, 32, 32, 50);

  Dataset sub = semi_subset(ds, 0.1, 7);
  CHECK(sub.videos.size() == 80);
  std::vector<int> per_class(4, 0);
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < sub.videos.size(); ++i) {
    per_class[sub.videos[i].label]++;
    CHECK(sub.videos[i].video_id == i);  // renumbered densely
    ids.insert(sub.videos[i].video_id);
  }
  for (int c : per_class) CHECK(c == 20);
  CHECK(ids.size() == 80);

  // identity at fraction 1.0
  Dataset full = semi_subset(ds, 1.0, 7);
  CHECK(full.videos.size() == ds.videos.size());
  for (std::size_t i = 0; i < full.videos.size(); ++i)
    CHECK(full.videos[i].frames == ds.videos[i].frames);

  // different seeds give different subsets of identical per-class sizes
  Dataset sub2 = semi_subset(ds, 0.1, 8);
  CHECK(sub2.videos.size() == 80);
  bool differs = false;
  for (std::size_t i = 0; i < sub.videos.size() && !differs; ++i)
    differs = sub.videos[i].frames != sub2.videos[i].frames;
  CHECK(differs);

  // deterministic given the seed
  Dataset sub3 = semi_subset(ds, 0.1, 7);
  for (std::size_t i = 0; i < sub.videos.size(); ++i)
    CHECK(sub3.videos[i].frames == sub.videos[i].frames);

  CHECK_THROWS_AS(semi_subset(ds, 0.001, 7), Error);  // rounds below 1 per class
  CHECK_THROWS_AS(semi_subset(ds, 0.0, 7), Error);
}

TEST_CASE("dense_predict degenerate and bookkeeping cases") {
  const Dataset& eval_set = shared_eval();
  EvalConfig ec = tiny_eval("", 3);
  EvalResult probe = linear_eval(ec, shared_train(), eval_set);  // random-init encoder

  long passes = 0;
  std::vector<double> l1 = dense_predict(probe.model, eval_set.videos[0], 1, 1, &passes);
  CHECK(passes == 1);  // single center-crop forward pass
  CHECK(l1.size() == 2);

  passes = 0;
  dense_predict(probe.model, eval_set.videos[0], 10, 3, &passes);
  CHECK(passes == 30);

  // constant-prediction classifier: averaging leaves logits unchanged
  Model constant = probe.model;
  std::fill(constant.classifier_w.begin(), constant.classifier_w.end(), 0.0);
  constant.classifier_b = {0.25, -1.5};
  std::vector<double> lc = dense_predict(constant, eval_set.videos[1], 10, 3);
  CHECK(lc[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(lc[1] == doctest::Approx(-1.5).epsilon(1e-12));

  // video shorter than one clip span
  RawVideo tiny;
  tiny.t_total = 8;
  tiny.height = 32;
  tiny.width = 32;
  tiny.frames.resize(static_cast<std::size_t>(8) * 32 * 32 * 3);
  CHECK_THROWS_AS(dense_predict(probe.model, tiny, 10, 3), Error);
}

TEST_CASE("config JSON round-trips and rejects bad input") {
  PretrainConfig pc;
  pc.dataset_path = "x.bin";
  pc.preset = DistributionPreset::dec_quad;
  pc.seed = 42;
  pc.consistency = Consistency::per_frame;
  nlohmann::json j = pretrain_config_to_json(pc);
  PretrainConfig back = pretrain_config_from_json(j);
  CHECK(back.dataset_path == "x.bin");
  CHECK(back.preset == DistributionPreset::dec_quad);
  CHECK(back.seed == 42);
  CHECK(back.consistency == Consistency::per_frame);

  EvalConfig ec;
  ec.num_dense_clips = 5;
  EvalConfig eback = eval_config_from_json(eval_config_to_json(ec));
  CHECK(eback.num_dense_clips == 5);

  CHECK_THROWS_AS(pretrain_config_from_json({{"dataset", "x"}}), Error);  // no schema_version
  CHECK_THROWS_AS(pretrain_config_from_json({{"schema_version", 2}}), Error);
  CHECK_THROWS_AS(pretrain_config_from_json({{"schema_version", 1}, {"typo_field", 3}}), Error);
  CHECK_THROWS_AS(parse_config_text("{not json"), Error);
}

TEST_CASE("lr schedule dump matches lr_at row by row") {
  ScheduleConfig sc;
  sc.base_lr = 0.32;
  sc.warmup_epochs = 1;
  sc.total_epochs = 3;
  sc.steps_per_epoch = 10;
  std::string path = "/tmp/cvrl_test_lr.csv";
  dump_lr_schedule(sc, path);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "step,lr");
  long step;
  char comma;
  double lr;
  int rows = 0;
  while (f >> step >> comma >> lr) {
    CHECK(lr == doctest::Approx(lr_at(sc, step)).epsilon(1e-15));
    ++rows;
  }
  CHECK(rows == 30);
  std::remove(path.c_str());
}

TEST_CASE("augment preview writes PPM frames") {
  const Dataset& ds = shared_eval();
  std::string dir = "/tmp/cvrl_test_preview";
  std::filesystem::remove_all(dir);
  augment_preview(ds, 1, 7, 4, 2, 16, 16, dir);
  CHECK(std::filesystem::exists(dir + "/original/frame_000.ppm"));
  CHECK(std::filesystem::exists(dir + "/augmented/frame_003.ppm"));
  std::string ppm = read_file(dir + "/augmented/frame_000.ppm");
  CHECK(ppm.substr(0, 2) == "P6");
  CHECK_THROWS_AS(augment_preview(ds, 99, 7, 4, 2, 16, 16, dir), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sample histogram CSV has one row per interval") {
  std::string path = "/tmp/cvrl_test_hist.csv";
  sample_histogram_csv(DistributionPreset::dec_linear, 50, 2000, 3, path);
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "t,count,analytic_pdf");
  int rows = 0;
  long total = 0;
  while (std::getline(f, line)) {
    ++rows;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    total += std::stol(line.substr(c1 + 1, c2 - c1 - 1));
  }
  CHECK(rows == 51);
  CHECK(total == 2000);
  std::remove(path.c_str());
}
