/*
 * Copyright 2026 The partdet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// partdet: command-line front end for part discovery, detection and
// part-based classification.
//
//   partdet synth     --out DIR [--variant shapes|fine-grained] ...
//   partdet train     --manifest M --out W
//   partdet discover  --manifest M --weights W --strategy part|counting|bbox --out A
//   partdet detect    --manifest M --weights W --associations A --out D
//   partdet eval-loc  --manifest M --detections D --out DIR
//   partdet classify  --manifest M --weights W --associations A --out MODEL
//   partdet eval-cls  --manifest M --weights W --associations A --model MODEL --out P
//   partdet viz       --manifest M --weights W --channel K --out DIR
//
// Every command accepts --config FILE with flat `key = value` lines naming
// long options; flags given on the command line win. Failures print one
// line `error: <kind>: <message>` and exit 1; usage errors exit 2.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "partdet/classify.hpp"
#include "partdet/csv.hpp"
#include "partdet/dataset.hpp"
#include "partdet/detection.hpp"
#include "partdet/discovery.hpp"
#include "partdet/error.hpp"
#include "partdet/eval.hpp"
#include "partdet/image_io.hpp"
#include "partdet/parallel.hpp"
#include "partdet/synthetic.hpp"
#include "partdet/train.hpp"
#include "partdet/weights_io.hpp"

namespace fs = std::filesystem;
using namespace partdet;

namespace {

struct Options {
  // shared
  std::string manifest, weights, out, associations, detections, model, config;
  std::uint64_t seed = 0;
  std::optional<std::size_t> layer;
  // architecture (must match between train and later commands)
  std::size_t conv1 = 16, conv2 = 32, kernel = 5;
  // synth
  std::string variant = "shapes";
  std::size_t size = 64, classes = 4, parts = 2, train_count = 400, test_count = 100;
  // train
  std::size_t epochs = 30, batch = 16, max_shift = 0;
  double lr = 0.02, momentum = 0.9, weight_decay = 0.0;
  bool anneal = true, flip = false;
  // discovery / detection
  std::string strategy = "part", method = "gmm", split = "test", reduction = "max-abs";
  std::size_t proposals = 5, subset = 0, components = 2, restarts = 3, iterations = 100;
  bool restrict_bbox = false;
  // classification
  double lambda = 0.1, reg = 1e-4, svm_lr = 0.01;
  std::size_t svm_epochs = 30;
  bool global_only = false;
  std::string dump_features;
  // viz
  std::optional<std::size_t> channel, class_id;
  std::string image;
  double quantile = 0.95;
};

[[noreturn]] void fail(const std::string& kind, const std::string& what) { throw Error(kind, what); }

GmmConfig gmm_config(const Options& o) {
  GmmConfig g;
  g.components = o.components;
  g.restarts = o.restarts;
  g.max_iterations = o.iterations;
  g.rng_seed = o.seed;
  g.validate();
  return g;
}

ColorReduction reduction_of(const Options& o) {
  if (o.reduction == "max-abs") return ColorReduction::max_abs;
  if (o.reduction == "sum-abs") return ColorReduction::sum_abs;
  fail("invalid-input", "unknown color reduction '" + o.reduction + "'");
}

Dataset need_dataset(const Options& o) {
  if (o.manifest.empty()) fail("invalid-input", "--manifest is required");
  Dataset ds = load_dataset(fs::path(o.manifest));
  if (ds.records.empty()) fail("invalid-input", "dataset has no images");
  return ds;
}

Network architecture(const Options& o, const Dataset& ds) {
  ReferenceNetConfig rc;
  rc.height = ds.images[0].extent(1);
  rc.width = ds.images[0].extent(2);
  rc.conv1_channels = o.conv1;
  rc.conv2_channels = o.conv2;
  rc.kernel = o.kernel;
  rc.num_classes = ds.num_classes();
  for (const auto& img : ds.images)
    if (img.shape() != ds.images[0].shape()) fail("invalid-input", "dataset images differ in size");
  return make_reference_network(rc, o.seed);
}

Network need_network(const Options& o, const Dataset& ds) {
  if (o.weights.empty()) fail("invalid-input", "--weights is required");
  return load_weights(fs::path(o.weights), architecture(o, ds));
}

std::size_t feature_layer(const Options& o, const Network& net) {
  const std::size_t layer = o.layer.value_or(*net.last_pool_layer());
  if (layer >= net.num_layers() || !net.has_channels(layer))
    fail("invalid-input", "layer " + std::to_string(layer) + " has no channel structure");
  return layer;
}

const std::string& need(const std::string& value, const char* flag) {
  if (value.empty()) fail("invalid-input", std::string(flag) + " is required");
  return value;
}

std::vector<std::size_t> split_indices(const Dataset& ds, const std::string& split) {
  if (split == "train") return ds.indices(true);
  if (split == "test") return ds.indices(false);
  if (split == "all") {
    std::vector<std::size_t> all(ds.records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  fail("invalid-input", "unknown split '" + split + "' (train, test or all)");
}

// Output file path with its parent directory created.
fs::path out_file(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(out_file(path), std::ios::binary);
  if (!out) fail("io", "cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------- commands

int cmd_synth(const Options& o) {
  SyntheticSpec spec;
  spec.image_size = o.size;
  spec.num_classes = o.classes;
  spec.num_parts = o.parts;
  spec.train_count = o.train_count;
  spec.test_count = o.test_count;
  spec.seed = o.seed;
  if (o.variant == "shapes") spec.variant = SyntheticVariant::shapes;
  else if (o.variant == "fine-grained") spec.variant = SyntheticVariant::fine_grained;
  else fail("invalid-input", "unknown variant '" + o.variant + "'");
  const fs::path manifest = generate_synthetic(spec, need(o.out, "--out"));
  std::cout << "wrote " << manifest.string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const Dataset ds = need_dataset(o);
  std::vector<Tensor> xs;
  std::vector<int> ys;
  for (auto i : ds.indices(true)) {
    xs.push_back(ds.images[i]);
    ys.push_back(ds.records[i].label);
  }
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch;
  tc.learning_rate = o.lr;
  tc.momentum = o.momentum;
  tc.weight_decay = o.weight_decay;
  tc.seed = o.seed;
  tc.anneal = o.anneal;
  tc.flip = o.flip;
  tc.max_shift = o.max_shift;
  TrainReport rep;
  const Network net = train(architecture(o, ds), xs, ys, tc, &rep);
  save_weights(net, out_file(need(o.out, "--out")));
  std::cout << "initial loss " << csv::fixed(rep.initial_loss, 4) << ", final loss "
            << csv::fixed(rep.final_loss, 4) << ", train accuracy " << csv::fixed(rep.final_accuracy, 4)
            << '\n';
  const auto test = ds.indices(false);
  if (!test.empty()) {
    std::vector<Tensor> tx;
    std::vector<int> ty;
    for (auto i : test) {
      tx.push_back(ds.images[i]);
      ty.push_back(ds.records[i].label);
    }
    std::cout << "test accuracy " << csv::fixed(accuracy(net, tx, ty), 4) << '\n';
  }
  return 0;
}

int cmd_discover(const Options& o) {
  const Dataset ds = need_dataset(o);
  const Network net = need_network(o, ds);
  const std::size_t layer = feature_layer(o, net);
  auto which = ds.indices(true);
  if (which.empty()) fail("invalid-input", "no training images for discovery");
  if (o.subset > 0 && o.subset < which.size()) which.resize(o.subset);
  std::vector<Tensor> images;
  std::vector<std::string> ids;
  for (auto i : which) {
    images.push_back(ds.images[i]);
    ids.push_back(ds.records[i].id);
  }
  const CenterTable table = compute_center_table(net, images, ids, layer, gmm_config(o));
  std::vector<ChannelAssociation> assoc;
  switch (parse_strategy(o.strategy)) {
  case Strategy::part:
    for (int p : ds.part_ids()) assoc.push_back(select_channel_part(table, ds.part_positions(p, which), p));
    break;
  case Strategy::counting:
  case Strategy::bbox: {
    std::vector<BoundingBox> boxes;
    for (const auto& id : ids) boxes.push_back(ds.box(id));
    assoc = parse_strategy(o.strategy) == Strategy::counting ? select_channels_counting(table, boxes, o.proposals)
                                                             : select_channels_bbox(table, boxes, o.proposals);
    break;
  }
  }
  auto out = open_out(need(o.out, "--out"));
  write_associations(assoc, out);
  for (const auto& a : assoc)
    std::cout << "part " << a.part_id << " -> channel " << a.channel << " (score " << csv::fixed(a.score, 4)
              << ")\n";
  return 0;
}

std::vector<std::vector<PartDetection>> detect_all(const Options& o, const Dataset& ds, const Network& net,
                                                   const std::vector<ChannelAssociation>& assoc,
                                                   const std::vector<std::size_t>& which) {
  const std::size_t layer = feature_layer(o, net);
  const GmmConfig cfg = gmm_config(o);
  DetectOptions opts;
  if (o.method == "gmm") opts.method = CenterMethod::gmm;
  else if (o.method == "max") opts.method = CenterMethod::max_position;
  else fail("invalid-input", "unknown center method '" + o.method + "' (gmm or max)");
  opts.reduction = reduction_of(o);
  std::vector<std::vector<PartDetection>> out(which.size());
  parallel_for(which.size(), [&](std::size_t n) {
    DetectOptions local = opts;
    if (o.restrict_bbox) local.restrict_to = ds.box(ds.records[which[n]].id);
    out[n] = detect_parts(net, ds.images[which[n]], layer, assoc, cfg, local);
  });
  return out;
}

int cmd_detect(const Options& o) {
  const Dataset ds = need_dataset(o);
  const Network net = need_network(o, ds);
  const auto assoc = read_associations(fs::path(need(o.associations, "--associations")));
  const auto which = split_indices(ds, o.split);
  const auto dets = detect_all(o, ds, net, assoc, which);
  std::vector<ImageDetection> rows;
  for (std::size_t n = 0; n < which.size(); ++n)
    for (const auto& d : dets[n]) rows.push_back({ds.records[which[n]].id, d});
  auto out = open_out(need(o.out, "--out"));
  write_detections(rows, out);
  std::cout << rows.size() << " detections on " << which.size() << " images\n";
  return 0;
}

int cmd_eval_loc(const Options& o) {
  const Dataset ds = need_dataset(o);
  const auto rows = read_detections(fs::path(need(o.detections, "--detections")));
  const LocalizationReport r = localization_report(rows, ds.parts, ds.boxes);
  write_report(r, need(o.out, "--out"));
  for (const auto& p : r.parts)
    std::cout << "part " << p.part_id << " mean error " << csv::fixed(p.mean_error, 4) << " (" << p.count
              << " evaluated, " << p.skipped << " skipped)\n";
  std::cout << "overall mean " << csv::fixed(r.overall_mean, 2) << '\n';
  return 0;
}

struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  FeatureLayout layout;
};

FeatureSet features_for(const Options& o, const Dataset& ds, const Network& net, const std::string& split) {
  FeatureConfig fc;
  fc.hidden_layer = o.layer.value_or(net.last_hidden_layer());
  if (fc.hidden_layer >= net.num_layers() - 1)
    fail("invalid-input", "feature layer must be a hidden layer (< " + std::to_string(net.num_layers() - 1) + ")");
  fc.lambda = o.lambda;
  std::vector<ChannelAssociation> assoc;
  if (!o.global_only) {
    assoc = read_associations(fs::path(need(o.associations, "--associations")));
    for (const auto& a : assoc) fc.part_ids.push_back(a.part_id);
  }
  const auto which = split_indices(ds, split);
  if (which.empty()) fail("invalid-input", "no images in split '" + split + "'");
  std::vector<std::vector<PartDetection>> dets(which.size());
  if (!assoc.empty()) {
    Options det = o;
    det.layer = std::nullopt; // detection runs on the discovery layer
    dets = detect_all(det, ds, net, assoc, which);
  }
  FeatureSet fs_;
  fs_.layout = feature_layout(net, fc);
  fs_.features.resize(which.size());
  parallel_for(which.size(),
               [&](std::size_t n) { fs_.features[n] = feature_vector(net, ds.images[which[n]], dets[n], fc).values; });
  for (auto i : which) {
    fs_.ids.push_back(ds.records[i].id);
    fs_.labels.push_back(ds.records[i].label);
  }
  if (!o.dump_features.empty()) {
    auto out = open_out(o.dump_features);
    write_features(fs_.ids, fs_.features, out);
  }
  return fs_;
}

int cmd_classify(const Options& o) {
  const Dataset ds = need_dataset(o);
  const Network net = need_network(o, ds);
  const FeatureSet f = features_for(o, ds, net, "train");
  ClassifierConfig cc;
  cc.regularization = o.reg;
  cc.learning_rate = o.svm_lr;
  cc.epochs = o.svm_epochs;
  cc.seed = o.seed;
  const LinearOvaModel model = train_classifier(f.features, f.labels, cc, f.layout.num_parts());
  save_model(model, out_file(need(o.out, "--out")));
  std::vector<int> pred;
  for (const auto& x : f.features) pred.push_back(predict(model, x));
  std::cout << "train accuracy " << csv::fixed(accuracy(pred, f.labels), 4) << '\n';
  return 0;
}

int cmd_eval_cls(const Options& o) {
  const Dataset ds = need_dataset(o);
  const Network net = need_network(o, ds);
  const LinearOvaModel model = load_model(fs::path(need(o.model, "--model")));
  const FeatureSet f = features_for(o, ds, net, o.split);
  check_layout(model, f.layout);
  std::vector<int> pred;
  auto out = open_out(need(o.out, "--out"));
  out << "image_id,label,predicted\n";
  for (std::size_t n = 0; n < f.features.size(); ++n) {
    pred.push_back(predict(model, f.features[n]));
    out << f.ids[n] << ',' << f.labels[n] << ',' << pred.back() << '\n';
  }
  std::cout << "accuracy " << csv::fixed(accuracy(pred, f.labels), 4) << '\n';
  return 0;
}

int cmd_viz(const Options& o) {
  const Dataset ds = need_dataset(o);
  const Network net = need_network(o, ds);
  std::size_t index = 0;
  if (o.image.empty()) {
    const auto test = ds.indices(false);
    index = test.empty() ? 0 : test[0];
  } else {
    auto it = std::find_if(ds.records.begin(), ds.records.end(), [&](const auto& r) { return r.id == o.image; });
    if (it == ds.records.end()) fail("invalid-input", "unknown image id '" + o.image + "'");
    index = static_cast<std::size_t>(it - ds.records.begin());
  }
  if (o.channel && o.class_id) fail("invalid-input", "--channel and --class are exclusive");
  const Tensor& x = ds.images[index];
  GradientMap map = o.channel ? channel_gradient_map(net, x, feature_layer(o, net), *o.channel, reduction_of(o))
                              : class_gradient_map(net, x, o.class_id, reduction_of(o));
  const fs::path dir = need(o.out, "--out");
  fs::create_directories(dir);
  const std::string stem = ds.records[index].id + (o.channel ? "_channel" + std::to_string(*o.channel)
                                                             : "_class" + std::to_string(map.source));
  write_pnm(heatmap_raster(map), dir / (stem + "_heatmap.pgm"));
  write_pnm(overlay_raster(x, threshold_map(map, o.quantile)), dir / (stem + "_overlay.ppm"));
  std::cout << "wrote " << (dir / (stem + "_heatmap.pgm")).string() << " and "
            << (dir / (stem + "_overlay.ppm")).string() << '\n';
  return 0;
}

// ------------------------------------------------------------ config files

std::map<std::string, std::string> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot read config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = csv::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("format", path.string() + ":" + std::to_string(n) + ": expected key = value");
    std::string key = csv::trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    kv[key] = csv::trim(line.substr(eq + 1));
  }
  return kv;
}

/// Appends `--key=value` for config keys the chosen command defines and the
/// command line does not already set. Keys no command defines are errors.
std::vector<std::string> apply_config(CLI::App& app, std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  CLI::App* sub = nullptr;
  for (auto* s : app.get_subcommands([](CLI::App*) { return true; }))
    if (s->get_name() == args[0]) sub = s;
  if (!sub) return args;
  std::set<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  for (const auto& [key, value] : read_config(path)) {
    bool known = false;
    for (auto* s : app.get_subcommands([](CLI::App*) { return true; }))
      known |= s->get_option_no_throw("--" + key) != nullptr;
    if (!known) fail("invalid-input", "unknown config key '" + key + "' in " + path);
    if (key == "config" || given.count(key) || !sub->get_option_no_throw("--" + key)) continue;
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Part discovery and part-based classification with gradient maps"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "key = value file with default flags");
    s->add_option("--seed", o.seed, "seed for all randomness")->capture_default_str();
  };
  auto data = [&](CLI::App* s) {
    s->add_option("--manifest", o.manifest, "dataset manifest");
  };
  auto net = [&](CLI::App* s) {
    s->add_option("--weights", o.weights, "weights file from `train`");
    s->add_option("--conv1", o.conv1, "first conv layer width")->capture_default_str();
    s->add_option("--conv2", o.conv2, "second conv layer width")->capture_default_str();
    s->add_option("--kernel", o.kernel, "conv kernel size")->capture_default_str();
  };
  auto gmm = [&](CLI::App* s) {
    s->add_option("--layer", o.layer, "layer index (0-based; default: last pooling layer)");
    s->add_option("--components", o.components, "GMM components")->capture_default_str();
    s->add_option("--restarts", o.restarts, "EM restarts")->capture_default_str();
    s->add_option("--iterations", o.iterations, "max EM iterations")->capture_default_str();
    s->add_option("--reduction", o.reduction, "color reduction: max-abs or sum-abs")->capture_default_str();
  };
  auto detection = [&](CLI::App* s) {
    s->add_option("--method", o.method, "center method: gmm or max")->capture_default_str();
    s->add_flag("--restrict-bbox", o.restrict_bbox, "zero the gradient map outside the box");
  };
  auto classifier = [&](CLI::App* s) {
    s->add_option("--associations", o.associations, "associations CSV from `discover`");
    s->add_option("--lambda", o.lambda, "part patch area fraction")->capture_default_str();
    s->add_flag("--global-only", o.global_only, "no part features");
    s->add_option("--dump-features", o.dump_features, "also write features as CSV");
    s->add_option("--feature-layer", o.layer, "hidden layer for features (default: last hidden)");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  common(synth);
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--variant", o.variant, "shapes or fine-grained")->capture_default_str();
  synth->add_option("--size", o.size, "image side")->capture_default_str();
  synth->add_option("--classes", o.classes, "class count")->capture_default_str();
  synth->add_option("--parts", o.parts, "parts per image")->capture_default_str();
  synth->add_option("--train", o.train_count, "training images")->capture_default_str();
  synth->add_option("--test", o.test_count, "test images")->capture_default_str();

  auto* trn = app.add_subcommand("train", "train the reference network");
  common(trn);
  data(trn);
  trn->add_option("--conv1", o.conv1, "first conv layer width")->capture_default_str();
  trn->add_option("--conv2", o.conv2, "second conv layer width")->capture_default_str();
  trn->add_option("--kernel", o.kernel, "conv kernel size")->capture_default_str();
  trn->add_option("--out", o.out, "weights file");
  trn->add_option("--epochs", o.epochs)->capture_default_str();
  trn->add_option("--batch", o.batch)->capture_default_str();
  trn->add_option("--lr", o.lr)->capture_default_str();
  trn->add_option("--momentum", o.momentum)->capture_default_str();
  trn->add_option("--weight-decay", o.weight_decay)->capture_default_str();
  trn->add_option("--anneal", o.anneal, "cosine learning-rate schedule")->capture_default_str();
  trn->add_flag("--flip", o.flip, "random horizontal flips");
  trn->add_option("--max-shift", o.max_shift, "random translation in px")->capture_default_str();

  auto* disc = app.add_subcommand("discover", "associate channels with parts");
  common(disc);
  data(disc);
  net(disc);
  gmm(disc);
  disc->add_option("--strategy", o.strategy, "part, counting or bbox")->capture_default_str();
  disc->add_option("--proposals", o.proposals, "channels kept by counting/bbox")->capture_default_str();
  disc->add_option("--subset", o.subset, "use the first N training images (0 = all)")->capture_default_str();
  disc->add_option("--out", o.out, "associations CSV");

  auto* det = app.add_subcommand("detect", "localize parts");
  common(det);
  data(det);
  net(det);
  gmm(det);
  detection(det);
  det->add_option("--associations", o.associations, "associations CSV");
  det->add_option("--split", o.split, "train, test or all")->capture_default_str();
  det->add_option("--out", o.out, "detections CSV");

  auto* evl = app.add_subcommand("eval-loc", "normalized localization error");
  common(evl);
  data(evl);
  evl->add_option("--detections", o.detections, "detections CSV");
  evl->add_option("--out", o.out, "report directory");

  auto* cls = app.add_subcommand("classify", "train the part-based classifier");
  common(cls);
  data(cls);
  net(cls);
  detection(cls);
  classifier(cls);
  cls->add_option("--components", o.components)->capture_default_str();
  cls->add_option("--restarts", o.restarts)->capture_default_str();
  cls->add_option("--iterations", o.iterations)->capture_default_str();
  cls->add_option("--reg", o.reg, "L2 strength")->capture_default_str();
  cls->add_option("--svm-lr", o.svm_lr)->capture_default_str();
  cls->add_option("--svm-epochs", o.svm_epochs)->capture_default_str();
  cls->add_option("--out", o.out, "model file");

  auto* evc = app.add_subcommand("eval-cls", "apply the classifier");
  common(evc);
  data(evc);
  net(evc);
  detection(evc);
  classifier(evc);
  evc->add_option("--components", o.components)->capture_default_str();
  evc->add_option("--restarts", o.restarts)->capture_default_str();
  evc->add_option("--iterations", o.iterations)->capture_default_str();
  evc->add_option("--model", o.model, "model file from `classify`");
  evc->add_option("--split", o.split, "train, test or all")->capture_default_str();
  evc->add_option("--out", o.out, "predictions CSV");

  auto* viz = app.add_subcommand("viz", "gradient heatmap and thresholded overlay");
  common(viz);
  data(viz);
  net(viz);
  viz->add_option("--layer", o.layer, "layer index (default: last pooling layer)");
  viz->add_option("--reduction", o.reduction, "max-abs or sum-abs")->capture_default_str();
  viz->add_option("--channel", o.channel, "channel map");
  viz->add_option("--class", o.class_id, "class map (default: winning class)");
  viz->add_option("--image", o.image, "image id (default: first test image)");
  viz->add_option("--quantile", o.quantile, "overlay threshold quantile")->capture_default_str();
  viz->add_option("--out", o.out, "output directory");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = apply_config(app, args);
    std::reverse(args.begin(), args.end()); // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands()) sub = s;
    std::cerr << (sub ? sub->help() : app.help());
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(o);
    if (trn->parsed()) return cmd_train(o);
    if (disc->parsed()) return cmd_discover(o);
    if (det->parsed()) return cmd_detect(o);
    if (evl->parsed()) return cmd_eval_loc(o);
    if (cls->parsed()) return cmd_classify(o);
    if (evc->parsed()) return cmd_eval_cls(o);
    if (viz->parsed()) return cmd_viz(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
