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

#include <doctest.h>

#include <sstream>

#include "partdet/detection.hpp"
#include "partdet/error.hpp"
#include "support/oracles.hpp"

using namespace partdet;

TEST_SUITE("detection") {

TEST_CASE("shared channels are back-propagated once") {
  const Network net = oracle::tiny_net(5, 12);
  const Tensor x = oracle::random_tensor(net.input_shape(), 6);
  const std::vector<ChannelAssociation> assoc{{0, 1, 0, Strategy::part}, {1, 3, 0, Strategy::part},
                                              {2, 1, 0, Strategy::part}, {3, 0, 0, Strategy::part},
                                              {4, 3, 0, Strategy::part}};
  DetectionStats stats;
  const auto d = detect_parts(net, x, 5, assoc, GmmConfig{}, {}, &stats);
  CHECK(d.size() == 5);
  CHECK(stats.backward_passes == 3);
  CHECK(d[0].position == d[2].position);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d[i].part_id == assoc[i].part_id);
    CHECK(d[i].channel == assoc[i].channel);
  }
}

TEST_CASE("detection is the composition of gradmap and centers") {
  const Network net = oracle::tiny_net(7, 12);
  const Tensor x = oracle::random_tensor(net.input_shape(), 8);
  std::vector<ChannelAssociation> assoc;
  for (std::size_t k = 0; k < 4; ++k) assoc.push_back({static_cast<int>(k), k, 0, Strategy::part});
  GmmConfig cfg;
  cfg.rng_seed = 3;
  const auto d = detect_parts(net, x, 5, assoc, cfg);
  DetectOptions max_opts;
  max_opts.method = CenterMethod::max_position;
  const auto dm = detect_parts(net, x, 5, assoc, cfg, max_opts);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto map = channel_gradient_map(net, x, 5, k);
    const auto c = fit_activation_center(map, cfg);
    CHECK(d[k].position == c.position);
    CHECK(d[k].occluded == c.occluded);
    CHECK(d[k].cluster_weight == c.cluster_weight);
    CHECK(dm[k].position == max_position_center(map).position);
  }
}

TEST_CASE("zero network gives occluded detections") {
  Network net = oracle::tiny_net(1, 12);
  for (auto v : net.parameter_views()) std::fill(v.begin(), v.end(), 0.0);
  const Tensor x = oracle::random_tensor(net.input_shape(), 2);
  const std::vector<ChannelAssociation> assoc{{0, 0, 0, Strategy::part}, {1, 2, 0, Strategy::part}};
  for (const auto& d : detect_parts(net, x, 5, assoc, GmmConfig{})) CHECK(d.occluded);
}

TEST_CASE("box restriction") {
  const Network net = oracle::tiny_net(9, 12);
  const Tensor x = oracle::random_tensor(net.input_shape(), 10);
  std::vector<ChannelAssociation> assoc{{0, 2, 0, Strategy::part}};
  DetectOptions whole;
  whole.restrict_to = BoundingBox{0, 0, 11, 11};
  CHECK(detect_parts(net, x, 5, assoc, GmmConfig{}, whole) == detect_parts(net, x, 5, assoc, GmmConfig{}));

  DetectOptions corner;
  corner.restrict_to = BoundingBox{1, 2, 3, 4};
  const auto d = detect_parts(net, x, 5, assoc, GmmConfig{}, corner);
  if (!d[0].occluded) {
    CHECK(corner.restrict_to->contains(d[0].position));
  }
  const auto masked = mask_outside_box(channel_gradient_map(net, x, 5, 2), *corner.restrict_to);
  for (std::size_t y = 0; y < masked.height; ++y)
    for (std::size_t xx = 0; xx < masked.width; ++xx)
      if (!corner.restrict_to->contains({double(xx), double(y)})) CHECK(masked.at(y, xx) == 0.0);
}

TEST_CASE("detection errors") {
  const Network net = oracle::tiny_net(1, 12);
  const Tensor x = oracle::random_tensor(net.input_shape(), 2);
  const std::vector<ChannelAssociation> bad{{0, 4, 0, Strategy::part}};
  CHECK_THROWS_AS(detect_parts(net, x, 5, bad, GmmConfig{}), InvalidInput);
  CHECK_THROWS_AS(detect_parts(net, x, 5, {}, GmmConfig{}), InvalidInput);
  const std::vector<ChannelAssociation> ok{{0, 0, 0, Strategy::part}};
  CHECK_THROWS_AS(detect_parts(net, Tensor({2, 5, 5}), 5, ok, GmmConfig{}), InvalidInput);
}

TEST_CASE("detections file") {
  const std::vector<ImageDetection> rows{{"a", {0, {1.234, 5.0}, false, 3, 0.6}},
                                         {"a", {1, {}, true, 4, 0.0}},
                                         {"b", {0, {-0.001, 63.999}, false, 3, 0.9}}};
  std::stringstream buf;
  write_detections(rows, buf);
  CHECK(buf.str() == "image_id,part_id,x,y,occluded\n"
                     "a,0,1.23,5.00,0\n"
                     "a,1,0.00,0.00,1\n"
                     "b,0,0.00,64.00,0\n");
  const auto back = read_detections(buf);
  REQUIRE(back.size() == 3);
  CHECK(back[0].image_id == "a");
  CHECK(back[0].detection.position == Point2{1.23, 5.0});
  CHECK(back[1].detection.occluded);
  std::stringstream bad("image_id,part_id,x,y,occluded\na,0,1.0,zz,0\n");
  try {
    read_detections(bad, "det.csv");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("det.csv:2") != std::string::npos);
  }
}

}
