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

#include <cstring>
#include <sstream>

#include "partdet/error.hpp"
#include "partdet/network.hpp"
#include "partdet/train.hpp"
#include "partdet/weights_io.hpp"
#include "support/oracles.hpp"

using namespace partdet;

namespace {

Network identity_dense(std::size_t n) {
  Dense d = make_dense(n, n);
  for (std::size_t i = 0; i < n; ++i) d.weight[i * n + i] = 1.0;
  return Network({n}, {d});
}

std::vector<std::size_t> every_nth(std::size_t n, std::size_t step) {
  std::vector<std::size_t> v;
  for (std::size_t i = 0; i < n; i += step) v.push_back(i);
  return v;
}

} // namespace

TEST_SUITE("tensor-net") {

TEST_CASE("forward matches spec examples") {
  const Network id = identity_dense(3);
  const Tensor x({3}, {1.0, 2.0, 3.0});
  CHECK(id.forward(x).back() == x);

  const Network relu({4}, {Relu{}});
  CHECK(relu.forward(Tensor({4}, {-1.0, 0.0, 2.0, -3.0})).back().values() ==
        std::vector<double>{0.0, 0.0, 2.0, 0.0});

  CHECK_THROWS_AS(id.forward(Tensor({4})), InvalidInput);
}

TEST_CASE("forward matches a nested-loop oracle") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Network net = oracle::tiny_net(s);
    const Tensor x = oracle::random_tensor(net.input_shape(), 100 + s, -1.0, 1.0);
    const auto want = oracle::naive_forward(net, x);
    const auto got = net.forward(x).back();
    CHECK(max_relative_error(got.data(), want) < 1e-12);
  }
  // strided, unpadded, non-square kernels go through the same path
  Conv2d c = make_conv(2, 3, 3, 2, 0);
  Network net({2, 9, 7}, {c, Relu{}});
  randomize_parameters(net, 7, 0.2);
  const Tensor x = oracle::random_tensor(net.input_shape(), 8, -1.0, 1.0);
  CHECK(max_relative_error(net.forward(x).back().data(), oracle::naive_forward(net, x)) < 1e-12);
}

TEST_CASE("forward is deterministic") {
  const Network net = oracle::tiny_net(3);
  const Tensor x = oracle::random_tensor(net.input_shape(), 4);
  CHECK(net.forward(x) == net.forward(x));
}

TEST_CASE("backward_seeded examples and errors") {
  const Network id = identity_dense(3);
  const Tensor x({3}, {0.5, -1.0, 2.0});
  CHECK(id.backward_seeded(x, {0, {0.0, 1.0, 0.0}}).values() == std::vector<double>{0.0, 1.0, 0.0});
  CHECK_THROWS_AS(id.backward_seeded(x, {0, {1.0, 0.0}}), InvalidInput);
  CHECK_THROWS_AS(id.backward_seeded(x, {1, {1.0, 0.0, 0.0}}), InvalidInput);
}

TEST_CASE("max-pool backward routes to the lowest-index maximum") {
  const Network pool({1, 2, 2}, {MaxPool{2, 2}});
  const Tensor x({1, 2, 2}, {5.0, 5.0, 1.0, 5.0});
  CHECK(pool.backward_seeded(x, {0, {1.0}}).values() == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("backward matches central finite differences") {
  std::size_t checked = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const Network net = oracle::tiny_net(s);
    const Tensor x = oracle::random_tensor(net.input_shape(), 50 + s, -1.0, 1.0);
    for (std::size_t layer : {2u, 5u, 6u}) {
      Rng rng(s, layer);
      SeedVector seed{layer, std::vector<double>(net.output_size(layer))};
      for (auto& v : seed.values) v = rng.uniform(-1.0, 1.0);
      const Tensor g = net.backward_seeded(x, seed);
      const auto r = oracle::finite_difference_check(net, x, seed, g, every_nth(x.size(), 3));
      CHECK(r.max_relative_error < 1e-6);
      checked += r.checked;
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("channel seed equals the sum of per-element seeds") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Network net = oracle::tiny_net(s, 12);
    const Tensor x = oracle::random_tensor(net.input_shape(), 9 + s);
    const std::size_t layer = *net.last_pool_layer();
    for (std::size_t c = 0; c < net.channels(layer); ++c) {
      const Tensor one = net.backward_seeded(x, channel_seed(net, layer, c));
      const Tensor sum = oracle::per_element_channel_sum(net, x, layer, c);
      CHECK(max_relative_error(one.data(), sum.data(), 1e-300) <= 1e-10);
    }
  }
}

TEST_CASE("backward is linear in the seed") {
  const Network net = oracle::tiny_net(11);
  const Tensor x = oracle::random_tensor(net.input_shape(), 12);
  const std::size_t layer = 5;
  Rng rng(13);
  SeedVector a{layer, std::vector<double>(net.output_size(layer))}, b = a, mix = a;
  const double alpha = 0.7, beta = -1.9;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    a.values[i] = rng.uniform(-1.0, 1.0);
    b.values[i] = rng.uniform(-1.0, 1.0);
    mix.values[i] = alpha * a.values[i] + beta * b.values[i];
  }
  Tensor want = alpha * net.backward_seeded(x, a);
  want += beta * net.backward_seeded(x, b);
  CHECK(max_relative_error(net.backward_seeded(x, mix).data(), want.data()) < 1e-9);
}

TEST_CASE("network construction validates shapes") {
  CHECK_THROWS_AS(Network({3, 8, 8}, {make_dense(10, 2)}), InvalidInput);
  CHECK_THROWS_AS(Network({2, 8, 8}, {make_conv(3, 4, 3)}), InvalidInput);
  CHECK_THROWS_AS(Network({1, 1, 1}, {MaxPool{2, 2}}), InvalidInput);
  const Network ref = make_reference_network({}, 0);
  CHECK(ref.num_layers() == 7);
  CHECK(ref.last_pool_layer() == std::optional<std::size_t>(5));
  CHECK(ref.channels(5) == 32);
  CHECK(ref.output_shape(5) == Shape{32, 16, 16});
  CHECK(ref.num_classes() == 4);
}

}

TEST_SUITE("train") {

namespace {
// Two classes separated by the sign of mean brightness on the left half.
void separable_set(std::vector<Tensor>& xs, std::vector<int>& ys) {
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    Tensor t({1, 8, 8});
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x)
        t.at(0, y, x) = (x < 4 ? (label ? 0.8 : 0.2) : 0.5) + rng.uniform(-0.1, 0.1);
    xs.push_back(t);
    ys.push_back(label);
  }
}
Network small_net() {
  std::vector<Layer> layers{make_conv(1, 4, 3, 1, 1), Relu{}, MaxPool{2, 2}, make_dense(64, 2)};
  Network net({1, 8, 8}, layers);
  randomize_parameters(net, 1);
  return net;
}
} // namespace

TEST_CASE("separable set is learned") {
  std::vector<Tensor> xs;
  std::vector<int> ys;
  separable_set(xs, ys);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.05;
  TrainReport rep;
  const Network net = train(small_net(), xs, ys, cfg, &rep);
  CHECK(accuracy(net, xs, ys) >= 0.99);
  CHECK(rep.final_loss < rep.initial_loss);
  CHECK(rep.epoch_loss.size() == 40);
}

TEST_CASE("zero epochs leave parameters untouched and seeds are reproducible") {
  std::vector<Tensor> xs;
  std::vector<int> ys;
  separable_set(xs, ys);
  const Network start = small_net();
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK(train(start, xs, ys, cfg) == start);
  cfg.epochs = 3;
  cfg.seed = 9;
  CHECK(train(start, xs, ys, cfg) == train(start, xs, ys, cfg));
  cfg.seed = 10;
  CHECK_FALSE(train(start, xs, ys, cfg) == train(start, xs, ys, TrainConfig{.epochs = 3, .seed = 9}));
}

TEST_CASE("training errors") {
  const Network net = small_net();
  CHECK_THROWS_AS(train(net, {}, {}, TrainConfig{}), InvalidInput);
  std::vector<Tensor> xs{Tensor({1, 8, 8})};
  std::vector<int> bad{5};
  CHECK_THROWS_AS(train(net, xs, bad, TrainConfig{}), InvalidInput);
}

TEST_CASE("cross entropy") {
  const std::vector<double> s{0.0, 0.0};
  CHECK(cross_entropy(s, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> big{1000.0, 0.0};
  CHECK(cross_entropy(big, 0) == doctest::Approx(0.0));
  CHECK(std::isfinite(cross_entropy(big, 1)));
}

}

TEST_SUITE("weights-io") {

TEST_CASE("round trip is bit exact") {
  const Network net = make_reference_network({}, 3);
  std::stringstream buf;
  save_weights(net, buf);
  const Network back = load_weights(buf, make_reference_network({}, 99));
  CHECK(back == net);
  for (auto [a, b] = std::pair{net.parameter_views(), back.parameter_views()}; auto i : every_nth(a.size(), 1))
    CHECK(std::memcmp(a[i].data(), b[i].data(), a[i].size_bytes()) == 0);
}

TEST_CASE("truncated and corrupt files") {
  const Network net = oracle::tiny_net(1);
  std::stringstream buf;
  save_weights(net, buf);
  const std::string bytes = buf.str();
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::stringstream in(bytes.substr(0, cut));
    CHECK_THROWS_AS(load_weights(in, net), FormatError);
  }
  {
    std::stringstream in(bytes.substr(0, bytes.size() - 1));
    try {
      load_weights(in, net);
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("layer 6") != std::string::npos);
    }
  }
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream m(bad_magic);
  CHECK_THROWS_AS(load_weights(m, net), FormatError);
  std::string v2 = bytes;
  v2[4] = 2;
  std::stringstream v(v2);
  CHECK_THROWS_AS(load_weights(v, net), UnsupportedVersion);
  std::stringstream trailing(bytes + "x");
  CHECK_THROWS_AS(load_weights(trailing, net), FormatError);
  CHECK_THROWS_AS(load_weights(std::filesystem::path("/nonexistent/w.bin"), net), IoError);
}

TEST_CASE("architecture mismatch is rejected") {
  std::stringstream buf;
  save_weights(oracle::tiny_net(1), buf);
  CHECK_THROWS_AS(load_weights(buf, oracle::tiny_net(1, 12)), FormatError);
}

}
