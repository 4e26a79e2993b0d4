#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "doctest.h"
#include "support/synthetic.hpp"
#include "visreg/data.hpp"

using namespace visreg;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const char* name) {
  return (fs::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void append_be32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(x >> 24);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back(x & 0xff);
}

struct IdxPair {
  std::string images = temp_path("visreg_test_images.idx");
  std::string labels = temp_path("visreg_test_labels.idx");
  ~IdxPair() {
    std::remove(images.c_str());
    std::remove(labels.c_str());
  }
};

}  // namespace

TEST_CASE("IDX header with one all-zero 28x28 image parses") {
  IdxPair p;
  std::vector<uint8_t> img = {0x00, 0x00, 0x08, 0x03};  // format-defined magic 2051
  append_be32(img, 1);
  append_be32(img, 28);
  append_be32(img, 28);
  img.insert(img.end(), 784, 0);
  write_bytes(p.images, img);

  std::vector<uint8_t> lab = {0x00, 0x00, 0x08, 0x01};
  append_be32(lab, 1);
  lab.push_back(5);
  write_bytes(p.labels, lab);

  const Dataset ds = load_mnist(p.images, p.labels);
  CHECK(ds.size() == 1);
  CHECK(ds.shape == Shape3{28, 28, 1});
  CHECK(ds.labels[0] == 5);
  for (double v : ds.pixels) CHECK(v == 0.0);
}

TEST_CASE("IDX pixel byte 255 normalizes to exactly 1.0") {
  IdxPair p;
  std::vector<uint8_t> img = {0x00, 0x00, 0x08, 0x03};
  append_be32(img, 1);
  append_be32(img, 1);
  append_be32(img, 2);
  img.push_back(255);
  img.push_back(51);
  write_bytes(p.images, img);
  std::vector<uint8_t> lab = {0x00, 0x00, 0x08, 0x01};
  append_be32(lab, 1);
  lab.push_back(0);
  write_bytes(p.labels, lab);

  const Dataset ds = load_mnist(p.images, p.labels);
  CHECK(ds.pixels[0] == 1.0);
  CHECK(ds.pixels[1] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("IDX format errors") {
  IdxPair p;
  SUBCASE("wrong magic reports the observed value") {
    std::vector<uint8_t> img;
    append_be32(img, 1234);
    append_be32(img, 1);
    append_be32(img, 1);
    append_be32(img, 1);
    img.push_back(0);
    write_bytes(p.images, img);
    write_bytes(p.labels, {0, 0, 8, 1, 0, 0, 0, 0});
    CHECK_THROWS_WITH_AS(load_mnist(p.images, p.labels), doctest::Contains("1234"),
                         std::runtime_error);
  }
  SUBCASE("truncated image payload reports expected vs actual") {
    std::vector<uint8_t> img = {0x00, 0x00, 0x08, 0x03};
    append_be32(img, 2);
    append_be32(img, 28);
    append_be32(img, 28);
    img.insert(img.end(), 100, 7);  // far short of 2 * 784
    write_bytes(p.images, img);
    write_bytes(p.labels, {0, 0, 8, 1, 0, 0, 0, 2, 1, 1});
    CHECK_THROWS_WITH_AS(load_mnist(p.images, p.labels), doctest::Contains("truncated"),
                         std::runtime_error);
  }
  SUBCASE("mismatched image and label counts") {
    std::vector<uint8_t> img = {0x00, 0x00, 0x08, 0x03};
    append_be32(img, 1);
    append_be32(img, 1);
    append_be32(img, 1);
    img.push_back(0);
    write_bytes(p.images, img);
    std::vector<uint8_t> lab = {0x00, 0x00, 0x08, 0x01};
    append_be32(lab, 3);
    lab.insert(lab.end(), {0, 1, 2});
    write_bytes(p.labels, lab);
    CHECK_THROWS_WITH_AS(load_mnist(p.images, p.labels),
                         doctest::Contains("does not match label count"), std::runtime_error);
  }
}

TEST_CASE("CIFAR-10 binary records") {
  const std::string path = temp_path("visreg_test_cifar.bin");
  SUBCASE("single all-zero record labeled 7") {
    std::vector<uint8_t> rec(3073, 0);
    rec[0] = 7;
    write_bytes(path, rec);
    const Dataset ds = load_cifar10({path});
    CHECK(ds.size() == 1);
    CHECK(ds.labels[0] == 7);
    CHECK(ds.shape == Shape3{32, 32, 3});
    for (double v : ds.pixels) CHECK(v == 0.0);
  }
  SUBCASE("ten records give ten samples") {
    std::vector<uint8_t> recs;
    for (int i = 0; i < 10; ++i) {
      recs.push_back(i % 10);
      recs.insert(recs.end(), 3072, 9);
    }
    write_bytes(path, recs);
    CHECK(load_cifar10({path}).size() == 10);
  }
  SUBCASE("channel planes are ordered as stored") {
    std::vector<uint8_t> rec(3073);
    rec[0] = 1;
    for (int c = 0; c < 3; ++c) {
      std::fill(rec.begin() + 1 + c * 1024, rec.begin() + 1 + (c + 1) * 1024,
                static_cast<uint8_t>(50 + 100 * c));
    }
    write_bytes(path, rec);
    const Dataset ds = load_cifar10({path});
    CHECK(ds.channel(0, 0)(0, 0) == doctest::Approx(50.0 / 255.0));
    CHECK(ds.channel(0, 1)(0, 0) == doctest::Approx(150.0 / 255.0));
    CHECK(ds.channel(0, 2)(0, 0) == doctest::Approx(250.0 / 255.0));
  }
  SUBCASE("length not a multiple of the record size") {
    write_bytes(path, std::vector<uint8_t>(3073 + 17, 0));
    CHECK_THROWS_WITH_AS(load_cifar10({path}), doctest::Contains("not a multiple"),
                         std::runtime_error);
  }
  std::remove(path.c_str());
}

TEST_CASE("IDX and CIFAR round-trips are exact") {
  SUBCASE("IDX") {
    IdxPair p;
    const Dataset ds = testsupport::make_random_dataset(101, 25, Shape3{9, 7, 1});
    write_idx(ds, p.images, p.labels);
    const Dataset back = load_mnist(p.images, p.labels);
    CHECK(back.pixels == ds.pixels);
    CHECK(back.labels == ds.labels);
    CHECK(back.shape == ds.shape);
  }
  SUBCASE("CIFAR") {
    const std::string path = temp_path("visreg_test_cifar_rt.bin");
    const Dataset ds = testsupport::make_random_dataset(103, 12, Shape3{32, 32, 3});
    write_cifar10(ds, path);
    const Dataset back = load_cifar10({path});
    CHECK(back.pixels == ds.pixels);
    CHECK(back.labels == ds.labels);
    std::remove(path.c_str());
  }
}

TEST_CASE("gzip-compressed inputs load transparently") {
  IdxPair plain;
  const Dataset ds = testsupport::make_random_dataset(107, 10, Shape3{5, 5, 1});
  write_idx(ds, plain.images, plain.labels);

  auto gzip_file = [](const std::string& src, const std::string& dst) {
    std::ifstream in(src, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    gzFile out = gzopen(dst.c_str(), "wb");
    REQUIRE(out != nullptr);
    gzwrite(out, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(out);
  };
  const std::string gz_images = temp_path("visreg_test_images.idx.gz");
  const std::string gz_labels = temp_path("visreg_test_labels.idx.gz");
  gzip_file(plain.images, gz_images);
  gzip_file(plain.labels, gz_labels);

  const Dataset back = load_mnist(gz_images, gz_labels);
  CHECK(back.pixels == ds.pixels);
  CHECK(back.labels == ds.labels);
  std::remove(gz_images.c_str());
  std::remove(gz_labels.c_str());
}

TEST_CASE("loaded pixels and labels satisfy the range invariants") {
  IdxPair p;
  const Dataset ds = testsupport::make_blob_dataset(109, 40, 12);
  write_idx(ds, p.images, p.labels);
  const Dataset back = load_mnist(p.images, p.labels);
  for (double v : back.pixels) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (int y : back.labels) {
    CHECK(y >= 0);
    CHECK(y < 10);
  }
}

TEST_CASE("minibatches form a deterministic permutation cover") {
  const Dataset ds = testsupport::make_random_dataset(113, 23, Shape3{3, 3, 1});

  SUBCASE("batch_size = dataset size gives one permuted batch") {
    const auto batches = minibatches(ds, 23, 5, 0);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].size() == 23);
    std::set<int> seen(batches[0].begin(), batches[0].end());
    CHECK(seen.size() == 23);
    // Permuted, not the identity order.
    std::vector<int> identity(23);
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(batches[0] != identity);
  }
  SUBCASE("same (seed, epoch) twice gives identical sequences") {
    CHECK(minibatches(ds, 7, 42, 3) == minibatches(ds, 7, 42, 3));
    CHECK(minibatches(ds, 7, 42, 3) != minibatches(ds, 7, 42, 4));
  }
  SUBCASE("union of all batches covers each index exactly once") {
    const auto batches = minibatches(ds, 7, 11, 2);
    REQUIRE(batches.size() == 4);  // 7 + 7 + 7 + 2, short final batch included
    CHECK(batches.back().size() == 2);
    std::set<int> seen;
    size_t total = 0;
    for (const auto& b : batches) {
      seen.insert(b.begin(), b.end());
      total += b.size();
    }
    CHECK(total == 23);
    CHECK(seen.size() == 23);
  }
  SUBCASE("batch_size must be positive") {
    CHECK_THROWS_AS(minibatches(ds, 0, 1, 0), std::invalid_argument);
  }
}

TEST_CASE("make_batch materializes samples and labels in index order") {
  const Dataset ds = testsupport::make_random_dataset(127, 6, Shape3{2, 2, 1});
  const std::vector<int> idx = {4, 0, 2};
  const Batch b = make_batch(ds, idx);
  REQUIRE(b.size() == 3);
  for (size_t i = 0; i < idx.size(); ++i) {
    CHECK(b.labels[i] == ds.labels[idx[i]]);
    const auto expect = ds.sample(idx[i]);
    CHECK(std::equal(expect.begin(), expect.end(), b.inputs[i].begin()));
  }
}

TEST_CASE("standardize centers each channel") {
  Dataset ds = testsupport::make_random_dataset(131, 30, Shape3{4, 4, 3});
  standardize(ds);
  const int plane = 16;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (size_t i = 0; i < ds.size(); ++i) {
      const auto px = ds.sample(i);
      for (int j = 0; j < plane; ++j) sum += px[c * plane + j];
    }
    CHECK(std::abs(sum / (30.0 * plane)) < 1e-9);
  }
}
