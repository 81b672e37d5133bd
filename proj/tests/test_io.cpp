#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "skbsem/image.hpp"
#include "skbsem/rng.hpp"
#include "skbsem/snapshot.hpp"

using namespace skbsem;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("skbsem_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("snapshot round-trips named tensors bit-exactly") {
    TempDir tmp;
    Rng rng(5);
    Tensor a({3, 4});
    for (double& v : a.data) v = rng.gaussian();
    Tensor b({7});
    for (double& v : b.data) v = rng.gaussian() * 1e-12;
    b.data[0] = 0.1 + 0.2;  // a value that does not round-trip through text

    save_snapshot(tmp.file("m.skbm"), {{"layer/weight", &a}, {"layer/bias", &b}});
    const NamedTensors loaded = load_snapshot(tmp.file("m.skbm"));
    REQUIRE(loaded.items.size() == 2);
    CHECK(loaded.items[0].first == "layer/weight");
    CHECK(loaded.items[0].second.shape == a.shape);
    CHECK(loaded.items[0].second.data == a.data);
    CHECK(loaded.items[1].second.data == b.data);
}

TEST_CASE("snapshot header starts with the SKBM magic") {
    TempDir tmp;
    Tensor a({1}, 0.0);
    save_snapshot(tmp.file("m.skbm"), {{"x", &a}}) ;
    std::ifstream f(tmp.file("m.skbm"), std::ios::binary);
    char magic[4];
    f.read(magic, 4);
    CHECK(std::string(magic, 4) == "SKBM");
}

TEST_CASE("snapshot rejects corrupted and truncated files") {
    TempDir tmp;
    {
        std::ofstream f(tmp.file("bad.skbm"), std::ios::binary);
        f << "NOPE";
    }
    CHECK_THROWS_WITH_AS(load_snapshot(tmp.file("bad.skbm")), doctest::Contains("magic"), std::runtime_error);

    Tensor a({2, 2}, 1.0);
    save_snapshot(tmp.file("ok.skbm"), {{"x", &a}});
    // Truncate mid-payload.
    const auto full = fs::file_size(tmp.file("ok.skbm"));
    fs::resize_file(tmp.file("ok.skbm"), full - 5);
    CHECK_THROWS_WITH_AS(load_snapshot(tmp.file("ok.skbm")), doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("snapshot_get validates name and shape") {
    TempDir tmp;
    Tensor a({2, 3}, 0.5);
    save_snapshot(tmp.file("m.skbm"), {{"w", &a}});
    const NamedTensors snap = load_snapshot(tmp.file("m.skbm"));
    CHECK_THROWS_WITH_AS(snapshot_get(snap, "missing", {2, 3}), doctest::Contains("missing"), std::runtime_error);
    CHECK_THROWS_WITH_AS(snapshot_get(snap, "w", {3, 2}), doctest::Contains("shape"), std::runtime_error);
    CHECK(snapshot_get(snap, "w", {2, 3}).data == a.data);
}

TEST_CASE("image files round-trip at f32 precision") {
    TempDir tmp;
    Rng rng(9);
    ImageTensor img(5, 4, 3);
    for (double& p : img.pixels) p = rng.uniform();
    save_image(tmp.file("x.skbi"), img);
    const ImageTensor back = load_image(tmp.file("x.skbi"));
    REQUIRE(back.same_dims(img));
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(back.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-6));
}

TEST_CASE("image loader rejects bad magic") {
    TempDir tmp;
    {
        std::ofstream f(tmp.file("bad.skbi"), std::ios::binary);
        f << "JUNKJUNKJUNKJUNK";
    }
    CHECK_THROWS_WITH_AS(load_image(tmp.file("bad.skbi")), doctest::Contains("magic"), std::runtime_error);
}

TEST_CASE("bilinear resize preserves constants and stays in range") {
    ImageTensor img(8, 8, 1, 0.37);
    const ImageTensor up = resize_bilinear(img, 13, 5);
    CHECK(up.width == 13);
    CHECK(up.height == 5);
    for (double p : up.pixels) CHECK(p == doctest::Approx(0.37));

    Rng rng(2);
    ImageTensor noisy(6, 6, 2);
    for (double& p : noisy.pixels) p = rng.uniform();
    const ImageTensor down = resize_bilinear(noisy, 3, 3);
    for (double p : down.pixels) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}
