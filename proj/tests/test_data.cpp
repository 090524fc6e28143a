#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msgdd/dataset.hpp"

#include <filesystem>

using namespace msgdd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("msgdd_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("pyramid of a constant image stays constant at every level") {
    Image<float> im(32, 32, 1);
    im.values.setConstant(0.37f);
    ScalePyramid<float> pyr = build_pyramid(im, 3);
    REQUIRE(pyr.levels.size() == 3);
    for (const auto& level : pyr.levels) {
        CHECK(level.values.minCoeff() == doctest::Approx(0.37f));
        CHECK(level.values.maxCoeff() == doctest::Approx(0.37f));
    }
}

TEST_CASE("2x2 checkerboard averages to zero at the first level") {
    Image<float> im(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) im.at(0, y, x) = ((x + y) % 2 == 0) ? 1.0f : -1.0f;
    ScalePyramid<float> pyr = build_pyramid(im, 1);
    CHECK(pyr.levels[0].values.abs().maxCoeff() == doctest::Approx(0.0f));
}

TEST_CASE("256 with 4 levels gives 128/64/32/16 and exact per-level pixel counts") {
    Image<float> im(256, 256, 1);
    ScalePyramid<float> pyr = build_pyramid(im, 4);
    const int expected[] = {128, 64, 32, 16};
    for (int s = 0; s < 4; ++s) {
        CHECK(pyr.levels[s].height == expected[s]);
        CHECK(pyr.levels[s].values.size() == static_cast<Eigen::Index>(expected[s]) * expected[s]);
    }
    pyr.require_valid("data");
    CHECK_THROWS_AS((void)build_pyramid(Image<float>(100, 100, 1), 4), Error);
}

TEST_CASE("average pooling preserves the global mean exactly at every level") {
    SeededRng rng(3);
    Image<double> im(64, 64, 1);
    for (Eigen::Index i = 0; i < im.values.size(); ++i) im.values[i] = rng.normal();
    const double mean = im.values.mean();
    ScalePyramid<double> pyr = build_pyramid(im, 4);
    for (const auto& level : pyr.levels)
        CHECK(level.values.mean() == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("channel projection averages down and replicates up") {
    Image<float> rgbish(4, 4, 3);
    rgbish.values.segment(0, 16).setConstant(0.0f);
    rgbish.values.segment(16, 16).setConstant(0.3f);
    rgbish.values.segment(32, 16).setConstant(0.6f);
    Image<float> mono = project_channels(rgbish, 1);
    CHECK(mono.channels == 1);
    CHECK(mono.values[0] == doctest::Approx(0.3f));
    Image<float> tripled = project_channels(mono, 3);
    CHECK(tripled.channels == 3);
    CHECK(tripled.values[40] == doctest::Approx(0.3f));
}

TEST_CASE("synthetic shapes: deterministic, bounded mask fraction, valid pairs") {
    auto a = synth_shapes<float>(40, 64, 1);
    auto b = synth_shapes<float>(40, 64, 1);
    auto c = synth_shapes<float>(5, 64, 2);
    REQUIRE(a.size() == 40);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK((a[i].input.values == b[i].input.values).all());
        CHECK((a[i].target.values == b[i].target.values).all());
    }
    bool any_diff = false;
    for (size_t i = 0; i < c.size(); ++i)
        any_diff = any_diff || (a[i].input.values != c[i].input.values).any();
    CHECK(any_diff);
    for (const auto& s : a) {
        s.input.require_valid("data");
        const double fraction =
            static_cast<double>((s.target.values > 0.0f).count()) / s.target.values.size();
        CHECK(fraction >= 0.05);
        CHECK(fraction <= 0.6);
        // mask is strictly binary
        CHECK(((s.target.values == 1.0f) || (s.target.values == -1.0f)).all());
    }
    CHECK(synth_shapes<float>(1, 32, 9).size() == 1);
    CHECK_THROWS_AS((void)synth_shapes<float>(0, 64, 1), Error);
    CHECK_THROWS_AS((void)synth_shapes<float>(1, 100, 1), Error);
}

TEST_CASE("augment policy none returns the sample unchanged") {
    auto samples = synth_shapes<float>(1, 32, 5);
    SeededRng rng(1);
    auto res = augment(samples[0], rng, "none");
    CHECK((res.sample.input.values == samples[0].input.values).all());
    CHECK((res.sample.target.values == samples[0].target.values).all());
    CHECK(res.transform.identity());
}

TEST_CASE("horizontal flip applied twice restores the original") {
    auto samples = synth_shapes<float>(1, 32, 6);
    AugmentTransform flip;
    flip.hflip = true;
    Image<float> once = flip.apply(samples[0].input, -1.0f, false);
    Image<float> twice = flip.apply(once, -1.0f, false);
    CHECK((twice.values == samples[0].input.values).all());
}

TEST_CASE("augmentation keeps input and mask synchronized") {
    // Replaying the recorded transform on the original mask reproduces the
    // augmented mask exactly.
    auto samples = synth_shapes<float>(4, 32, 7);
    SeededRng rng(11);
    for (const auto& s : samples) {
        auto res = augment(s, rng, "flips_affine");
        Image<float> replay = res.transform.apply(s.target, -1.0f, true);
        CHECK((replay.values == res.sample.target.values).all());
    }
}

TEST_CASE("random affine keeps the foreground count within 20 percent on ellipses") {
    auto samples = synth_shapes<float>(1, 64, 8);
    const auto base_count = (samples[0].target.values > 0.0f).count();
    SeededRng rng(13);
    for (int i = 0; i < 100; ++i) {
        auto res = augment(samples[0], rng, "flips_affine");
        const auto count = (res.sample.target.values > 0.0f).count();
        const double ratio = static_cast<double>(count) / static_cast<double>(base_count);
        CAPTURE(i);
        CHECK(ratio >= 0.8);
        CHECK(ratio <= 1.2);
    }
}

TEST_CASE("pad_to_square centers content and area resize preserves constants") {
    Image<float> wide(2, 6, 1);
    wide.values.setConstant(1.0f);
    Image<float> square = pad_to_square(wide, -1.0f);
    CHECK(square.height == 6);
    CHECK(square.width == 6);
    CHECK(square.at(0, 0, 0) == -1.0f);
    CHECK(square.at(0, 2, 0) == 1.0f); // rows 2..3 carry the source

    Image<float> constant(840, 500, 1);
    constant.values.setConstant(0.25f);
    Image<float> resized = resize_area(pad_to_square(constant, 0.25f), 256, 256);
    CHECK(resized.height == 256);
    CHECK(resized.values.minCoeff() == doctest::Approx(0.25f).epsilon(1e-5));
    CHECK(resized.values.maxCoeff() == doctest::Approx(0.25f).epsilon(1e-5));
}

TEST_CASE("dataset round trip: materialize then load with splits") {
    TempDir dir("roundtrip");
    auto samples = synth_shapes<float>(10, 32, 3);
    materialize_dataset(dir.path.string(), samples);

    DatasetManifest manifest{dir.path.string(), 6, 2, 2, 32};
    DatasetSplits<float> splits = load_dataset<float>(manifest);
    REQUIRE(splits.train.size() == 6);
    REQUIRE(splits.val.size() == 2);
    REQUIRE(splits.test.size() == 2);

    // disjoint ids covering all pairs, deterministic sorted order
    std::vector<std::string> ids;
    for (const auto& s : splits.train) ids.push_back(s.id);
    for (const auto& s : splits.val) ids.push_back(s.id);
    for (const auto& s : splits.test) ids.push_back(s.id);
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    CHECK(ids == sorted);
    CHECK(std::unique(sorted.begin(), sorted.end()) == sorted.end());

    // masks binary after the byte round trip, values in [-1, 1]
    for (const auto& s : splits.train) {
        CHECK(((s.target.values == 1.0f) || (s.target.values == -1.0f)).all());
        CHECK(s.input.values.maxCoeff() <= 1.0f);
        CHECK(s.input.values.minCoeff() >= -1.0f);
    }
    // 8-bit quantization: loaded input within half a level of the original
    CHECK((splits.train[0].input.values - samples[0].input.values).abs().maxCoeff() <= 1.0f / 127.0f);
}

TEST_CASE("dataset loader error paths") {
    TempDir dir("errors");
    CHECK_THROWS_WITH_AS((void)load_dataset<float>(DatasetManifest{dir.path.string(), 1, 0, 0, 32}),
                         doctest::Contains("no pairs found"), Error);

    auto samples = synth_shapes<float>(3, 32, 4);
    materialize_dataset(dir.path.string(), samples);
    CHECK_THROWS_WITH_AS((void)load_dataset<float>(DatasetManifest{dir.path.string(), 3, 1, 1, 32}),
                         doctest::Contains("split-size mismatch"), Error);

    fs::remove(dir.path / "masks" / "synth_00001.png");
    CHECK_THROWS_WITH_AS((void)load_dataset<float>(DatasetManifest{dir.path.string(), 1, 1, 1, 32}),
                         doctest::Contains("missing mask partner"), Error);
}

TEST_CASE("840x500 source is padded to square then scaled to 256") {
    TempDir dir("resize");
    // white left half, black right half, on an 840x500 canvas
    Image<float> src(500, 840, 1);
    src.values.setConstant(-1.0f);
    for (int y = 0; y < 500; ++y)
        for (int x = 0; x < 420; ++x) src.at(0, y, x) = 1.0f;
    std::vector<PairedSample<float>> samples(1);
    samples[0].id = "wide_00000";
    samples[0].input = src;
    samples[0].target = src;
    materialize_dataset(dir.path.string(), samples);

    DatasetSplits<float> splits = load_dataset<float>(DatasetManifest{dir.path.string(), 1, 0, 0, 256});
    const Image<float>& loaded = splits.train[0].input;
    CHECK(loaded.height == 256);
    CHECK(loaded.width == 256);
    // contents occupy the middle 500/840 of the height: rows near the border
    // are padding, the center-left is bright
    const int content_half = static_cast<int>(256 * (500.0 / 840.0) / 2.0);
    CHECK(loaded.at(0, 128, 64) > 0.9f);               // center of the white half
    CHECK(loaded.at(0, 128, 200) < -0.9f);             // black half
    CHECK(loaded.at(0, 128 - content_half - 8, 64) < -0.9f); // above the content band
    CHECK(loaded.at(0, 2, 128) < -0.9f);
}
