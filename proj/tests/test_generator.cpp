#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msgdd/generator.hpp"

#include <algorithm>

using namespace msgdd;

namespace {

ModelConfig small_model(int scales, int base, int in_c = 1, int out_c = 1) {
    ModelConfig m;
    m.scales = scales;
    m.base_channels = base;
    m.input_channels = in_c;
    m.output_channels = out_c;
    return m;
}

Image<float> random_image(int h, int w, int c, std::uint64_t seed) {
    Image<float> im(h, w, c);
    SeededRng rng(seed);
    for (Eigen::Index i = 0; i < im.values.size(); ++i)
        im.values[i] = static_cast<float>(std::clamp(rng.normal() * 0.5, -1.0, 1.0));
    return im;
}

} // namespace

TEST_CASE("256x256 input with L=4 gives taps at 128/64/32/16 and output at 256") {
    GeneratorNet<float> net(small_model(4, 2));
    SeededRng rng(11);
    net.init_params(rng);
    GeneratorOutput<float> out = generate(net, random_image(256, 256, 1, 3));
    REQUIRE(out.encoder_taps.levels.size() == 4);
    REQUIRE(out.decoder_taps.levels.size() == 4);
    const int expected[] = {128, 64, 32, 16};
    for (int s = 0; s < 4; ++s) {
        CHECK(out.encoder_taps.levels[s].height == expected[s]);
        CHECK(out.encoder_taps.levels[s].width == expected[s]);
        CHECK(out.decoder_taps.levels[s].height == expected[s]);
        CHECK(out.encoder_taps.levels[s].channels == 1);
        CHECK(out.decoder_taps.levels[s].channels == 1);
    }
    CHECK(out.output.height == 256);
    CHECK(out.output.width == 256);
    CHECK(out.latent.height == 16);

    // shared bottleneck tap: element-wise identical
    CHECK((out.encoder_taps.levels[3].values == out.decoder_taps.levels[3].values).all());

    // tanh heads keep everything in [-1, 1]
    CHECK(out.output.values.abs().maxCoeff() <= 1.0f);
    for (int s = 0; s < 4; ++s) {
        CHECK(out.encoder_taps.levels[s].values.abs().maxCoeff() <= 1.0f);
        CHECK(out.decoder_taps.levels[s].values.abs().maxCoeff() <= 1.0f);
    }
}

TEST_CASE("16x16 input with L=1 gives a single 8x8 tap") {
    GeneratorNet<float> net(small_model(1, 3));
    SeededRng rng(5);
    net.init_params(rng);
    Tape<float> t;
    auto bound = net.bind(t, false);
    Var input = batch_constant(t, {random_image(16, 16, 1, 9)});
    auto enc = net.encode(t, bound, input);
    REQUIRE(enc.taps.size() == 1);
    CHECK(t.shape(enc.taps[0]).h == 8);
    CHECK(t.shape(enc.latent).h == 8);
}

TEST_CASE("all-zero input with zero parameters gives all-zero taps") {
    // tanh(IN(conv(0))) with zero weights and biases is exactly zero.
    GeneratorNet<float> net(small_model(2, 2)); // configure() leaves parameters at zero
    Image<float> zero(16, 16, 1);
    GeneratorOutput<float> out = generate(net, zero);
    for (const auto& tap : out.encoder_taps.levels) CHECK(tap.values.abs().maxCoeff() == 0.0f);
    for (const auto& tap : out.decoder_taps.levels) CHECK(tap.values.abs().maxCoeff() == 0.0f);
    CHECK(out.output.values.abs().maxCoeff() == 0.0f);
}

TEST_CASE("decode from a 16x16 latent lifts taps through 16/32/64/128 to a 256 output") {
    GeneratorNet<float> net(small_model(4, 2));
    SeededRng rng(21);
    net.init_params(rng);
    Tape<float> t;
    auto bound = net.bind(t, false);
    Var input = batch_constant(t, {random_image(256, 256, 1, 2)});
    auto enc = net.encode(t, bound, input);
    CHECK(t.shape(enc.latent).h == 16);
    auto dec = net.decode(t, bound, enc.latent, enc.skips);
    REQUIRE(dec.taps.size() == 4);
    const int expected[] = {128, 64, 32, 16};
    for (int s = 0; s < 4; ++s) CHECK(t.shape(dec.taps[s]).h == expected[s]);
    CHECK(t.shape(dec.output).h == 256);
}

TEST_CASE("decode(encode(x)) shape arithmetic holds for H in {32, 64, 256}") {
    for (int h : {32, 64, 256}) {
        GeneratorNet<float> net(small_model(4, 2));
        SeededRng rng(31);
        net.init_params(rng);
        GeneratorOutput<float> out = generate(net, random_image(h, h, 1, 7));
        CHECK(out.output.height == h);
        for (int s = 0; s < 4; ++s) {
            CHECK(out.encoder_taps.levels[s].height == h >> (s + 1));
            CHECK(out.decoder_taps.levels[s].height == h >> (s + 1));
        }
    }
}

TEST_CASE("L=1 decode gives one tap plus output at twice the latent resolution") {
    GeneratorNet<float> net(small_model(1, 2));
    SeededRng rng(41);
    net.init_params(rng);
    GeneratorOutput<float> out = generate(net, random_image(16, 16, 1, 13));
    REQUIRE(out.decoder_taps.levels.size() == 1);
    CHECK(out.decoder_taps.levels[0].height == 8);
    CHECK(out.output.height == 16);
}

TEST_CASE("generate is deterministic for fixed input and parameters") {
    GeneratorNet<float> net(small_model(3, 4));
    SeededRng rng(51);
    net.init_params(rng);
    Image<float> input = random_image(32, 32, 1, 17);
    GeneratorOutput<float> a = generate(net, input);
    GeneratorOutput<float> b = generate(net, input);
    CHECK((a.output.values == b.output.values).all());
    for (int s = 0; s < 3; ++s)
        CHECK((a.encoder_taps.levels[s].values == b.encoder_taps.levels[s].values).all());
}

TEST_CASE("parameter count matches the closed-form sum over declared conv shapes") {
    // Default model: L=4, base 64, 1 input / 1 output channel.
    GeneratorNet<float> net(ModelConfig{});
    auto C = [](int s) { return 64 * std::min(1 << (s - 1), 8); };
    auto Cdec = [&](int j) { return C(std::max(j, 1)); };
    long long expected = 0;
    for (int s = 1; s <= 4; ++s) {
        const int in_a = s == 1 ? 1 : C(s - 1);
        expected += static_cast<long long>(in_a) * 9 * C(s) + C(s); // enc conv_a
        expected += static_cast<long long>(C(s)) * 9 * C(s) + C(s); // enc conv_b (stride 2)
        const int skip = s == 1 ? C(1) : C(s - 1);
        const int dec_in = Cdec(s) + skip;
        expected += static_cast<long long>(dec_in) * 9 * Cdec(s - 1) + Cdec(s - 1);      // dec conv_a
        expected += static_cast<long long>(Cdec(s - 1)) * 9 * Cdec(s - 1) + Cdec(s - 1); // dec conv_b
    }
    for (int s = 1; s <= 3; ++s) expected += C(s) + 1;    // encoder taps (1x1)
    for (int s = 1; s <= 3; ++s) expected += Cdec(s) + 1; // decoder taps
    expected += C(4) + 1;    // shared bottleneck tap
    expected += Cdec(0) + 1; // full-resolution head
    CHECK(net.param_count() == expected);
}

TEST_CASE("generator input contract violations throw") {
    GeneratorNet<float> net(small_model(4, 2));
    SeededRng rng(61);
    net.init_params(rng);
    CHECK_THROWS_AS(generate(net, random_image(100, 100, 1, 1)), Error); // not divisible by 16
    CHECK_THROWS_AS(generate(net, random_image(64, 64, 2, 1)), Error);   // channel mismatch
}
