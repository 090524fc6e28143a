#ifndef MSGDD_GENERATOR_HPP
#define MSGDD_GENERATOR_HPP

#include "msgdd/batch.hpp"
#include "msgdd/config.hpp"
#include "msgdd/params.hpp"

#include <optional>
#include <string>
#include <vector>

namespace msgdd {

// U-Net generator with side outputs. Each encoder stage halves the resolution
// and leaves a 1x1+tanh tap behind; the decoder mirrors it with nearest 2x
// upsampling, skip concatenation and its own taps. The bottleneck tap is a
// single layer whose output appears in both pyramids.
//
// Per-level features (input H, depth L, channel schedule C_s):
//   encoder stage s:  conv3x3 s1 -> IN -> ReLU -> conv3x3 s2 -> IN -> ReLU
//   decoder stage s:  up2x -> concat skip -> conv3x3 s1 -> IN -> ReLU -> conv3x3 s1 -> IN -> ReLU
//   tap / head:       conv1x1 -> IN -> tanh     (IN removable via tap_norm=false)
template <typename Scalar>
struct GeneratorNet {
    struct EncBlock {
        ConvParam<Scalar> conv_a; // stride 1, widens channels
        ConvParam<Scalar> conv_b; // stride 2
    };
    struct DecBlock {
        ConvParam<Scalar> conv_a; // consumes upsampled + skip concat
        ConvParam<Scalar> conv_b;
    };

    ModelConfig cfg;
    std::vector<EncBlock> enc;          // stage s = 1..L
    std::vector<DecBlock> dec;          // stage s = 1..L (dec[s-1] lifts R_s -> R_{s-1})
    std::vector<ConvParam<Scalar>> enc_tap; // s = 1..L-1
    std::vector<ConvParam<Scalar>> dec_tap; // s = 1..L-1
    ConvParam<Scalar> bottleneck_tap;   // shared EO_L / DO_L head
    ConvParam<Scalar> head;             // full-resolution output head

    int level_channels(int stage) const { return channels_at_depth(cfg.base_channels, stage - 1); }

    // decoder feature width at resolution H/2^j (j = 0 is full resolution)
    int decoder_channels(int j) const { return level_channels(std::max(j, 1)); }

    explicit GeneratorNet(const ModelConfig& model = ModelConfig{}) : cfg(model) {
        const int L = cfg.scales;
        enc.resize(L);
        dec.resize(L);
        for (int s = 1; s <= L; ++s) {
            const int c_in = s == 1 ? cfg.input_channels : level_channels(s - 1);
            const int c = level_channels(s);
            enc[s - 1].conv_a.configure(c_in, c, 3, 1);
            enc[s - 1].conv_b.configure(c, c, 3, 2);

            const int skip_c = decoder_channels(s - 1);
            const int dec_in = decoder_channels(s) + skip_c;
            const int dec_out = decoder_channels(s - 1);
            dec[s - 1].conv_a.configure(dec_in, dec_out, 3, 1);
            dec[s - 1].conv_b.configure(dec_out, dec_out, 3, 1);
        }
        enc_tap.resize(L - 1);
        dec_tap.resize(L - 1);
        for (int s = 1; s < L; ++s) {
            enc_tap[s - 1].configure(level_channels(s), cfg.output_channels, 1, 1);
            dec_tap[s - 1].configure(decoder_channels(s), cfg.output_channels, 1, 1);
        }
        bottleneck_tap.configure(level_channels(L), cfg.output_channels, 1, 1);
        head.configure(decoder_channels(0), cfg.output_channels, 1, 1);
    }

    void init_params(SeededRng& rng) {
        const double stddev = cfg.init == "paper-literal" ? 1.0 : cfg.init_std;
        for (auto& blk : enc) {
            blk.conv_a.init(rng, stddev);
            blk.conv_b.init(rng, stddev);
        }
        for (auto& blk : dec) {
            blk.conv_a.init(rng, stddev);
            blk.conv_b.init(rng, stddev);
        }
        for (auto& tap : enc_tap) tap.init(rng, stddev);
        for (auto& tap : dec_tap) tap.init(rng, stddev);
        bottleneck_tap.init(rng, stddev);
        head.init(rng, stddev);
    }

    void collect(std::vector<ParamRef<Scalar>>& out) {
        for (size_t i = 0; i < enc.size(); ++i) {
            enc[i].conv_a.collect("enc" + std::to_string(i + 1) + ".conv_a", out);
            enc[i].conv_b.collect("enc" + std::to_string(i + 1) + ".conv_b", out);
        }
        for (size_t i = 0; i < dec.size(); ++i) {
            dec[i].conv_a.collect("dec" + std::to_string(i + 1) + ".conv_a", out);
            dec[i].conv_b.collect("dec" + std::to_string(i + 1) + ".conv_b", out);
        }
        for (size_t i = 0; i < enc_tap.size(); ++i)
            enc_tap[i].collect("enc_tap" + std::to_string(i + 1), out);
        for (size_t i = 0; i < dec_tap.size(); ++i)
            dec_tap[i].collect("dec_tap" + std::to_string(i + 1), out);
        bottleneck_tap.collect("tap_bottleneck", out);
        head.collect("head", out);
    }

    Eigen::Index param_count() {
        std::vector<ParamRef<Scalar>> refs;
        collect(refs);
        Eigen::Index total = 0;
        for (auto& r : refs)
            if (r.trainable) total += r.data->size();
        return total;
    }

    struct Bound {
        std::vector<std::pair<ConvVars, ConvVars>> enc; // conv_a, conv_b per stage
        std::vector<std::pair<ConvVars, ConvVars>> dec;
        std::vector<ConvVars> enc_tap, dec_tap;
        ConvVars bottleneck_tap, head;
        std::vector<Var> leaves; // trainable leaves, collect() order
    };

    // Binding order mirrors collect() so optimizer slots line up with leaves.
    Bound bind(Tape<Scalar>& t, bool trainable) const {
        Binder<Scalar> binder{t, trainable};
        Bound b;
        for (auto& blk : enc) b.enc.push_back({binder.conv(blk.conv_a), binder.conv(blk.conv_b)});
        for (auto& blk : dec) b.dec.push_back({binder.conv(blk.conv_a), binder.conv(blk.conv_b)});
        for (auto& tap : enc_tap) b.enc_tap.push_back(binder.conv(tap));
        for (auto& tap : dec_tap) b.dec_tap.push_back(binder.conv(tap));
        b.bottleneck_tap = binder.conv(bottleneck_tap);
        b.head = binder.conv(head);
        b.leaves = std::move(binder.leaves);
        return b;
    }

    struct EncodeResult {
        Var latent;                 // features at H/2^L
        std::vector<Var> taps;      // EO_1..EO_L (EO_L from the shared bottleneck layer)
        std::vector<Var> skips;     // skips[0] at full resolution, skips[s] at H/2^s for s < L
    };

    struct DecodeResult {
        Var output;                 // full-resolution tanh output
        std::vector<Var> taps;      // DO_1..DO_L
    };

    struct ForwardResult {
        Var output;
        std::vector<Var> enc_taps; // EO_s at H/2^s
        std::vector<Var> dec_taps; // DO_s at H/2^s; dec_taps[L-1] aliases enc_taps[L-1]
        Var latent;
    };

    Var tap_head(Tape<Scalar>& t, Var features, const ConvParam<Scalar>& p, const ConvVars& v) const {
        Var projected = apply_conv(t, features, p, v);
        if (cfg.tap_norm) projected = instance_norm(t, projected);
        return tanh_op(t, projected);
    }

    void check_input(const Shape& s) const {
        const int div = 1 << cfg.scales;
        if (s.h % div != 0 || s.w % div != 0)
            throw Error("generator", "input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                                         " not divisible by 2^" + std::to_string(cfg.scales));
        if (s.c != cfg.input_channels)
            throw Error("generator", "input has " + std::to_string(s.c) + " channels, expected " +
                                         std::to_string(cfg.input_channels));
    }

    EncodeResult encode(Tape<Scalar>& t, const Bound& b, Var input) const {
        check_input(t.shape(input));
        const int L = cfg.scales;
        EncodeResult r;
        r.skips.resize(L);
        r.taps.resize(L);
        Var cur = input;
        for (int s = 1; s <= L; ++s) {
            Var pre = relu(t, instance_norm(t, apply_conv(t, cur, enc[s - 1].conv_a, b.enc[s - 1].first)));
            if (s == 1) r.skips[0] = pre; // full-resolution skip
            cur = relu(t, instance_norm(t, apply_conv(t, pre, enc[s - 1].conv_b, b.enc[s - 1].second)));
            if (s < L) {
                r.skips[s] = cur;
                r.taps[s - 1] = tap_head(t, cur, enc_tap[s - 1], b.enc_tap[s - 1]);
            }
        }
        r.latent = cur;
        r.taps[L - 1] = tap_head(t, r.latent, bottleneck_tap, b.bottleneck_tap);
        return r;
    }

    // `bottleneck` carries EO_L from a matching encode call so DO_L is the very
    // same tensor; when absent (standalone decode) it is recomputed from the
    // latent with the shared layer.
    DecodeResult decode(Tape<Scalar>& t, const Bound& b, Var latent, const std::vector<Var>& skips,
                        Var bottleneck = Var{}) const {
        const int L = cfg.scales;
        if (static_cast<int>(skips.size()) != L)
            throw Error("generator", "decode expects " + std::to_string(L) + " skip levels, got " +
                                         std::to_string(skips.size()));
        DecodeResult r;
        r.taps.resize(L);
        r.taps[L - 1] = bottleneck.valid() ? bottleneck : tap_head(t, latent, bottleneck_tap, b.bottleneck_tap);
        Var cur = latent;
        for (int s = L; s >= 1; --s) {
            Var up = upsample_nearest2x(t, cur);
            const Shape ss = t.shape(skips[s - 1]);
            const Shape us = t.shape(up);
            if (ss.h != us.h || ss.w != us.w)
                throw Error("generator", "skip at stage " + std::to_string(s) + " is " +
                                             std::to_string(ss.h) + "x" + std::to_string(ss.w) +
                                             ", expected " + std::to_string(us.h) + "x" +
                                             std::to_string(us.w));
            Var cat = concat_channels(t, up, skips[s - 1]);
            Var mid = relu(t, instance_norm(t, apply_conv(t, cat, dec[s - 1].conv_a, b.dec[s - 1].first)));
            cur = relu(t, instance_norm(t, apply_conv(t, mid, dec[s - 1].conv_b, b.dec[s - 1].second)));
            if (s - 1 >= 1) r.taps[s - 2] = tap_head(t, cur, dec_tap[s - 2], b.dec_tap[s - 2]);
        }
        r.output = tap_head(t, cur, head, b.head);
        return r;
    }

    ForwardResult forward(Tape<Scalar>& t, const Bound& b, Var input) const {
        EncodeResult e = encode(t, b, input);
        DecodeResult d = decode(t, b, e.latent, e.skips, e.taps[cfg.scales - 1]);
        return ForwardResult{d.output, e.taps, d.taps, e.latent};
    }
};

// Value-level generator output for the non-training surfaces (evaluation,
// diagnostics, image dumps).
template <typename Scalar>
struct GeneratorOutput {
    Image<Scalar> output;
    ScalePyramid<Scalar> encoder_taps;
    ScalePyramid<Scalar> decoder_taps;
    Image<Scalar> latent;
};

template <typename Scalar>
std::vector<GeneratorOutput<Scalar>> generate_batch(const GeneratorNet<Scalar>& net,
                                                    const std::vector<Image<Scalar>>& inputs) {
    Tape<Scalar> t;
    auto bound = net.bind(t, /*trainable=*/false);
    Var input = batch_constant(t, inputs);
    auto fwd = net.forward(t, bound, input);
    std::vector<GeneratorOutput<Scalar>> out(inputs.size());
    for (size_t n = 0; n < inputs.size(); ++n) {
        out[n].output = unpack_sample(t, fwd.output, static_cast<int>(n));
        out[n].latent = unpack_sample(t, fwd.latent, static_cast<int>(n));
        for (int s = 0; s < net.cfg.scales; ++s) {
            out[n].encoder_taps.levels.push_back(unpack_sample(t, fwd.enc_taps[s], static_cast<int>(n)));
            out[n].decoder_taps.levels.push_back(unpack_sample(t, fwd.dec_taps[s], static_cast<int>(n)));
        }
    }
    return out;
}

template <typename Scalar>
GeneratorOutput<Scalar> generate(const GeneratorNet<Scalar>& net, const Image<Scalar>& input) {
    return generate_batch(net, std::vector<Image<Scalar>>{input}).front();
}

} // namespace msgdd

#endif
