#ifndef MSGDD_DISCRIMINATOR_HPP
#define MSGDD_DISCRIMINATOR_HPP

#include "msgdd/batch.hpp"
#include "msgdd/config.hpp"
#include "msgdd/params.hpp"

#include <string>
#include <vector>

namespace msgdd {

// One downsampling unit of the score networks: conv4x4 s1 -> BN -> ReLU,
// conv4x4 s2 -> BN -> ReLU. The very first convolution of a network carries no
// norm (has_norm_a = false).
template <typename Scalar>
struct ScoreBlock {
    ConvParam<Scalar> conv_a, conv_b;
    BatchNormParam<Scalar> bn_a, bn_b;
    bool has_norm_a = true;

    void configure(int in_c, int out_c, bool norm_on_first) {
        has_norm_a = norm_on_first;
        conv_a.configure(in_c, out_c, 4, 1);
        conv_b.configure(out_c, out_c, 4, 2);
        if (has_norm_a) bn_a.configure(out_c);
        bn_b.configure(out_c);
    }

    void init(SeededRng& rng, double stddev) {
        conv_a.init(rng, stddev);
        conv_b.init(rng, stddev);
    }

    void collect(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
        conv_a.collect(prefix + ".conv_a", out);
        if (has_norm_a) bn_a.collect(prefix + ".bn_a", out);
        conv_b.collect(prefix + ".conv_b", out);
        bn_b.collect(prefix + ".bn_b", out);
    }

    Eigen::Index param_count() const {
        return conv_a.param_count() + conv_b.param_count() +
               (has_norm_a ? bn_a.param_count() : 0) + bn_b.param_count();
    }

    struct Bound {
        ConvVars conv_a, conv_b;
        BatchNormVars bn_a, bn_b;
    };

    // Same order as collect(): conv_a, bn_a, conv_b, bn_b.
    Bound bind(Binder<Scalar>& binder) const {
        Bound b;
        b.conv_a = binder.conv(conv_a);
        if (has_norm_a) b.bn_a = binder.norm(bn_a);
        b.conv_b = binder.conv(conv_b);
        b.bn_b = binder.norm(bn_b);
        return b;
    }

    Var forward(Tape<Scalar>& t, const Bound& b, Var x, const NormMode& mode) {
        Var a = apply_conv(t, x, conv_a, b.conv_a);
        if (has_norm_a) a = apply_batch_norm(t, a, bn_a, b.bn_a, mode);
        a = relu(t, a);
        Var c = apply_batch_norm(t, apply_conv(t, a, conv_b, b.conv_b), bn_b, b.bn_b, mode);
        return relu(t, c);
    }
};

namespace detail {

inline void check_side_resolution(const std::string& who, const Shape& got, int expect_h, int expect_w,
                                  int index) {
    if (got.h != expect_h || got.w != expect_w)
        throw Error("discriminator", who + " side input " + std::to_string(index) + " expected " +
                                         std::to_string(expect_h) + "x" + std::to_string(expect_w) +
                                         ", got " + std::to_string(got.h) + "x" + std::to_string(got.w));
}

} // namespace detail

// Score network over the decoder side: the full-resolution candidate enters
// block 0 and each coarser pyramid level is concatenated onto the features at
// its own resolution. With multiscale=false it degrades to a plain
// patch-score stack over the first input alone (the pix2pix-style baseline).
template <typename Scalar>
struct DecoderScoreNet {
    int scales = 4;
    int base_channels = 64;
    int first_channels = 1;
    int side_channels = 1;
    bool multiscale = true;

    std::vector<ScoreBlock<Scalar>> blocks; // block 0..L
    ConvParam<Scalar> score_head;           // conv4x4 s1 -> 1 channel

    int block_channels(int j) const { return channels_at_depth(base_channels, j); }

    DecoderScoreNet() = default;
    DecoderScoreNet(int L, int base, int first_c, int side_c, bool with_sides = true)
        : scales(L), base_channels(base), first_channels(first_c), side_channels(side_c),
          multiscale(with_sides) {
        blocks.resize(L + 1);
        for (int j = 0; j <= L; ++j) {
            const int in_c = j == 0 ? first_channels
                                    : block_channels(j - 1) + (multiscale ? side_channels : 0);
            blocks[j].configure(in_c, block_channels(j), /*norm_on_first=*/j != 0);
        }
        score_head.configure(block_channels(L), 1, 4, 1);
    }

    void init_params(SeededRng& rng, double stddev) {
        for (auto& blk : blocks) blk.init(rng, stddev);
        score_head.init(rng, stddev);
    }

    void collect(std::vector<ParamRef<Scalar>>& out) {
        for (size_t j = 0; j < blocks.size(); ++j)
            blocks[j].collect("block" + std::to_string(j), out);
        score_head.collect("score_head", out);
    }

    struct Bound {
        std::vector<typename ScoreBlock<Scalar>::Bound> blocks;
        ConvVars score_head;
        std::vector<Var> leaves;
    };

    Bound bind(Tape<Scalar>& t, bool trainable) const {
        Binder<Scalar> binder{t, trainable};
        Bound b;
        for (auto& blk : blocks) b.blocks.push_back(blk.bind(binder));
        b.score_head = binder.conv(score_head);
        b.leaves = std::move(binder.leaves);
        return b;
    }

    // first_input at H, sides at H/2 .. H/2^L; score map at H/2^(L+1)
    Var score(Tape<Scalar>& t, const Bound& b, Var first_input, const std::vector<Var>& sides,
              const NormMode& mode) {
        const Shape fs = t.shape(first_input);
        if (multiscale && static_cast<int>(sides.size()) != scales)
            throw Error("discriminator",
                        "decoder score net expects " + std::to_string(scales) + " side inputs, got " +
                            std::to_string(sides.size()));
        Var f = blocks[0].forward(t, b.blocks[0], first_input, mode);
        for (int j = 1; j <= scales; ++j) {
            if (multiscale) {
                detail::check_side_resolution("decoder score net", t.shape(sides[j - 1]), fs.h >> j,
                                              fs.w >> j, j);
                f = concat_channels(t, f, sides[j - 1]);
            }
            f = blocks[j].forward(t, b.blocks[j], f, mode);
        }
        return apply_conv(t, f, score_head, b.score_head);
    }
};

// Score network over the encoder side. The full-resolution block is omitted
// (that input is always real); the finest pyramid level enters block 1
// directly and the rest are concatenated like in the decoder net.
template <typename Scalar>
struct EncoderScoreNet {
    int scales = 4;
    int base_channels = 64;
    int side_channels = 1;

    std::vector<ScoreBlock<Scalar>> blocks; // block 1..L (index 0..L-1)
    ConvParam<Scalar> score_head;

    int block_channels(int j) const { return channels_at_depth(base_channels, j - 1); } // j = 1..L

    EncoderScoreNet() = default;
    EncoderScoreNet(int L, int base, int side_c)
        : scales(L), base_channels(base), side_channels(side_c) {
        blocks.resize(L);
        for (int j = 1; j <= L; ++j) {
            const int in_c = j == 1 ? side_channels : block_channels(j - 1) + side_channels;
            blocks[j - 1].configure(in_c, block_channels(j), /*norm_on_first=*/j != 1);
        }
        score_head.configure(block_channels(L), 1, 4, 1);
    }

    void init_params(SeededRng& rng, double stddev) {
        for (auto& blk : blocks) blk.init(rng, stddev);
        score_head.init(rng, stddev);
    }

    void collect(std::vector<ParamRef<Scalar>>& out) {
        for (size_t j = 0; j < blocks.size(); ++j)
            blocks[j].collect("block" + std::to_string(j + 1), out);
        score_head.collect("score_head", out);
    }

    struct Bound {
        std::vector<typename ScoreBlock<Scalar>::Bound> blocks;
        ConvVars score_head;
        std::vector<Var> leaves;
    };

    Bound bind(Tape<Scalar>& t, bool trainable) const {
        Binder<Scalar> binder{t, trainable};
        Bound b;
        for (auto& blk : blocks) b.blocks.push_back(blk.bind(binder));
        b.score_head = binder.conv(score_head);
        b.leaves = std::move(binder.leaves);
        return b;
    }

    // sides at H/2 .. H/2^L (H = the generator's input resolution); score map
    // at H/2^(L+1)
    Var score(Tape<Scalar>& t, const Bound& b, const std::vector<Var>& sides, const NormMode& mode) {
        if (static_cast<int>(sides.size()) != scales)
            throw Error("discriminator",
                        "encoder score net expects " + std::to_string(scales) + " side inputs, got " +
                            std::to_string(sides.size()));
        const Shape s0 = t.shape(sides[0]);
        const int full_h = s0.h * 2, full_w = s0.w * 2;
        Var f;
        for (int j = 1; j <= scales; ++j) {
            detail::check_side_resolution("encoder score net", t.shape(sides[j - 1]), full_h >> j,
                                          full_w >> j, j);
            Var in = j == 1 ? sides[0] : concat_channels(t, f, sides[j - 1]);
            f = blocks[j - 1].forward(t, b.blocks[j - 1], in, mode);
        }
        return apply_conv(t, f, score_head, b.score_head);
    }
};

// Value-level scoring used by the shape tests and diagnostics.
namespace detail {

// [level][sample] tape constants from per-sample pyramids; the level count is
// whatever the pyramids carry, the score nets validate it.
template <typename Scalar>
std::vector<Var> pyramid_side_vars(Tape<Scalar>& t, const std::vector<ScalePyramid<Scalar>>& pyrs) {
    if (pyrs.empty()) throw Error("discriminator", "no side-input pyramids given");
    std::vector<Var> side_vars;
    for (size_t s = 0; s < pyrs.front().levels.size(); ++s) {
        std::vector<Image<Scalar>> level;
        for (const auto& pyr : pyrs) {
            if (pyr.levels.size() != pyrs.front().levels.size())
                throw Error("discriminator", "side-input pyramids have mixed depths");
            level.push_back(pyr.levels[s]);
        }
        side_vars.push_back(batch_constant(t, level));
    }
    return side_vars;
}

} // namespace detail

template <typename Scalar>
std::vector<Image<Scalar>> score_dis_d(DecoderScoreNet<Scalar>& net,
                                       const std::vector<Image<Scalar>>& first,
                                       const std::vector<ScalePyramid<Scalar>>& sides) {
    Tape<Scalar> t;
    auto bound = net.bind(t, false);
    Var first_v = batch_constant(t, first);
    std::vector<Var> side_vars = detail::pyramid_side_vars(t, sides);
    NormMode mode;
    mode.update_running = false;
    Var score = net.score(t, bound, first_v, side_vars, mode);
    return unpack_batch(t, score);
}

template <typename Scalar>
std::vector<Image<Scalar>> score_dis_e(EncoderScoreNet<Scalar>& net,
                                       const std::vector<ScalePyramid<Scalar>>& sides) {
    Tape<Scalar> t;
    auto bound = net.bind(t, false);
    std::vector<Var> side_vars = detail::pyramid_side_vars(t, sides);
    NormMode mode;
    mode.update_running = false;
    Var score = net.score(t, bound, side_vars, mode);
    return unpack_batch(t, score);
}

} // namespace msgdd

#endif
