#ifndef MSGDD_DATASET_HPP
#define MSGDD_DATASET_HPP

#include "msgdd/pngio.hpp"
#include "msgdd/rng.hpp"
#include "msgdd/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace msgdd {

template <typename Scalar>
struct PairedSample {
    Image<Scalar> input;  // domain A (ultrasound / synthetic texture)
    Image<Scalar> target; // domain B (mask, values in {-1, +1})
    std::string id;
};

struct DatasetManifest {
    std::string root;
    int train_count = 699;
    int val_count = 100;
    int test_count = 200;
    int resize_target = 256;
};

template <typename Scalar>
struct DatasetSplits {
    std::vector<PairedSample<Scalar>> train, val, test;
};

// ---------------------------------------------------------------------------
// pixel conversions and resampling
// ---------------------------------------------------------------------------

template <typename Scalar>
Image<Scalar> image_from_bytes(const RawImage& raw) {
    Image<Scalar> im(raw.height, raw.width, 1);
    for (Eigen::Index i = 0; i < im.values.size(); ++i)
        im.values[i] = static_cast<Scalar>(raw.data[static_cast<size_t>(i)] / 127.5 - 1.0);
    return im;
}

template <typename Scalar>
std::vector<std::uint8_t> bytes_from_image(const Image<Scalar>& im, int channel = 0) {
    std::vector<std::uint8_t> out(static_cast<size_t>(im.height) * im.width);
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x) {
            double v = (static_cast<double>(im.at(channel, y, x)) + 1.0) * 127.5;
            out[static_cast<size_t>(y) * im.width + x] =
                static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5);
        }
    return out;
}

template <typename Scalar>
Image<Scalar> binarize(const Image<Scalar>& im, Scalar threshold = Scalar(0)) {
    Image<Scalar> out = im;
    out.values = (im.values > threshold).select(ArrayX<Scalar>::Constant(im.values.size(), Scalar(1)),
                                                ArrayX<Scalar>::Constant(im.values.size(), Scalar(-1)));
    return out;
}

template <typename Scalar>
Image<Scalar> pad_to_square(const Image<Scalar>& im, Scalar fill) {
    if (im.height == im.width) return im;
    const int side = std::max(im.height, im.width);
    Image<Scalar> out(side, side, im.channels);
    out.values.setConstant(fill);
    const int off_y = (side - im.height) / 2;
    const int off_x = (side - im.width) / 2;
    for (int c = 0; c < im.channels; ++c)
        for (int y = 0; y < im.height; ++y)
            for (int x = 0; x < im.width; ++x) out.at(c, y + off_y, x + off_x) = im.at(c, y, x);
    return out;
}

namespace detail {

// 1-D interval-overlap resample along the leading axis of a (len x lanes)
// row-major view. Exact box integration, so constants stay constant.
template <typename Scalar>
void resample_axis(const Scalar* src, int src_len, int lanes, Scalar* dst, int dst_len) {
    const double ratio = static_cast<double>(src_len) / dst_len;
    for (int o = 0; o < dst_len; ++o) {
        const double lo = o * ratio;
        const double hi = (o + 1) * ratio;
        for (int l = 0; l < lanes; ++l) dst[o * lanes + l] = Scalar(0);
        int i0 = static_cast<int>(std::floor(lo));
        int i1 = std::min(static_cast<int>(std::ceil(hi)), src_len);
        for (int i = i0; i < i1; ++i) {
            const double weight = (std::min<double>(i + 1, hi) - std::max<double>(i, lo)) / ratio;
            for (int l = 0; l < lanes; ++l)
                dst[o * lanes + l] += static_cast<Scalar>(weight) * src[i * lanes + l];
        }
    }
}

} // namespace detail

// Box-filter (area) resize; used for the dataset downscale path.
template <typename Scalar>
Image<Scalar> resize_area(const Image<Scalar>& im, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw Error("data", "resize target must be positive");
    Image<Scalar> out(out_h, out_w, im.channels);
    std::vector<Scalar> mid(static_cast<size_t>(im.height) * out_w);
    for (int c = 0; c < im.channels; ++c) {
        const Scalar* plane = im.values.data() + static_cast<Eigen::Index>(c) * im.height * im.width;
        // horizontal: every row is a (width x 1) run
        for (int y = 0; y < im.height; ++y)
            detail::resample_axis(plane + static_cast<size_t>(y) * im.width, im.width, 1,
                                  mid.data() + static_cast<size_t>(y) * out_w, out_w);
        // vertical: columns move in lockstep (lanes = out_w)
        detail::resample_axis(mid.data(), im.height, out_w,
                              out.values.data() + static_cast<Eigen::Index>(c) * out_h * out_w, out_h);
    }
    return out;
}

// ---------------------------------------------------------------------------
// pyramids
// ---------------------------------------------------------------------------

template <typename Scalar>
Image<Scalar> avgpool2x2(const Image<Scalar>& im) {
    if (im.height % 2 != 0 || im.width % 2 != 0)
        throw Error("data", "cannot average-pool odd extent " + std::to_string(im.height) + "x" +
                                std::to_string(im.width));
    Image<Scalar> out(im.height / 2, im.width / 2, im.channels);
    for (int c = 0; c < im.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                out.at(c, y, x) = (im.at(c, 2 * y, 2 * x) + im.at(c, 2 * y, 2 * x + 1) +
                                   im.at(c, 2 * y + 1, 2 * x) + im.at(c, 2 * y + 1, 2 * x + 1)) /
                                  Scalar(4);
    return out;
}

// Levels 1..levels at H/2^s by repeated 2x2 average pooling.
template <typename Scalar>
ScalePyramid<Scalar> build_pyramid(const Image<Scalar>& im, int levels) {
    const int div = 1 << levels;
    if (im.height % div != 0 || im.width % div != 0)
        throw Error("data", "resolution " + std::to_string(im.height) + "x" + std::to_string(im.width) +
                                " not divisible by 2^" + std::to_string(levels));
    ScalePyramid<Scalar> pyr;
    Image<Scalar> cur = im;
    for (int s = 0; s < levels; ++s) {
        cur = avgpool2x2(cur);
        pyr.levels.push_back(cur);
    }
    return pyr;
}

// Channel adapter for mixed-channel discriminator feeds: averages down to one
// channel, then replicates up to the requested count.
template <typename Scalar>
Image<Scalar> project_channels(const Image<Scalar>& im, int target_channels) {
    if (im.channels == target_channels) return im;
    Image<Scalar> mono(im.height, im.width, 1);
    const Eigen::Index plane = static_cast<Eigen::Index>(im.height) * im.width;
    mono.values.setZero();
    for (int c = 0; c < im.channels; ++c) mono.values += im.values.segment(c * plane, plane);
    mono.values /= Scalar(im.channels);
    if (target_channels == 1) return mono;
    Image<Scalar> out(im.height, im.width, target_channels);
    for (int c = 0; c < target_channels; ++c) out.values.segment(c * plane, plane) = mono.values;
    return out;
}

// ---------------------------------------------------------------------------
// augmentation
// ---------------------------------------------------------------------------

struct AugmentTransform {
    bool hflip = false, vflip = false;
    bool affine = false;
    double rot = 0;   // radians
    double scale = 1; // isotropic
    double tx = 0, ty = 0; // pixels

    bool identity() const { return !hflip && !vflip && !affine; }

    template <typename Scalar>
    Image<Scalar> apply(const Image<Scalar>& im, Scalar fill, bool rebinarize) const {
        Image<Scalar> flipped = im;
        if (hflip || vflip) {
            for (int c = 0; c < im.channels; ++c)
                for (int y = 0; y < im.height; ++y)
                    for (int x = 0; x < im.width; ++x)
                        flipped.at(c, y, x) =
                            im.at(c, vflip ? im.height - 1 - y : y, hflip ? im.width - 1 - x : x);
        }
        if (!affine) return rebinarize ? binarize(flipped) : flipped;

        Image<Scalar> out(im.height, im.width, im.channels);
        const double cy = (im.height - 1) / 2.0, cx = (im.width - 1) / 2.0;
        const double cos_r = std::cos(-rot), sin_r = std::sin(-rot);
        for (int y = 0; y < im.height; ++y)
            for (int x = 0; x < im.width; ++x) {
                const double dx = (x - tx) - cx, dy = (y - ty) - cy;
                const double sx = cx + (cos_r * dx - sin_r * dy) / scale;
                const double sy = cy + (sin_r * dx + cos_r * dy) / scale;
                const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
                const double fx = sx - x0, fy = sy - y0;
                for (int c = 0; c < im.channels; ++c) {
                    auto sample = [&](int yy, int xx) -> double {
                        if (yy < 0 || yy >= im.height || xx < 0 || xx >= im.width)
                            return static_cast<double>(fill);
                        return static_cast<double>(flipped.at(c, yy, xx));
                    };
                    const double v = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                                     fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
                    out.at(c, y, x) = static_cast<Scalar>(v);
                }
            }
        return rebinarize ? binarize(out) : out;
    }
};

template <typename Scalar>
struct AugmentResult {
    PairedSample<Scalar> sample;
    AugmentTransform transform;
};

// The same geometric transform is applied to input and mask; the mask is
// re-binarized after resampling. Draw order from the stream is fixed:
// hflip, vflip, rot, scale, tx, ty.
template <typename Scalar>
AugmentResult<Scalar> augment(const PairedSample<Scalar>& sample, SeededRng& rng,
                              const std::string& policy) {
    AugmentResult<Scalar> res;
    res.sample.id = sample.id;
    if (policy != "none" && policy != "flips" && policy != "flips_affine")
        throw Error("data", "unknown augmentation policy '" + policy + "'");
    if (policy != "none") {
        res.transform.hflip = rng.uniform() < 0.5;
        res.transform.vflip = rng.uniform() < 0.5;
    }
    if (policy == "flips_affine") {
        res.transform.affine = true;
        res.transform.rot = rng.uniform(-10.0, 10.0) * M_PI / 180.0;
        res.transform.scale = rng.uniform(0.93, 1.07);
        res.transform.tx = rng.uniform(-0.04, 0.04) * sample.input.width;
        res.transform.ty = rng.uniform(-0.04, 0.04) * sample.input.height;
    }
    if (res.transform.identity()) {
        res.sample = sample;
        return res;
    }
    res.sample.input = res.transform.apply(sample.input, Scalar(-1), /*rebinarize=*/false);
    res.sample.target = res.transform.apply(sample.target, Scalar(-1), /*rebinarize=*/true);
    return res;
}

// ---------------------------------------------------------------------------
// synthetic ellipse dataset
// ---------------------------------------------------------------------------

inline std::string format_fraction(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// Desk-scale stand-in: a bright elliptical ring over a noisy low-frequency
// texture as the input, the filled ellipse as the mask.
template <typename Scalar>
std::vector<PairedSample<Scalar>> synth_shapes(int n, int resolution, std::uint64_t seed) {
    if (n < 1) throw Error("data", "synthetic sample count must be >= 1");
    if (!is_power_of_two(resolution))
        throw Error("data", "synthetic resolution must be a power of two");
    SeededRng rng(derive_seed(seed, 0x53594e5448ULL)); // "SYNTH"
    std::vector<PairedSample<Scalar>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double cx = rng.uniform(0.35, 0.65) * resolution;
        const double cy = rng.uniform(0.35, 0.65) * resolution;
        const double ax = rng.uniform(0.15, 0.32) * resolution;
        const double ay = rng.uniform(0.15, 0.32) * resolution;
        const double phi = rng.uniform(0.0, M_PI);
        const double cos_p = std::cos(phi), sin_p = std::sin(phi);

        double freq_x[3], freq_y[3], phase[3];
        for (int k = 0; k < 3; ++k) {
            freq_x[k] = rng.uniform(1.0, 4.0);
            freq_y[k] = rng.uniform(1.0, 4.0);
            phase[k] = rng.uniform(0.0, 2.0 * M_PI);
        }

        PairedSample<Scalar> sample;
        sample.input = Image<Scalar>(resolution, resolution, 1);
        sample.target = Image<Scalar>(resolution, resolution, 1);
        char id[32];
        std::snprintf(id, sizeof(id), "synth_%05d", i);
        sample.id = id;

        Eigen::Index fg = 0;
        for (int y = 0; y < resolution; ++y)
            for (int x = 0; x < resolution; ++x) {
                const double u = (x - cx), v = (y - cy);
                const double ex = (cos_p * u + sin_p * v) / ax;
                const double ey = (-sin_p * u + cos_p * v) / ay;
                const double radial = std::sqrt(ex * ex + ey * ey);
                double tex = -0.35;
                for (int k = 0; k < 3; ++k)
                    tex += 0.1 * std::sin(2.0 * M_PI *
                                              (freq_x[k] * x / resolution + freq_y[k] * y / resolution) +
                                          phase[k]);
                const double ring = 1.4 * std::exp(-std::pow((radial - 1.0) / 0.08, 2.0));
                const double noise = 0.06 * rng.normal();
                sample.input.at(0, y, x) =
                    static_cast<Scalar>(std::clamp(tex + ring + noise, -1.0, 1.0));
                const bool inside = radial <= 1.0;
                sample.target.at(0, y, x) = inside ? Scalar(1) : Scalar(-1);
                if (inside) ++fg;
            }
        const double fraction = static_cast<double>(fg) / (static_cast<double>(resolution) * resolution);
        if (fraction < 0.05 || fraction > 0.6)
            throw Error("data", "synthetic mask fraction " + format_fraction(fraction) +
                                    " out of range for sample " + sample.id);
        out.push_back(std::move(sample));
    }
    return out;
}

// Writes samples in the on-disk dataset layout (images/ + masks/ PNG pairs).
template <typename Scalar>
void materialize_dataset(const std::string& root, const std::vector<PairedSample<Scalar>>& samples) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(root) / "images");
    fs::create_directories(fs::path(root) / "masks");
    for (const auto& s : samples) {
        const auto img_bytes = bytes_from_image(s.input);
        const auto mask_bytes = bytes_from_image(s.target);
        write_png_gray((fs::path(root) / "images" / (s.id + ".png")).string(), s.input.height,
                       s.input.width, img_bytes.data());
        write_png_gray((fs::path(root) / "masks" / (s.id + ".png")).string(), s.target.height,
                       s.target.width, mask_bytes.data());
    }
}

// ---------------------------------------------------------------------------
// loading
// ---------------------------------------------------------------------------

// Layout: root/images/*.png with mask partners of the same basename under
// root/masks/. Pairs are ordered by basename; the splits take consecutive
// ranges train|val|test and must cover the directory exactly.
template <typename Scalar>
DatasetSplits<Scalar> load_dataset(const DatasetManifest& manifest) {
    namespace fs = std::filesystem;
    const fs::path images = fs::path(manifest.root) / "images";
    const fs::path masks = fs::path(manifest.root) / "masks";
    if (!fs::is_directory(images))
        throw Error("data", "no pairs found in '" + manifest.root + "' (missing images/)");

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(images))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw Error("data", "no pairs found in '" + manifest.root + "'");

    const int total = manifest.train_count + manifest.val_count + manifest.test_count;
    if (static_cast<int>(names.size()) != total)
        throw Error("data", "split-size mismatch: dataset has " + std::to_string(names.size()) +
                                " pairs, splits require " + std::to_string(total));

    auto load_pair = [&](const std::string& name) {
        const fs::path mask_path = masks / name;
        if (!fs::exists(mask_path))
            throw Error("data", "missing mask partner for '" + name + "'");
        PairedSample<Scalar> s;
        s.id = fs::path(name).stem().string();
        Image<Scalar> input = image_from_bytes<Scalar>(read_png_gray((images / name).string()));
        Image<Scalar> target = image_from_bytes<Scalar>(read_png_gray(mask_path.string()));
        if (input.height != target.height || input.width != target.width)
            throw Error("data", "input/mask resolution mismatch for '" + name + "'");
        input = pad_to_square(input, Scalar(-1));
        target = pad_to_square(target, Scalar(-1));
        if (input.height != manifest.resize_target) {
            input = resize_area(input, manifest.resize_target, manifest.resize_target);
            target = resize_area(target, manifest.resize_target, manifest.resize_target);
        }
        s.input = input;
        s.target = binarize(target); // mid-gray threshold in [-1,1] space
        return s;
    };

    DatasetSplits<Scalar> splits;
    for (int i = 0; i < static_cast<int>(names.size()); ++i) {
        PairedSample<Scalar> s = load_pair(names[i]);
        if (i < manifest.train_count)
            splits.train.push_back(std::move(s));
        else if (i < manifest.train_count + manifest.val_count)
            splits.val.push_back(std::move(s));
        else
            splits.test.push_back(std::move(s));
    }
    return splits;
}

} // namespace msgdd

#endif
