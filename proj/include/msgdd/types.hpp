#ifndef MSGDD_TYPES_HPP
#define MSGDD_TYPES_HPP

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace msgdd {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// All library errors carry a "module: message" text so CLI failures point at
// the subsystem that rejected the input.
class Error : public std::runtime_error {
public:
    Error(const std::string& module, const std::string& message)
        : std::runtime_error(module + ": " + message) {}
};

// Batched tensor extent, NCHW.
struct Shape {
    int n = 0, c = 0, h = 0, w = 0;

    Eigen::Index count() const {
        return static_cast<Eigen::Index>(n) * c * h * w;
    }
    Eigen::Index per_sample() const { return static_cast<Eigen::Index>(c) * h * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }
};

// One raster in [-1, 1]. Planes are stored channel-major: index (c, y, x) is
// c*h*w + y*w + x.
template <typename Scalar>
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    ArrayX<Scalar> values;

    Image() = default;
    Image(int h, int w, int c)
        : height(h), width(w), channels(c), values(ArrayX<Scalar>::Zero(Eigen::Index(h) * w * c)) {}

    Eigen::Index size() const { return static_cast<Eigen::Index>(height) * width * channels; }
    Scalar& at(int c, int y, int x) { return values[(Eigen::Index(c) * height + y) * width + x]; }
    Scalar at(int c, int y, int x) const { return values[(Eigen::Index(c) * height + y) * width + x]; }

    bool finite() const { return values.isFinite().all(); }

    void require_valid(const std::string& module) const {
        if (height < 1 || width < 1 || channels < 1)
            throw Error(module, "image has empty extent " + std::to_string(height) + "x" +
                                    std::to_string(width) + "x" + std::to_string(channels));
        if (values.size() != size())
            throw Error(module, "image buffer size does not match extent");
        if (!finite()) throw Error(module, "image contains non-finite values");
    }
};

using ImageF = Image<float>;
using ImageD = Image<double>;

template <typename To, typename From>
Image<To> image_cast(const Image<From>& im) {
    Image<To> out(im.height, im.width, im.channels);
    out.values = im.values.template cast<To>();
    return out;
}

// Ordered list of images at resolutions H/2^1 .. H/2^L, constant channel count.
template <typename Scalar>
struct ScalePyramid {
    std::vector<Image<Scalar>> levels;

    int depth() const { return static_cast<int>(levels.size()); }

    void require_valid(const std::string& module) const {
        if (levels.empty()) throw Error(module, "pyramid has no levels");
        for (size_t s = 0; s < levels.size(); ++s) {
            levels[s].require_valid(module);
            if (s > 0) {
                if (levels[s].height * 2 != levels[s - 1].height ||
                    levels[s].width * 2 != levels[s - 1].width)
                    throw Error(module, "pyramid level " + std::to_string(s + 1) +
                                            " is not half of the previous level");
                if (levels[s].channels != levels[0].channels)
                    throw Error(module, "pyramid channel count changes across levels");
            }
        }
    }
};

// Encoder channel schedule: base * {1, 2, 4, 8, 8, ...}, capped at 8x base.
inline int channels_at_depth(int base_channels, int depth_index) {
    int mult = 1;
    for (int i = 0; i < depth_index && mult < 8; ++i) mult *= 2;
    return base_channels * mult;
}

inline bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

} // namespace msgdd

#endif
