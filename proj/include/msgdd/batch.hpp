#ifndef MSGDD_BATCH_HPP
#define MSGDD_BATCH_HPP

#include "msgdd/tape.hpp"

#include <vector>

namespace msgdd {

// Flattens same-extent images into one NCHW buffer.
template <typename Scalar>
std::pair<Shape, ArrayX<Scalar>> pack_batch(const std::vector<Image<Scalar>>& images) {
    if (images.empty()) throw Error("core", "cannot pack an empty batch");
    const Image<Scalar>& first = images.front();
    Shape s{static_cast<int>(images.size()), first.channels, first.height, first.width};
    ArrayX<Scalar> flat(s.count());
    for (size_t n = 0; n < images.size(); ++n) {
        const Image<Scalar>& im = images[n];
        if (im.height != first.height || im.width != first.width || im.channels != first.channels)
            throw Error("core", "batch images have mixed extents");
        flat.segment(static_cast<Eigen::Index>(n) * s.per_sample(), s.per_sample()) = im.values;
    }
    return {s, std::move(flat)};
}

template <typename Scalar>
Var batch_constant(Tape<Scalar>& t, const std::vector<Image<Scalar>>& images) {
    auto [shape, flat] = pack_batch(images);
    return t.constant(shape, std::move(flat));
}

template <typename Scalar>
Image<Scalar> unpack_sample(const Tape<Scalar>& t, Var v, int n) {
    const Shape s = t.shape(v);
    Image<Scalar> im(s.h, s.w, s.c);
    im.values = t.val(v).segment(static_cast<Eigen::Index>(n) * s.per_sample(), s.per_sample());
    return im;
}

template <typename Scalar>
std::vector<Image<Scalar>> unpack_batch(const Tape<Scalar>& t, Var v) {
    const Shape s = t.shape(v);
    std::vector<Image<Scalar>> out;
    out.reserve(s.n);
    for (int n = 0; n < s.n; ++n) out.push_back(unpack_sample(t, v, n));
    return out;
}

} // namespace msgdd

#endif
