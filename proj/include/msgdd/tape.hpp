#ifndef MSGDD_TAPE_HPP
#define MSGDD_TAPE_HPP

#include "msgdd/types.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace msgdd {

// Handle into a Tape. Ops capture Var ids, never node references: the node
// vector reallocates as the graph grows.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

template <typename Scalar>
class Tape;

template <typename Scalar>
struct TapeNode {
    Shape shape;
    ArrayX<Scalar> value;
    ArrayX<Scalar> grad; // allocated only when requires_grad
    bool requires_grad = false;
    std::function<void(Tape<Scalar>&)> backprop; // empty for leaves and constants
};

// Dynamic tape: nodes are appended in forward order, backward() replays the
// recorded closures in reverse. One tape per optimization phase; cleared (or
// dropped) afterwards.
template <typename Scalar>
class Tape {
public:
    Var constant(const Shape& s, ArrayX<Scalar> v) { return push(s, std::move(v), false); }
    Var leaf(const Shape& s, ArrayX<Scalar> v) { return push(s, std::move(v), true); }
    Var alloc(const Shape& s, bool requires_grad) {
        return push(s, ArrayX<Scalar>::Zero(s.count()), requires_grad);
    }

    TapeNode<Scalar>& node(Var v) { return nodes_[static_cast<size_t>(v.id)]; }
    const TapeNode<Scalar>& node(Var v) const { return nodes_[static_cast<size_t>(v.id)]; }

    ArrayX<Scalar>& val(Var v) { return node(v).value; }
    const ArrayX<Scalar>& val(Var v) const { return node(v).value; }
    ArrayX<Scalar>& grad(Var v) { return node(v).grad; }
    const Shape& shape(Var v) const { return node(v).shape; }
    bool requires_grad(Var v) const { return node(v).requires_grad; }

    void set_backprop(Var v, std::function<void(Tape<Scalar>&)> fn) {
        node(v).backprop = std::move(fn);
    }

    // Seeds d(root)/d(root) = 1 and sweeps the tape in reverse creation order.
    void backward(Var root) {
        TapeNode<Scalar>& r = node(root);
        if (r.shape.count() != 1) throw Error("autodiff", "backward root must be a scalar");
        if (!r.requires_grad) throw Error("autodiff", "backward root does not require grad");
        r.grad[0] = Scalar(1);
        for (int i = root.id; i >= 0; --i) {
            TapeNode<Scalar>& nd = nodes_[static_cast<size_t>(i)];
            if (nd.requires_grad && nd.backprop) nd.backprop(*this);
        }
    }

    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    Var push(const Shape& s, ArrayX<Scalar> v, bool requires_grad) {
        if (v.size() != s.count())
            throw Error("autodiff", "node buffer does not match shape " + s.str());
        TapeNode<Scalar> n;
        n.shape = s;
        n.value = std::move(v);
        n.requires_grad = requires_grad;
        if (requires_grad) n.grad = ArrayX<Scalar>::Zero(s.count());
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    std::vector<TapeNode<Scalar>> nodes_;
};

} // namespace msgdd

#endif
