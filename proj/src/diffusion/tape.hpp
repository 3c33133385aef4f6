#pragma once

#include <deque>
#include <functional>

#include "diffusion/tensor.hpp"

namespace linecolor {

struct Var {
    int i = -1;
};

// Eager reverse-mode autodiff over Tensor ops. Nodes are appended in forward
// order; backward() runs closures in reverse creation order. Gradients are
// allocated lazily, so subgraphs without differentiable parents cost nothing.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var input(Tensor value);                               // constant leaf
    Var param(const Tensor& value, Tensor* grad_sink);     // leaf accumulating into grad_sink

    // w: [out_ch, in_ch, kh, kw], b: [1, out_ch, 1, 1]. Applied per frame.
    Var conv2d(Var x, Var w, Var b, int stride, int pad);
    // [T,C,H,W] -> [T,3C,H,W]: channels of frames t-1, t, t+1 (zero outside range).
    Var gather3(Var x);
    Var group_norm(Var x, Var gamma, Var beta, int groups);
    Var silu(Var x);
    Var add(Var a, Var b);
    Var scale(Var x, double s);
    Var add_channel_bias(Var x, Var bias);  // bias [1,C,1,1], broadcast over t,h,w
    Var concat_channels(Var a, Var b);
    Var upsample2x(Var x);                  // nearest neighbour
    Var replicate_frames(Var x, int t);     // [1,C,H,W] -> [t,C,H,W]
    // x: [1,in,1,1], w: [out,in,1,1], b: [1,out,1,1] -> [1,out,1,1]
    Var linear(Var x, Var w, Var b);
    // Single-head scaled dot-product attention with 1x1 qkv/out projections.
    // temporal=false: tokens are the H*W pixels of each frame.
    // temporal=true: tokens are the T frames at each pixel.
    Var attention(Var x, Var wq, Var bq, Var wk, Var bk, Var wv, Var bv, Var wo, Var bo,
                  bool temporal);
    Var mse(Var a, Var b);  // scalar [1,1,1,1], mean squared difference

    const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v.i)].val; }
    Tensor& grad(Var v);
    bool needs_grad(Var v) const { return nodes_[static_cast<size_t>(v.i)].needs; }
    void backward(Var loss);

private:
    struct Node {
        Tensor val;
        Tensor grad;  // empty until touched
        std::function<void()> back;
        bool needs = false;
    };

    std::deque<Node> nodes_;
    Node& node(Var v) { return nodes_[static_cast<size_t>(v.i)]; }
    const Node& node(Var v) const { return nodes_[static_cast<size_t>(v.i)]; }
    Var push(Tensor val, bool needs);
};

}  // namespace linecolor
