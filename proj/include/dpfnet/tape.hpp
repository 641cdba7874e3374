#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dpfnet/tensor.hpp"

namespace dpfnet {

template <class S>
using GradMap = std::map<std::string, TensorT<S>>;

// Reverse-mode tape. Ops executed on tensors carrying a node handle append
// one node each; nodes are topologically ordered by construction, so the
// backward sweep is a single reverse pass over the node list. A tape is
// single-owner: record and consume it from one logical thread.
template <class S>
class GradTapeT {
public:
    using BackFn = std::function<void(GradTapeT&, const std::vector<S>&)>;

    GradTapeT() = default;
    GradTapeT(const GradTapeT&) = delete;
    GradTapeT& operator=(const GradTapeT&) = delete;
    ~GradTapeT() { detach_watched(); }

    // Registers `t` as a named leaf. The handle written into `t` stays valid
    // until the tape is destroyed or detach_watched() runs; `t` must outlive
    // the tape.
    void watch(TensorT<S>& t, std::string name) {
        if (t.tape && t.tape != this) throw std::logic_error("watch: tensor already belongs to another tape");
        require_open("watch");
        t.tape = this;
        t.node = record(t.shape, nullptr);
        watched_.push_back(Watched{&t, std::move(name), t.node});
    }

    int record(Shape out_shape, BackFn back) {
        require_open("record");
        nodes_.push_back(Node{std::move(out_shape), std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void accumulate(int node, const std::vector<S>& g) { accumulate(node, g.data(), static_cast<std::int64_t>(g.size())); }

    void accumulate(int node, const S* g, std::int64_t n) {
        if (node < 0) return;
        auto& buf = grads_[static_cast<std::size_t>(node)];
        if (buf.empty()) buf.assign(static_cast<std::size_t>(numel_of(nodes_[static_cast<std::size_t>(node)].shape)), S(0));
        for (std::int64_t i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(i)];
    }

    // Mutable zero-initialized gradient buffer for `node`; lets backward
    // closures scatter in place instead of building a temporary.
    std::vector<S>* grad_buffer(int node) {
        if (node < 0) return nullptr;
        auto& buf = grads_[static_cast<std::size_t>(node)];
        if (buf.empty()) buf.assign(static_cast<std::size_t>(numel_of(nodes_[static_cast<std::size_t>(node)].shape)), S(0));
        return &buf;
    }

    // Runs the reverse sweep from a scalar loss and returns accumulated
    // gradients for every watched leaf (zero tensors for unreached leaves).
    // The tape is consumed: no further recording or backward calls.
    GradMap<S> backward(const TensorT<S>& loss) {
        if (loss.tape != this || loss.node < 0)
            throw std::logic_error("backward: loss was not produced under this tape");
        if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
        require_open("backward");
        consumed_ = true;

        grads_.assign(nodes_.size(), {});
        grads_[static_cast<std::size_t>(loss.node)].assign(1, S(1));
        for (int i = loss.node; i >= 0; --i) {
            auto& node = nodes_[static_cast<std::size_t>(i)];
            auto& g = grads_[static_cast<std::size_t>(i)];
            if (g.empty() || !node.back) continue;
            node.back(*this, g);
            g.clear();  // interior grads are no longer needed
            g.shrink_to_fit();
        }

        GradMap<S> out;
        for (const auto& w : watched_) {
            auto& g = grads_[static_cast<std::size_t>(w.node)];
            TensorT<S> t(nodes_[static_cast<std::size_t>(w.node)].shape);
            if (!g.empty()) t.data = std::move(g);
            out.emplace(w.name, std::move(t));
        }
        detach_watched();
        return out;
    }

    bool consumed() const { return consumed_; }
    std::size_t node_count() const { return nodes_.size(); }

    void detach_watched() {
        for (auto& w : watched_) {
            if (w.tensor->tape == this) {
                w.tensor->tape = nullptr;
                w.tensor->node = -1;
            }
        }
        watched_.clear();
    }

private:
    struct Node {
        Shape shape;
        BackFn back;  // null for leaves
    };
    struct Watched {
        TensorT<S>* tensor;
        std::string name;
        int node;
    };

    void require_open(const char* what) const {
        if (consumed_) throw std::logic_error(std::string(what) + ": tape already consumed by backward");
    }

    std::vector<Node> nodes_;
    std::vector<std::vector<S>> grads_;  // sized by backward()
    std::vector<Watched> watched_;
    bool consumed_ = false;
};

using GradTape = GradTapeT<float>;

// Resolves the tape shared by a set of op inputs (null when untracked).
template <class S>
inline GradTapeT<S>* tape_of(std::initializer_list<const TensorT<S>*> inputs) {
    GradTapeT<S>* tape = nullptr;
    for (const TensorT<S>* t : inputs) {
        if (!t->tape) continue;
        if (tape && tape != t->tape) throw std::invalid_argument("op inputs belong to different tapes");
        tape = t->tape;
    }
    return tape;
}

template <class S>
inline int node_of(const TensorT<S>& t, const GradTapeT<S>* tape) {
    return (t.tape && t.tape == tape) ? t.node : -1;
}

}  // namespace dpfnet
