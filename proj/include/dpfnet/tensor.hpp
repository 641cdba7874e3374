#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpfnet {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel_of(const Shape& s) {
    std::int64_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

template <class S>
class GradTapeT;

// Dense row-major N-d array. Image-like data is [N,C,H,W]. `tape`/`node`
// form the optional handle into the gradient tape that is tracking this
// value; plain storage tensors leave them unset.
template <class S>
struct TensorT {
    Shape shape;
    std::vector<S> data;
    GradTapeT<S>* tape = nullptr;
    int node = -1;

    TensorT() = default;

    explicit TensorT(Shape sh, S fill = S(0))
        : shape(std::move(sh)), data(static_cast<std::size_t>(numel_of(shape)), fill) {}

    TensorT(Shape sh, std::vector<S> values) : shape(std::move(sh)), data(std::move(values)) {
        if (static_cast<std::int64_t>(data.size()) != numel_of(shape))
            throw std::invalid_argument("tensor data length does not match shape " + shape_str(shape));
    }

    static TensorT scalar(S v) { return TensorT(Shape{}, std::vector<S>{v}); }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    std::int64_t dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

    S item() const {
        if (numel() != 1) throw std::invalid_argument("item() on tensor with numel " + std::to_string(numel()));
        return data[0];
    }

    S& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
        return data[static_cast<std::size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    S at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return data[static_cast<std::size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }

    // copy without the tape handle
    TensorT detached() const {
        TensorT t;
        t.shape = shape;
        t.data = data;
        return t;
    }

    bool all_finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <class T>
    TensorT<T> cast() const {
        TensorT<T> t;
        t.shape = shape;
        t.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) t.data[i] = static_cast<T>(data[i]);
        return t;
    }
};

using Tensor = TensorT<float>;

template <class S>
inline void require_same_shape(const TensorT<S>& a, const TensorT<S>& b, const char* what) {
    if (a.shape != b.shape)
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                                    shape_str(b.shape));
}

template <class S>
inline void require_rank(const TensorT<S>& t, int r, const char* what) {
    if (t.rank() != r)
        throw std::invalid_argument(std::string(what) + ": expected rank " + std::to_string(r) + ", got " +
                                    shape_str(t.shape));
}

}  // namespace dpfnet
