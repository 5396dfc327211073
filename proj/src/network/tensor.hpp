#pragma once

#include <cstddef>
#include <vector>

#include "common/error.hpp"

namespace cseg::net {

// Dense (batch, channels, height, width) tensor. Feature vectors ride along
// as (batch, features, 1, 1) so batch-norm and the dense layers share one
// channel convention.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_) {
        if (n_ <= 0 || c_ <= 0 || h_ <= 0 || w_ <= 0)
            throw_invalid("tensor dimensions must be positive");
        v.assign(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill);
    }

    std::size_t index(int s, int ci, int y, int x) const {
        return ((static_cast<std::size_t>(s) * c + ci) * h + y) * w + x;
    }
    T& at(int s, int ci, int y, int x) { return v[index(s, ci, y, x)]; }
    T at(int s, int ci, int y, int x) const { return v[index(s, ci, y, x)]; }

    T* sample(int s) { return v.data() + static_cast<std::size_t>(s) * c * h * w; }
    const T* sample(int s) const { return v.data() + static_cast<std::size_t>(s) * c * h * w; }

    std::size_t size() const { return v.size(); }
    std::size_t per_sample() const { return static_cast<std::size_t>(c) * h * w; }
    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    /// Reinterprets (n, c, h, w) as (n, c*h*w, 1, 1); storage order is shared.
    Tensor4 flattened() const {
        Tensor4 out;
        out.n = n;
        out.c = c * h * w;
        out.h = 1;
        out.w = 1;
        out.v = v;
        return out;
    }
};

}  // namespace cseg::net
