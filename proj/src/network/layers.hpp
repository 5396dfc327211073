#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "network/tensor.hpp"

namespace cseg::net {

template <typename T>
struct ConvParams {
    int in_ch = 0, out_ch = 0, k = 0;
    std::vector<T> w;  // (out, in, k, k)
    std::vector<T> b;  // (out)

    static ConvParams make(int in_ch, int out_ch, int k) {
        if (in_ch <= 0 || out_ch <= 0 || k <= 0) throw_invalid("bad conv geometry");
        ConvParams p;
        p.in_ch = in_ch;
        p.out_ch = out_ch;
        p.k = k;
        p.w.assign(static_cast<std::size_t>(out_ch) * in_ch * k * k, T(0));
        p.b.assign(out_ch, T(0));
        return p;
    }
    std::size_t widx(int o, int i, int ky, int kx) const {
        return ((static_cast<std::size_t>(o) * in_ch + i) * k + ky) * k + kx;
    }
};

template <typename T>
struct BnParams {
    int ch = 0;
    T momentum = T(0.1);
    T eps = T(1e-5);
    std::vector<T> gamma, beta, run_mean, run_var;

    static BnParams make(int ch) {
        if (ch <= 0) throw_invalid("bad batch-norm width");
        BnParams p;
        p.ch = ch;
        p.gamma.assign(ch, T(1));
        p.beta.assign(ch, T(0));
        p.run_mean.assign(ch, T(0));
        p.run_var.assign(ch, T(1));
        return p;
    }
};

template <typename T>
struct DenseParams {
    int in_dim = 0, out_dim = 0;
    std::vector<T> w;  // (out, in)
    std::vector<T> b;  // (out)

    static DenseParams make(int in_dim, int out_dim) {
        if (in_dim <= 0 || out_dim <= 0) throw_invalid("bad dense geometry");
        DenseParams p;
        p.in_dim = in_dim;
        p.out_dim = out_dim;
        p.w.assign(static_cast<std::size_t>(out_dim) * in_dim, T(0));
        p.b.assign(out_dim, T(0));
        return p;
    }
};

namespace detail {

// Sample-chunked reduction with a chunk count that depends only on the batch
// size, merged in chunk order: sums are bit-identical for any thread count.
// fn(sample_lo, sample_hi, partial) accumulates into a zeroed buffer of
// `width` doubles.
template <typename Fn>
std::vector<double> chunked_sum(std::size_t samples, int threads, std::size_t width, Fn&& fn) {
    const std::size_t chunks = fixed_chunk_count(samples);
    std::vector<double> partials(chunks * width, 0.0);
    parallel_chunks(samples, threads, chunks, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        fn(lo, hi, partials.data() + c * width);
    });
    std::vector<double> out(width, 0.0);
    for (std::size_t c = 0; c < chunks; ++c) {
        const double* p = partials.data() + c * width;
        for (std::size_t i = 0; i < width; ++i) out[i] += p[i];
    }
    return out;
}

}  // namespace detail

// ---- convolution (valid, no padding) ------------------------------------

template <typename T>
Tensor4<T> conv_forward(const ConvParams<T>& p, const Tensor4<T>& in, int threads = 1) {
    if (in.c != p.in_ch) throw_invalid("conv input channel mismatch");
    const int oh = in.h - p.k + 1, ow = in.w - p.k + 1;
    if (oh <= 0 || ow <= 0) throw_invalid("conv input smaller than the kernel");
    Tensor4<T> out(in.n, p.out_ch, oh, ow);
    parallel_for(0, static_cast<std::size_t>(in.n), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            for (int o = 0; o < p.out_ch; ++o) {
                T* oplane = out.v.data() + out.index(static_cast<int>(s), o, 0, 0);
                std::fill(oplane, oplane + static_cast<std::size_t>(oh) * ow, p.b[o]);
                for (int i = 0; i < p.in_ch; ++i) {
                    const T* iplane = in.v.data() + in.index(static_cast<int>(s), i, 0, 0);
                    for (int ky = 0; ky < p.k; ++ky) {
                        for (int kx = 0; kx < p.k; ++kx) {
                            const T wv = p.w[p.widx(o, i, ky, kx)];
                            for (int y = 0; y < oh; ++y) {
                                const T* irow = iplane + static_cast<std::size_t>(y + ky) * in.w + kx;
                                T* orow = oplane + static_cast<std::size_t>(y) * ow;
                                for (int x = 0; x < ow; ++x) orow[x] += wv * irow[x];
                            }
                        }
                    }
                }
            }
        }
    });
    return out;
}

template <typename T>
void conv_backward(const ConvParams<T>& p, const Tensor4<T>& in, const Tensor4<T>& dout,
                   Tensor4<T>& din, std::vector<T>& dw, std::vector<T>& db, int threads = 1) {
    const int oh = dout.h, ow = dout.w;
    din = Tensor4<T>(in.n, in.c, in.h, in.w);
    parallel_for(0, static_cast<std::size_t>(in.n), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            for (int o = 0; o < p.out_ch; ++o) {
                const T* dplane = dout.v.data() + dout.index(static_cast<int>(s), o, 0, 0);
                for (int i = 0; i < p.in_ch; ++i) {
                    T* gplane = din.v.data() + din.index(static_cast<int>(s), i, 0, 0);
                    for (int ky = 0; ky < p.k; ++ky) {
                        for (int kx = 0; kx < p.k; ++kx) {
                            const T wv = p.w[p.widx(o, i, ky, kx)];
                            for (int y = 0; y < oh; ++y) {
                                T* grow = gplane + static_cast<std::size_t>(y + ky) * in.w + kx;
                                const T* drow = dplane + static_cast<std::size_t>(y) * ow;
                                for (int x = 0; x < ow; ++x) grow[x] += wv * drow[x];
                            }
                        }
                    }
                }
            }
        }
    });

    const std::size_t wsize = p.w.size();
    const std::vector<double> sums = detail::chunked_sum(
        static_cast<std::size_t>(in.n), threads, wsize + p.out_ch,
        [&](std::size_t lo, std::size_t hi, double* partial) {
            for (std::size_t s = lo; s < hi; ++s) {
                for (int o = 0; o < p.out_ch; ++o) {
                    const T* dplane = dout.v.data() + dout.index(static_cast<int>(s), o, 0, 0);
                    double bsum = 0.0;
                    for (std::size_t j = 0; j < static_cast<std::size_t>(oh) * ow; ++j)
                        bsum += static_cast<double>(dplane[j]);
                    partial[wsize + o] += bsum;
                    for (int i = 0; i < p.in_ch; ++i) {
                        const T* iplane = in.v.data() + in.index(static_cast<int>(s), i, 0, 0);
                        for (int ky = 0; ky < p.k; ++ky) {
                            for (int kx = 0; kx < p.k; ++kx) {
                                double acc = 0.0;
                                for (int y = 0; y < oh; ++y) {
                                    const T* irow =
                                        iplane + static_cast<std::size_t>(y + ky) * in.w + kx;
                                    const T* drow = dplane + static_cast<std::size_t>(y) * ow;
                                    for (int x = 0; x < ow; ++x)
                                        acc += static_cast<double>(irow[x]) * drow[x];
                                }
                                partial[p.widx(o, i, ky, kx)] += acc;
                            }
                        }
                    }
                }
            }
        });
    dw.resize(wsize);
    db.resize(p.out_ch);
    for (std::size_t j = 0; j < wsize; ++j) dw[j] = static_cast<T>(sums[j]);
    for (int o = 0; o < p.out_ch; ++o) db[o] = static_cast<T>(sums[wsize + o]);
}

// ---- batch normalization -------------------------------------------------

template <typename T>
struct BnCache {
    std::vector<T> mean, invstd;
    Tensor4<T> xhat;
};

template <typename T>
Tensor4<T> bn_forward_train(BnParams<T>& p, const Tensor4<T>& in, BnCache<T>& cache,
                            int threads = 1) {
    if (in.c != p.ch) throw_invalid("batch-norm channel mismatch");
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    const double m = static_cast<double>(in.n) * plane;

    // Two passes with double partials: stable statistics, and chunk-ordered
    // sums keep them identical under any thread count.
    const std::vector<double> sums = detail::chunked_sum(
        static_cast<std::size_t>(in.n), threads, p.ch,
        [&](std::size_t lo, std::size_t hi, double* partial) {
            for (std::size_t s = lo; s < hi; ++s)
                for (int c = 0; c < p.ch; ++c) {
                    const T* row = in.v.data() + in.index(static_cast<int>(s), c, 0, 0);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < plane; ++j) acc += static_cast<double>(row[j]);
                    partial[c] += acc;
                }
        });
    std::vector<double> mean(p.ch);
    for (int c = 0; c < p.ch; ++c) mean[c] = sums[c] / m;

    const std::vector<double> sqsums = detail::chunked_sum(
        static_cast<std::size_t>(in.n), threads, p.ch,
        [&](std::size_t lo, std::size_t hi, double* partial) {
            for (std::size_t s = lo; s < hi; ++s)
                for (int c = 0; c < p.ch; ++c) {
                    const T* row = in.v.data() + in.index(static_cast<int>(s), c, 0, 0);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < plane; ++j) {
                        const double d = static_cast<double>(row[j]) - mean[c];
                        acc += d * d;
                    }
                    partial[c] += acc;
                }
        });

    cache.mean.resize(p.ch);
    cache.invstd.resize(p.ch);
    for (int c = 0; c < p.ch; ++c) {
        const double var = sqsums[c] / m;  // biased, matching the running stat
        cache.mean[c] = static_cast<T>(mean[c]);
        cache.invstd[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(p.eps)));
        p.run_mean[c] = (T(1) - p.momentum) * p.run_mean[c] + p.momentum * static_cast<T>(mean[c]);
        p.run_var[c] = (T(1) - p.momentum) * p.run_var[c] + p.momentum * static_cast<T>(var);
    }

    cache.xhat = Tensor4<T>(in.n, in.c, in.h, in.w);
    Tensor4<T> out(in.n, in.c, in.h, in.w);
    parallel_for(0, static_cast<std::size_t>(in.n), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s)
            for (int c = 0; c < p.ch; ++c) {
                const T* row = in.v.data() + in.index(static_cast<int>(s), c, 0, 0);
                T* xrow = cache.xhat.v.data() + cache.xhat.index(static_cast<int>(s), c, 0, 0);
                T* orow = out.v.data() + out.index(static_cast<int>(s), c, 0, 0);
                const T mu = cache.mean[c], is = cache.invstd[c];
                const T g = p.gamma[c], be = p.beta[c];
                for (std::size_t j = 0; j < plane; ++j) {
                    xrow[j] = (row[j] - mu) * is;
                    orow[j] = g * xrow[j] + be;
                }
            }
    });
    return out;
}

template <typename T>
Tensor4<T> bn_forward_infer(const BnParams<T>& p, const Tensor4<T>& in, int threads = 1) {
    if (in.c != p.ch) throw_invalid("batch-norm channel mismatch");
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    Tensor4<T> out(in.n, in.c, in.h, in.w);
    parallel_for(0, static_cast<std::size_t>(in.n), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s)
            for (int c = 0; c < p.ch; ++c) {
                const T is = T(1) / std::sqrt(p.run_var[c] + p.eps);
                const T mu = p.run_mean[c], g = p.gamma[c], be = p.beta[c];
                const T* row = in.v.data() + in.index(static_cast<int>(s), c, 0, 0);
                T* orow = out.v.data() + out.index(static_cast<int>(s), c, 0, 0);
                for (std::size_t j = 0; j < plane; ++j) orow[j] = g * (row[j] - mu) * is + be;
            }
    });
    return out;
}

template <typename T>
Tensor4<T> bn_backward(const BnParams<T>& p, const BnCache<T>& cache, const Tensor4<T>& dout,
                       std::vector<T>& dgamma, std::vector<T>& dbeta, int threads = 1) {
    const std::size_t plane = static_cast<std::size_t>(dout.h) * dout.w;
    const double m = static_cast<double>(dout.n) * plane;

    const std::vector<double> sums = detail::chunked_sum(
        static_cast<std::size_t>(dout.n), threads, 2 * static_cast<std::size_t>(p.ch),
        [&](std::size_t lo, std::size_t hi, double* partial) {
            for (std::size_t s = lo; s < hi; ++s)
                for (int c = 0; c < p.ch; ++c) {
                    const T* drow = dout.v.data() + dout.index(static_cast<int>(s), c, 0, 0);
                    const T* xrow =
                        cache.xhat.v.data() + cache.xhat.index(static_cast<int>(s), c, 0, 0);
                    double sd = 0.0, sdx = 0.0;
                    for (std::size_t j = 0; j < plane; ++j) {
                        sd += static_cast<double>(drow[j]);
                        sdx += static_cast<double>(drow[j]) * xrow[j];
                    }
                    partial[c] += sd;
                    partial[p.ch + c] += sdx;
                }
        });

    dgamma.resize(p.ch);
    dbeta.resize(p.ch);
    for (int c = 0; c < p.ch; ++c) {
        dbeta[c] = static_cast<T>(sums[c]);
        dgamma[c] = static_cast<T>(sums[p.ch + c]);
    }

    Tensor4<T> din(dout.n, dout.c, dout.h, dout.w);
    parallel_for(0, static_cast<std::size_t>(dout.n), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s)
            for (int c = 0; c < p.ch; ++c) {
                const T* drow = dout.v.data() + dout.index(static_cast<int>(s), c, 0, 0);
                const T* xrow =
                    cache.xhat.v.data() + cache.xhat.index(static_cast<int>(s), c, 0, 0);
                T* grow = din.v.data() + din.index(static_cast<int>(s), c, 0, 0);
                const T scale = p.gamma[c] * cache.invstd[c];
                const T mean_d = static_cast<T>(sums[c] / m);
                const T mean_dx = static_cast<T>(sums[p.ch + c] / m);
                for (std::size_t j = 0; j < plane; ++j)
                    grow[j] = scale * (drow[j] - mean_d - xrow[j] * mean_dx);
            }
    });
    return din;
}

// ---- activations ---------------------------------------------------------

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& in) {
    Tensor4<T> out = in;
    for (auto& v : out.v) v = v > T(0) ? v : T(0);
    return out;
}

template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& forward_out, const Tensor4<T>& dout) {
    Tensor4<T> din = dout;
    for (std::size_t j = 0; j < din.v.size(); ++j)
        if (!(forward_out.v[j] > T(0))) din.v[j] = T(0);
    return din;
}

// Sigmoid clamped into [1e-7, 1 - 1e-7] so downstream logs stay finite and
// outputs stay strictly inside (0, 1) even in 32-bit.
template <typename T>
Tensor4<T> sigmoid_forward(const Tensor4<T>& in) {
    constexpr T lo = T(1e-7), hi = T(1) - T(1e-7);
    Tensor4<T> out = in;
    for (auto& v : out.v) {
        const T y = v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                              : std::exp(v) / (T(1) + std::exp(v));
        v = std::min(hi, std::max(lo, y));
    }
    return out;
}

// ---- 2x2 max pooling, stride 2 (trailing odd row/column dropped) ---------

struct PoolCache {
    std::vector<std::uint32_t> argmax;  // flat per-sample-plane source index
};

template <typename T>
Tensor4<T> maxpool_forward(const Tensor4<T>& in, PoolCache& cache) {
    const int oh = in.h / 2, ow = in.w / 2;
    if (oh <= 0 || ow <= 0) throw_invalid("pool input smaller than 2x2");
    Tensor4<T> out(in.n, in.c, oh, ow);
    cache.argmax.resize(out.size());
    for (int s = 0; s < in.n; ++s)
        for (int c = 0; c < in.c; ++c)
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x) {
                    T best = in.at(s, c, 2 * y, 2 * x);
                    int by = 2 * y, bx = 2 * x;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const T v = in.at(s, c, 2 * y + dy, 2 * x + dx);
                            if (v > best) {
                                best = v;
                                by = 2 * y + dy;
                                bx = 2 * x + dx;
                            }
                        }
                    out.at(s, c, y, x) = best;
                    cache.argmax[out.index(s, c, y, x)] =
                        static_cast<std::uint32_t>(by * in.w + bx);
                }
    return out;
}

template <typename T>
Tensor4<T> maxpool_backward(const PoolCache& cache, const Tensor4<T>& in_like,
                            const Tensor4<T>& dout) {
    Tensor4<T> din(in_like.n, in_like.c, in_like.h, in_like.w);
    const std::size_t in_plane = static_cast<std::size_t>(in_like.h) * in_like.w;
    const std::size_t out_plane = static_cast<std::size_t>(dout.h) * dout.w;
    for (int s = 0; s < dout.n; ++s)
        for (int c = 0; c < dout.c; ++c) {
            const std::size_t obase = (static_cast<std::size_t>(s) * dout.c + c) * out_plane;
            const std::size_t ibase = (static_cast<std::size_t>(s) * in_like.c + c) * in_plane;
            for (std::size_t j = 0; j < out_plane; ++j)
                din.v[ibase + cache.argmax[obase + j]] += dout.v[obase + j];
        }
    return din;
}

// ---- dense ---------------------------------------------------------------

template <typename T>
Tensor4<T> dense_forward(const DenseParams<T>& p, const Tensor4<T>& in, int threads = 1) {
    if (in.c != p.in_dim || in.h != 1 || in.w != 1) throw_invalid("dense input shape mismatch");
    Tensor4<T> out(in.n, p.out_dim, 1, 1);
    parallel_for(0, static_cast<std::size_t>(in.n), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            const T* irow = in.sample(static_cast<int>(s));
            T* orow = out.sample(static_cast<int>(s));
            for (int o = 0; o < p.out_dim; ++o) {
                const T* wrow = p.w.data() + static_cast<std::size_t>(o) * p.in_dim;
                T acc = p.b[o];
                for (int i = 0; i < p.in_dim; ++i) acc += wrow[i] * irow[i];
                orow[o] = acc;
            }
        }
    });
    return out;
}

template <typename T>
void dense_backward(const DenseParams<T>& p, const Tensor4<T>& in, const Tensor4<T>& dout,
                    Tensor4<T>& din, std::vector<T>& dw, std::vector<T>& db, int threads = 1) {
    din = Tensor4<T>(in.n, in.c, 1, 1);
    parallel_for(0, static_cast<std::size_t>(in.n), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            const T* drow = dout.sample(static_cast<int>(s));
            T* grow = din.sample(static_cast<int>(s));
            for (int o = 0; o < p.out_dim; ++o) {
                const T* wrow = p.w.data() + static_cast<std::size_t>(o) * p.in_dim;
                const T d = drow[o];
                for (int i = 0; i < p.in_dim; ++i) grow[i] += wrow[i] * d;
            }
        }
    });

    const std::size_t wsize = p.w.size();
    const std::vector<double> sums = detail::chunked_sum(
        static_cast<std::size_t>(in.n), threads, wsize + p.out_dim,
        [&](std::size_t lo, std::size_t hi, double* partial) {
            for (std::size_t s = lo; s < hi; ++s) {
                const T* irow = in.sample(static_cast<int>(s));
                const T* drow = dout.sample(static_cast<int>(s));
                for (int o = 0; o < p.out_dim; ++o) {
                    const double d = static_cast<double>(drow[o]);
                    partial[wsize + o] += d;
                    double* wpart = partial + static_cast<std::size_t>(o) * p.in_dim;
                    for (int i = 0; i < p.in_dim; ++i) wpart[i] += d * irow[i];
                }
            }
        });
    dw.resize(wsize);
    db.resize(p.out_dim);
    for (std::size_t j = 0; j < wsize; ++j) dw[j] = static_cast<T>(sums[j]);
    for (int o = 0; o < p.out_dim; ++o) db[o] = static_cast<T>(sums[wsize + o]);
}

}  // namespace cseg::net
