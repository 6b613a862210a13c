#include "kneenet/model/network.hpp"

#include <algorithm>
#include <cmath>

#include "kneenet/error.hpp"
#include "kneenet/simd/kernels.hpp"

namespace kneenet {

namespace {

constexpr double kBnMomentum = 0.1;
constexpr double kBnEps = 1e-5;

using detail::BnCache;
using detail::BnLayer;
using detail::ConvLayer;

// col[(ci*k*k + ky*k + kx) * (ho*wo) + oy*wo + ox]
template <class T>
void im2col(const T* x, const ConvLayer& L, std::size_t h, std::size_t w, std::size_t ho, std::size_t wo, T* col) {
    const auto pad = static_cast<std::ptrdiff_t>(L.pad);
    for (std::size_t ci = 0; ci < L.cin; ++ci) {
        const T* xc = x + ci * h * w;
        for (std::size_t ky = 0; ky < L.k; ++ky) {
            for (std::size_t kx = 0; kx < L.k; ++kx) {
                T* row = col + ((ci * L.k + ky) * L.k + kx) * ho * wo;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * L.stride + ky) - pad;
                    T* dst = row + oy * wo;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                        std::fill(dst, dst + wo, T(0));
                        continue;
                    }
                    const T* src = xc + static_cast<std::size_t>(iy) * w;
                    // Columns whose source lies inside the row: [lo, hi).
                    const auto off = static_cast<std::ptrdiff_t>(kx) - pad;
                    const auto st = static_cast<std::ptrdiff_t>(L.stride);
                    const std::ptrdiff_t lo = off >= 0 ? 0 : (-off + st - 1) / st;
                    const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(
                        (static_cast<std::ptrdiff_t>(w) - off + st - 1) / st, lo, static_cast<std::ptrdiff_t>(wo));
                    std::fill(dst, dst + lo, T(0));
                    if (st == 1) {
                        std::copy(src + lo + off, src + hi + off, dst + lo);
                    } else {
                        for (std::ptrdiff_t ox = lo; ox < hi; ++ox) dst[ox] = src[ox * st + off];
                    }
                    std::fill(dst + hi, dst + wo, T(0));
                }
            }
        }
    }
}

template <class T>
void col2im(const T* col, const ConvLayer& L, std::size_t h, std::size_t w, std::size_t ho, std::size_t wo, T* dx) {
    const auto pad = static_cast<std::ptrdiff_t>(L.pad);
    for (std::size_t ci = 0; ci < L.cin; ++ci) {
        T* dxc = dx + ci * h * w;
        for (std::size_t ky = 0; ky < L.k; ++ky) {
            for (std::size_t kx = 0; kx < L.k; ++kx) {
                const T* row = col + ((ci * L.k + ky) * L.k + kx) * ho * wo;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * L.stride + ky) - pad;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    T* dst = dxc + static_cast<std::size_t>(iy) * w;
                    const T* src = row + oy * wo;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * L.stride + kx) - pad;
                        if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

template <class T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
    constexpr std::size_t tile = 32;
    for (std::size_t r0 = 0; r0 < rows; r0 += tile)
        for (std::size_t c0 = 0; c0 < cols; c0 += tile)
            for (std::size_t r = r0; r < std::min(rows, r0 + tile); ++r)
                for (std::size_t c = c0; c < std::min(cols, c0 + tile); ++c) dst[c * rows + r] = src[r * cols + c];
}

bool is_pointwise(const ConvLayer& L) { return L.k == 1 && L.stride == 1 && L.pad == 0; }

template <class T>
Tensor<T> conv_forward(const ConvLayer& L, std::span<const T> weight, std::span<const T> bias, const Tensor<T>& x) {
    const std::size_t ho = L.out_size(x.h), wo = L.out_size(x.w);
    Tensor<T> y(x.n, L.cout, ho, wo);
    const std::size_t ck = L.cin * L.k * L.k, hw = ho * wo;
    std::vector<T> col(is_pointwise(L) ? 0 : ck * hw);
    const simd::GemmShape shape{L.cout, hw, ck, ck, hw, hw};
    for (std::size_t i = 0; i < x.n; ++i) {
        const T* b = x.image(i);
        if (!is_pointwise(L)) {
            im2col(x.image(i), L, x.h, x.w, ho, wo, col.data());
            b = col.data();
        }
        T* out = y.image(i);
        for (std::size_t co = 0; co < L.cout; ++co) std::fill(out + co * hw, out + (co + 1) * hw, bias[co]);
        simd::gemm(shape, weight.data(), b, out, true);
    }
    return y;
}

template <class T>
void conv_backward(const ConvLayer& L, std::span<const T> weight, const Tensor<T>& x, const Tensor<T>& dy,
                   Tensor<T>* dx, std::span<T> dweight, std::span<T> dbias) {
    const std::size_t ho = dy.h, wo = dy.w;
    const std::size_t ck = L.cin * L.k * L.k, hw = ho * wo;
    std::vector<T> col(ck * hw), colT(hw * ck), wT(ck * L.cout), dcol(ck * hw);
    transpose(weight.data(), L.cout, ck, wT.data());
    for (std::size_t i = 0; i < x.n; ++i) {
        const T* g = dy.image(i);
        for (std::size_t co = 0; co < L.cout; ++co) {
            T s = 0;
            for (std::size_t p = 0; p < hw; ++p) s += g[co * hw + p];
            dbias[co] += s;
        }
        if (is_pointwise(L)) std::copy_n(x.image(i), ck * hw, col.data());
        else im2col(x.image(i), L, x.h, x.w, ho, wo, col.data());
        transpose(col.data(), ck, hw, colT.data());
        // dW[cout x ck] += dY[cout x hw] * colT[hw x ck]
        simd::gemm({L.cout, ck, hw, hw, ck, ck}, g, colT.data(), dweight.data(), true);
        if (dx) {
            // dcol[ck x hw] = W^T[ck x cout] * dY[cout x hw]
            simd::gemm({ck, hw, L.cout, L.cout, hw, hw}, wT.data(), g, dcol.data(), false);
            if (is_pointwise(L)) {
                T* d = dx->image(i);
                for (std::size_t p = 0; p < ck * hw; ++p) d[p] += dcol[p];
            } else {
                col2im(dcol.data(), L, x.h, x.w, ho, wo, dx->image(i));
            }
        }
    }
}

template <class T>
void bn_forward(const BnLayer& L, std::span<const T> gamma, std::span<const T> beta, std::span<const T> rmean,
                std::span<const T> rvar, Tensor<T>& x, Mode mode, BnCache<T>* cache, std::vector<T>* batch_mean,
                std::vector<T>* batch_var) {
    const std::size_t hw = x.plane();
    const std::size_t count = x.n * hw;
    if (cache) {
        cache->xhat = Tensor<T>(x.n, x.c, x.h, x.w);
        cache->inv_std.assign(L.channels, T(0));
    }
    if (batch_mean) batch_mean->assign(L.channels, T(0));
    if (batch_var) batch_var->assign(L.channels, T(0));
    for (std::size_t c = 0; c < L.channels; ++c) {
        T mean, var;
        if (mode == Mode::train) {
            T s = 0;
            for (std::size_t i = 0; i < x.n; ++i) {
                const T* p = x.channel(i, c);
                for (std::size_t k = 0; k < hw; ++k) s += p[k];
            }
            mean = s / static_cast<T>(count);
            T ss = 0;
            for (std::size_t i = 0; i < x.n; ++i) {
                const T* p = x.channel(i, c);
                for (std::size_t k = 0; k < hw; ++k) ss += (p[k] - mean) * (p[k] - mean);
            }
            var = ss / static_cast<T>(count);
            if (batch_mean) (*batch_mean)[c] = mean;
            if (batch_var) (*batch_var)[c] = count > 1 ? ss / static_cast<T>(count - 1) : var;
        } else {
            mean = rmean[c];
            var = rvar[c];
        }
        const T inv_std = T(1) / std::sqrt(var + static_cast<T>(kBnEps));
        if (cache) cache->inv_std[c] = inv_std;
        for (std::size_t i = 0; i < x.n; ++i) {
            T* p = x.channel(i, c);
            T* xh = cache ? cache->xhat.channel(i, c) : nullptr;
            for (std::size_t k = 0; k < hw; ++k) {
                const T v = (p[k] - mean) * inv_std;
                if (xh) xh[k] = v;
                p[k] = gamma[c] * v + beta[c];
            }
        }
    }
}

// dy is overwritten with dx.
template <class T>
void bn_backward(const BnLayer& L, std::span<const T> gamma, const BnCache<T>& cache, Tensor<T>& dy,
                 std::span<T> dgamma, std::span<T> dbeta) {
    const std::size_t hw = dy.plane();
    const auto count = static_cast<T>(dy.n * hw);
    for (std::size_t c = 0; c < L.channels; ++c) {
        T sum_dy = 0, sum_dy_xhat = 0;
        for (std::size_t i = 0; i < dy.n; ++i) {
            const T* g = dy.channel(i, c);
            const T* xh = cache.xhat.channel(i, c);
            for (std::size_t k = 0; k < hw; ++k) {
                sum_dy += g[k];
                sum_dy_xhat += g[k] * xh[k];
            }
        }
        dgamma[c] += sum_dy_xhat;
        dbeta[c] += sum_dy;
        const T scale = gamma[c] * cache.inv_std[c] / count;
        for (std::size_t i = 0; i < dy.n; ++i) {
            T* g = dy.channel(i, c);
            const T* xh = cache.xhat.channel(i, c);
            for (std::size_t k = 0; k < hw; ++k) g[k] = scale * (count * g[k] - sum_dy - xh[k] * sum_dy_xhat);
        }
    }
}

template <class T>
void relu(Tensor<T>& x) {
    for (auto& v : x.data) v = v > T(0) ? v : T(0);
}

// Zeroes gradient where the ReLU output was not positive.
template <class T>
void relu_backward(const Tensor<T>& out, Tensor<T>& grad) {
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (!(out.data[i] > T(0))) grad.data[i] = T(0);
}

}  // namespace

template <class T>
void Gradients<T>::scale(T s) {
    for (auto& b : blocks)
        for (auto& v : b) v *= s;
}

template <class T>
bool Gradients<T>::all_finite() const {
    for (const auto& b : blocks)
        for (auto v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

template <class T>
std::size_t Network<T>::add_block(std::string name, std::size_t size, T fill, bool trainable) {
    blocks_.push_back({std::move(name), std::vector<T>(size, fill), trainable});
    return blocks_.size() - 1;
}

template <class T>
detail::ConvLayer Network<T>::add_conv(const std::string& name, std::size_t cin, std::size_t cout, std::size_t k,
                                       std::size_t stride, std::size_t pad) {
    ConvLayer L{cin, cout, k, stride, pad, 0, 0};
    L.weight = add_block(name + ".weight", cout * cin * k * k, T(0), true);
    L.bias = add_block(name + ".bias", cout, T(0), true);
    return L;
}

template <class T>
detail::BnLayer Network<T>::add_bn(const std::string& name, std::size_t channels) {
    BnLayer L{channels, 0, 0, 0, 0};
    L.gamma = add_block(name + ".gamma", channels, T(1), true);
    L.beta = add_block(name + ".beta", channels, T(0), true);
    L.mean = add_block(name + ".running_mean", channels, T(0), false);
    L.var = add_block(name + ".running_var", channels, T(1), false);
    return L;
}

template <class T>
Network<T>::Network(const ModelConfig& config) : config_(config) {
    config_.validate();
    stem_ = add_conv("stem", config_.in_channels, config_.stem_filters, 3, config_.stem_stride, 1);
    stem_bn_ = add_bn("stem.bn", config_.stem_filters);
    std::size_t cin = config_.stem_filters;
    for (std::size_t s = 0; s < config_.stage_count; ++s) {
        const std::size_t cout = config_.stage_channels(s);
        for (std::size_t b = 0; b < config_.stage_blocks; ++b) {
            const std::string name = "stage" + std::to_string(s) + ".block" + std::to_string(b);
            const std::size_t stride = (b == 0 && s > 0) ? 2 : 1;
            detail::ResidualBlock rb;
            rb.conv1 = add_conv(name + ".conv1", cin, cout, 3, stride, 1);
            rb.bn1 = add_bn(name + ".bn1", cout);
            rb.conv2 = add_conv(name + ".conv2", cout, cout, 3, 1, 1);
            rb.bn2 = add_bn(name + ".bn2", cout);
            if (stride != 1 || cin != cout) {
                rb.proj = add_conv(name + ".proj", cin, cout, 1, stride, 0);
                rb.proj_bn = add_bn(name + ".proj_bn", cout);
            }
            res_blocks_.push_back(rb);
            cin = cout;
        }
    }
    head_w_ = add_block("head.weight", config_.out_tasks * cin, T(0), true);
    head_b_ = add_block("head.bias", config_.out_tasks, T(0), true);
}

template <class T>
Network<T> Network<T>::init(const ModelConfig& config, Rng& rng) {
    Network net(config);
    auto he = [&](const ConvLayer& L) {
        const double sd = std::sqrt(2.0 / static_cast<double>(L.cin * L.k * L.k));
        for (auto& v : net.blocks_[L.weight].value) v = static_cast<T>(rng.normal(0.0, sd));
    };
    he(net.stem_);
    for (const auto& rb : net.res_blocks_) {
        he(rb.conv1);
        he(rb.conv2);
        if (rb.proj) he(*rb.proj);
    }
    const double sd = std::sqrt(1.0 / static_cast<double>(config.feature_channels()));
    for (auto& v : net.blocks_[net.head_w_].value) v = static_cast<T>(rng.normal(0.0, sd));
    return net;
}

template <class T>
std::size_t Network<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks_)
        if (b.trainable) n += b.value.size();
    return n;
}

template <class T>
void Network<T>::check_input(const Tensor<T>& x) const {
    if (x.n == 0) throw ShapeError("forward: empty batch");
    if (x.c != config_.in_channels || x.h != config_.input_size || x.w != config_.input_size)
        throw ShapeError("forward: input " + std::to_string(x.c) + "x" + std::to_string(x.h) + "x" +
                         std::to_string(x.w) + " does not match model " + std::to_string(config_.in_channels) + "x" +
                         std::to_string(config_.input_size) + "x" + std::to_string(config_.input_size));
}

template <class T>
std::vector<T> Network<T>::run(const Tensor<T>& x, Mode mode, ForwardCache<T>* cache,
                               std::vector<std::pair<std::size_t, std::vector<T>>>* running) const {
    check_input(x);
    auto blk = [&](std::size_t i) { return std::span<const T>(blocks_[i].value); };
    auto bn = [&](const BnLayer& L, Tensor<T>& t, BnCache<T>* c) {
        std::vector<T> bm, bv;
        bn_forward<T>(L, blk(L.gamma), blk(L.beta), blk(L.mean), blk(L.var), t, mode, c,
                      running ? &bm : nullptr, running ? &bv : nullptr);
        if (running) {
            running->emplace_back(L.mean, std::move(bm));
            running->emplace_back(L.var, std::move(bv));
        }
    };

    if (cache) {
        cache->input = x;
        cache->blocks.assign(res_blocks_.size(), {});
    }
    Tensor<T> a = conv_forward<T>(stem_, blk(stem_.weight), blk(stem_.bias), x);
    bn(stem_bn_, a, cache ? &cache->stem_bn : nullptr);
    relu(a);
    if (cache) cache->stem_out = a;

    for (std::size_t bi = 0; bi < res_blocks_.size(); ++bi) {
        const auto& rb = res_blocks_[bi];
        auto* bc = cache ? &cache->blocks[bi] : nullptr;
        if (bc) bc->input = a;
        Tensor<T> h = conv_forward<T>(rb.conv1, blk(rb.conv1.weight), blk(rb.conv1.bias), a);
        bn(rb.bn1, h, bc ? &bc->bn1 : nullptr);
        relu(h);
        if (bc) bc->hidden = h;
        Tensor<T> y = conv_forward<T>(rb.conv2, blk(rb.conv2.weight), blk(rb.conv2.bias), h);
        bn(rb.bn2, y, bc ? &bc->bn2 : nullptr);
        if (rb.proj) {
            Tensor<T> s = conv_forward<T>(*rb.proj, blk(rb.proj->weight), blk(rb.proj->bias), a);
            bn(*rb.proj_bn, s, bc ? &bc->proj_bn : nullptr);
            for (std::size_t k = 0; k < y.data.size(); ++k) y.data[k] += s.data[k];
        } else {
            for (std::size_t k = 0; k < y.data.size(); ++k) y.data[k] += a.data[k];
        }
        relu(y);
        if (bc) bc->output = y;
        a = std::move(y);
    }

    // Global average pooling then the affine head.
    const std::size_t C = a.c, hw = a.plane(), tasks = config_.out_tasks;
    Tensor<T> feat(a.n, C, 1, 1);
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t c = 0; c < C; ++c) {
            const T* p = a.channel(i, c);
            T s = 0;
            for (std::size_t k = 0; k < hw; ++k) s += p[k];
            feat(i, c, 0, 0) = s / static_cast<T>(hw);
        }
    if (cache) {
        cache->features = feat;
        cache->pooled_h = a.h;
        cache->pooled_w = a.w;
    }
    std::vector<T> logits(a.n * tasks);
    const auto& W = blocks_[head_w_].value;
    const auto& b = blocks_[head_b_].value;
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t t = 0; t < tasks; ++t)
            logits[i * tasks + t] =
                b[t] + simd::dot(std::span<const T>(W.data() + t * C, C), std::span<const T>(feat.image(i), C));
    return logits;
}

template <class T>
ForwardResult<T> Network<T>::forward(const Tensor<T>& x, Mode mode) {
    ForwardResult<T> r;
    r.batch = x.n;
    r.tasks = config_.out_tasks;
    if (mode == Mode::eval) {
        r.logits = run(x, mode, nullptr, nullptr);
        return r;
    }
    std::vector<std::pair<std::size_t, std::vector<T>>> running;
    r.logits = run(x, mode, &r.cache, &running);
    const T m = static_cast<T>(kBnMomentum);
    for (auto& [idx, stat] : running) {
        auto& dst = blocks_[idx].value;
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = (T(1) - m) * dst[c] + m * stat[c];
    }
    r.cache.owner = this;
    r.cache.version = version_;
    r.cache.valid = true;
    return r;
}

template <class T>
std::vector<T> Network<T>::predict(const Tensor<T>& x) const {
    return run(x, Mode::eval, nullptr, nullptr);
}

template <class T>
Gradients<T> Network<T>::zero_gradients() const {
    Gradients<T> g;
    g.blocks.resize(blocks_.size());
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        if (blocks_[i].trainable) g.blocks[i].assign(blocks_[i].value.size(), T(0));
    return g;
}

template <class T>
Gradients<T> Network<T>::backward(const ForwardCache<T>& cache, std::span<const T> dlogits) const {
    if (!cache.valid) throw UsageError("backward: cache is not from a train-mode forward pass");
    if (cache.owner != this || cache.version != version_)
        throw UsageError("backward: stale cache (model changed since the forward pass)");
    const std::size_t B = cache.features.n, C = cache.features.c, tasks = config_.out_tasks;
    if (dlogits.size() != B * tasks) throw ShapeError("backward: dlogits size does not match the batch");

    Gradients<T> g = zero_gradients();
    auto blk = [&](std::size_t i) { return std::span<const T>(blocks_[i].value); };
    auto gr = [&](std::size_t i) { return std::span<T>(g.blocks[i]); };

    // Head.
    const auto& W = blocks_[head_w_].value;
    std::vector<T> dfeat(B * C, T(0));
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t t = 0; t < tasks; ++t) {
            const T d = dlogits[i * tasks + t];
            g.blocks[head_b_][t] += d;
            for (std::size_t c = 0; c < C; ++c) {
                g.blocks[head_w_][t * C + c] += d * cache.features(i, c, 0, 0);
                dfeat[i * C + c] += d * W[t * C + c];
            }
        }

    // Pooling.
    const std::size_t ph = cache.pooled_h, pw = cache.pooled_w;
    Tensor<T> da(B, C, ph, pw);
    const T inv = T(1) / static_cast<T>(ph * pw);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t c = 0; c < C; ++c) std::fill_n(da.channel(i, c), ph * pw, dfeat[i * C + c] * inv);

    for (std::size_t bi = res_blocks_.size(); bi-- > 0;) {
        const auto& rb = res_blocks_[bi];
        const auto& bc = cache.blocks[bi];
        relu_backward(bc.output, da);  // da is now d(sum)
        Tensor<T> din(bc.input.n, bc.input.c, bc.input.h, bc.input.w);
        if (rb.proj) {
            Tensor<T> ds = da;
            bn_backward<T>(*rb.proj_bn, blk(rb.proj_bn->gamma), bc.proj_bn, ds, gr(rb.proj_bn->gamma),
                           gr(rb.proj_bn->beta));
            conv_backward<T>(*rb.proj, blk(rb.proj->weight), bc.input, ds, &din, gr(rb.proj->weight),
                             gr(rb.proj->bias));
        } else {
            din.data = da.data;
        }
        Tensor<T>& dy = da;
        bn_backward<T>(rb.bn2, blk(rb.bn2.gamma), bc.bn2, dy, gr(rb.bn2.gamma), gr(rb.bn2.beta));
        Tensor<T> dh(bc.hidden.n, bc.hidden.c, bc.hidden.h, bc.hidden.w);
        conv_backward<T>(rb.conv2, blk(rb.conv2.weight), bc.hidden, dy, &dh, gr(rb.conv2.weight), gr(rb.conv2.bias));
        relu_backward(bc.hidden, dh);
        bn_backward<T>(rb.bn1, blk(rb.bn1.gamma), bc.bn1, dh, gr(rb.bn1.gamma), gr(rb.bn1.beta));
        conv_backward<T>(rb.conv1, blk(rb.conv1.weight), bc.input, dh, &din, gr(rb.conv1.weight), gr(rb.conv1.bias));
        da = std::move(din);
    }

    relu_backward(cache.stem_out, da);
    bn_backward<T>(stem_bn_, blk(stem_bn_.gamma), cache.stem_bn, da, gr(stem_bn_.gamma), gr(stem_bn_.beta));
    conv_backward<T>(stem_, blk(stem_.weight), cache.input, da, nullptr, gr(stem_.weight), gr(stem_.bias));
    return g;
}

template struct Gradients<float>;
template struct Gradients<double>;
template class Network<float>;
template class Network<double>;

}  // namespace kneenet
