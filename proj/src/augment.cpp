#include "kneenet/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

#include "kneenet/error.hpp"
#include "kneenet/resample.hpp"
#include "kneenet/simd/kernels.hpp"

namespace kneenet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

void clip_in_place(Image& img) { simd::clamp(img.data, img.data, 0.0, 1.0); }

// 3x3 cross-correlation with replicate-edge padding.
Image filter3x3(const Image& in, const std::array<double, 9>& k) {
    Image out(in.height, in.width);
    const auto H = static_cast<std::ptrdiff_t>(in.height), W = static_cast<std::ptrdiff_t>(in.width);
    for (std::ptrdiff_t y = 0; y < H; ++y) {
        for (std::ptrdiff_t x = 0; x < W; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
                const auto yy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y + dy, 0, H - 1));
                for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                    const auto xx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x + dx, 0, W - 1));
                    acc += k[static_cast<std::size_t>((dy + 1) * 3 + (dx + 1))] * in(yy, xx);
                }
            }
            out(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc;
        }
    }
    return out;
}

Image crop(const Image& in, std::size_t top, std::size_t left, std::size_t size) {
    Image out(size, size);
    for (std::size_t y = 0; y < size; ++y)
        std::copy_n(&in.data[(top + y) * in.width + left], size, &out.data[y * size]);
    return out;
}

void check_crop(const Image& in, std::size_t size) {
    if (size == 0 || size > in.height || size > in.width)
        throw GeometryError("crop " + std::to_string(size) + " does not fit a " + std::to_string(in.height) + "x" +
                            std::to_string(in.width) + " slice");
}

double sample_bilinear_zero(const Image& in, double y, double x) {
    const double fy = std::floor(y), fx = std::floor(x);
    const auto y0 = static_cast<std::ptrdiff_t>(fy), x0 = static_cast<std::ptrdiff_t>(fx);
    const double wy = y - fy, wx = x - fx;
    auto px = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) {
        if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(in.height) ||
            xx >= static_cast<std::ptrdiff_t>(in.width))
            return 0.0;
        return in(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
    };
    return (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x0 + 1)) +
           wy * ((1 - wx) * px(y0 + 1, x0) + wx * px(y0 + 1, x0 + 1));
}

bool is_crop(const Transform& t) {
    return std::holds_alternative<xform::CenterCrop>(t) || std::holds_alternative<xform::RandomCrop>(t);
}

}  // namespace

void AugmentationPolicy::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augmentation p must lie in [0, 1]");
    if (crop_size == 0) throw ConfigError("augmentation crop_size must be >= 1");
}

bool TransformPlan::stage_active(std::size_t stage) const {
    return std::any_of(steps.begin(), steps.end(), [&](const auto& s) { return s.stage == stage; });
}

std::string transform_name(const Transform& t) {
    return std::visit(Overloaded{
                          [](const xform::HorizontalFlip&) { return std::string("horizontal_flip"); },
                          [](const xform::Contrast&) { return std::string("random_contrast"); },
                          [](const xform::Gamma&) { return std::string("random_gamma"); },
                          [](const xform::Brightness&) { return std::string("random_brightness"); },
                          [](const xform::Clahe&) { return std::string("clahe"); },
                          [](const xform::Sharpen&) { return std::string("sharpen"); },
                          [](const xform::EmbossOverlay&) { return std::string("emboss_overlay"); },
                          [](const xform::BrightnessContrast&) { return std::string("random_brightness_contrast"); },
                          [](const xform::CenterCrop&) { return std::string("center_crop"); },
                          [](const xform::RandomCrop&) { return std::string("random_crop"); },
                          [](const xform::Rotate&) { return std::string("rotate"); },
                          [](const xform::Shift&) { return std::string("shift"); },
                      },
                      t);
}

std::vector<std::vector<std::string>> stage_members(const AugmentationPolicy& policy) {
    const bool three = policy.channel_mode == ChannelMode::three_channel;
    std::vector<std::vector<std::string>> stages;
    stages.push_back({"horizontal_flip"});
    if (three) stages.push_back({"random_contrast", "random_gamma", "random_brightness"});
    else stages.push_back({"random_contrast", "random_gamma"});
    if (three) stages.push_back({"clahe", "sharpen", "emboss_overlay", "random_brightness_contrast"});
    else stages.push_back({"sharpen", "emboss_overlay"});
    stages.push_back({"center_crop", "random_crop"});
    if (policy.baseline_extras) {
        stages.push_back({"rotate"});
        stages.push_back({"shift"});
    }
    return stages;
}

TransformPlan sample_plan(const AugmentationPolicy& policy, Rng& rng) {
    policy.validate();
    const auto stages = stage_members(policy);
    TransformPlan plan;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        if (!rng.bernoulli(policy.p)) continue;
        const auto& members = stages[s];
        const auto& name = members[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(members.size()) - 1))];
        Transform t = xform::HorizontalFlip{};
        if (name == "horizontal_flip") t = xform::HorizontalFlip{};
        else if (name == "random_contrast") t = xform::Contrast{rng.uniform(-0.2, 0.2)};
        else if (name == "random_gamma") t = xform::Gamma{rng.uniform(0.8, 1.2)};
        else if (name == "random_brightness") t = xform::Brightness{rng.uniform(-0.2, 0.2)};
        else if (name == "clahe") t = xform::Clahe{2.0, 8};
        else if (name == "sharpen") t = xform::Sharpen{rng.uniform(0.2, 0.5)};
        else if (name == "emboss_overlay") {
            const double strength = rng.uniform(0.2, 0.7);
            t = xform::EmbossOverlay{strength, rng.uniform(0.2, 0.5)};
        } else if (name == "random_brightness_contrast") {
            const double a = rng.uniform(-0.2, 0.2);
            t = xform::BrightnessContrast{a, rng.uniform(-0.2, 0.2)};
        } else if (name == "center_crop") t = xform::CenterCrop{policy.crop_size};
        else if (name == "random_crop") {
            const double top = rng.uniform();
            t = xform::RandomCrop{policy.crop_size, top, rng.uniform()};
        } else if (name == "rotate") t = xform::Rotate{rng.uniform(-25.0, 25.0)};
        else if (name == "shift") {
            const double dy = rng.uniform(-25.0, 25.0);
            t = xform::Shift{dy, rng.uniform(-25.0, 25.0)};
        }
        plan.steps.push_back({s + 1, t});
    }
    return plan;
}

Image clahe(const Image& image, double clip_limit, std::size_t grid) {
    constexpr std::size_t bins = 256;
    const std::size_t H = image.height, W = image.width;
    const std::size_t gy = std::min(grid, H), gx = std::min(grid, W);

    std::vector<unsigned char> q(image.data.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<unsigned char>(std::lround(clip01(image.data[i]) * 255.0));

    // Per-tile lookup tables, luts[(ty * gx + tx) * bins + b].
    std::vector<double> luts(gy * gx * bins);
    std::vector<double> hist(bins);
    for (std::size_t ty = 0; ty < gy; ++ty) {
        const std::size_t y0 = ty * H / gy, y1 = (ty + 1) * H / gy;
        for (std::size_t tx = 0; tx < gx; ++tx) {
            const std::size_t x0 = tx * W / gx, x1 = (tx + 1) * W / gx;
            std::fill(hist.begin(), hist.end(), 0.0);
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x) hist[q[y * W + x]] += 1.0;
            const double npix = static_cast<double>((y1 - y0) * (x1 - x0));
            const double limit = std::max(1.0, clip_limit * npix / bins);
            double excess = 0.0;
            for (auto& h : hist) {
                if (h > limit) {
                    excess += h - limit;
                    h = limit;
                }
            }
            const double redistributed = excess / bins;
            double cdf = 0.0;
            double* lut = &luts[(ty * gx + tx) * bins];
            for (std::size_t b = 0; b < bins; ++b) {
                cdf += hist[b] + redistributed;
                lut[b] = clip01(cdf / npix);
            }
        }
    }

    auto locate = [](std::size_t pos, std::size_t extent, std::size_t tiles, std::size_t& t0, std::size_t& t1,
                     double& w) {
        const double f = (static_cast<double>(pos) + 0.5) * static_cast<double>(tiles) / static_cast<double>(extent) - 0.5;
        if (f <= 0.0) {
            t0 = t1 = 0;
            w = 0.0;
        } else if (f >= static_cast<double>(tiles - 1)) {
            t0 = t1 = tiles - 1;
            w = 0.0;
        } else {
            t0 = static_cast<std::size_t>(std::floor(f));
            t1 = t0 + 1;
            w = f - static_cast<double>(t0);
        }
    };

    Image out(H, W);
    for (std::size_t y = 0; y < H; ++y) {
        std::size_t ty0, ty1;
        double wy;
        locate(y, H, gy, ty0, ty1, wy);
        for (std::size_t x = 0; x < W; ++x) {
            std::size_t tx0, tx1;
            double wx;
            locate(x, W, gx, tx0, tx1, wx);
            const std::size_t b = q[y * W + x];
            const double v00 = luts[(ty0 * gx + tx0) * bins + b], v01 = luts[(ty0 * gx + tx1) * bins + b];
            const double v10 = luts[(ty1 * gx + tx0) * bins + b], v11 = luts[(ty1 * gx + tx1) * bins + b];
            out(y, x) = clip01((1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11));
        }
    }
    return out;
}

Image apply_transform(const Image& image, const Transform& t) {
    Image out = std::visit(
        Overloaded{
            [&](const xform::HorizontalFlip&) {
                Image o = image;
                for (std::size_t y = 0; y < o.height; ++y)
                    std::reverse(o.data.begin() + static_cast<std::ptrdiff_t>(y * o.width),
                                 o.data.begin() + static_cast<std::ptrdiff_t>((y + 1) * o.width));
                return o;
            },
            [&](const xform::Contrast& c) {
                double mean = 0.0;
                for (double v : image.data) mean += v;
                mean /= static_cast<double>(image.data.size());
                Image o = image;
                for (auto& v : o.data) v = mean + (1.0 + c.alpha) * (v - mean);
                return o;
            },
            [&](const xform::Gamma& g) {
                Image o = image;
                if (g.gamma != 1.0)
                    for (auto& v : o.data) v = std::pow(v, g.gamma);
                return o;
            },
            [&](const xform::Brightness& b) {
                Image o = image;
                for (auto& v : o.data) v *= 1.0 + b.beta;
                return o;
            },
            [&](const xform::Clahe& c) { return clahe(image, c.clip_limit, c.grid); },
            [&](const xform::Sharpen& s) {
                const double ninth = 1.0 / 9.0;
                const Image blur = filter3x3(image, {ninth, ninth, ninth, ninth, ninth, ninth, ninth, ninth, ninth});
                Image o = image;
                for (std::size_t i = 0; i < o.data.size(); ++i) o.data[i] += s.amount * (image.data[i] - blur.data[i]);
                return o;
            },
            [&](const xform::EmbossOverlay& e) {
                const double s = e.strength;
                Image emb = filter3x3(image, {-s, -s, 0.0, -s, s, s, 0.0, s, s});
                Image o = image;
                for (std::size_t i = 0; i < o.data.size(); ++i)
                    o.data[i] = (1.0 - e.alpha) * image.data[i] + e.alpha * clip01(emb.data[i] + 0.5);
                return o;
            },
            [&](const xform::BrightnessContrast& bc) {
                Image o = image;
                for (auto& v : o.data) v = (1.0 + bc.alpha) * (v - 0.5) + 0.5 + bc.beta;
                return o;
            },
            [&](const xform::CenterCrop& c) {
                check_crop(image, c.size);
                return crop(image, (image.height - c.size) / 2, (image.width - c.size) / 2, c.size);
            },
            [&](const xform::RandomCrop& c) {
                check_crop(image, c.size);
                const auto pick = [](double u, std::size_t positions) {
                    return std::min(positions - 1, static_cast<std::size_t>(u * static_cast<double>(positions)));
                };
                return crop(image, pick(c.u_top, image.height - c.size + 1), pick(c.u_left, image.width - c.size + 1),
                            c.size);
            },
            [&](const xform::Rotate& r) {
                Image o(image.height, image.width);
                const double th = r.degrees * std::numbers::pi / 180.0;
                const double cs = std::cos(th), sn = std::sin(th);
                const double cy = (static_cast<double>(image.height) - 1.0) / 2.0;
                const double cx = (static_cast<double>(image.width) - 1.0) / 2.0;
                for (std::size_t y = 0; y < o.height; ++y) {
                    for (std::size_t x = 0; x < o.width; ++x) {
                        // Inverse mapping: source = R(-theta) * (dest - center) + center.
                        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
                        const double sy = cs * dy - sn * dx + cy;
                        const double sx = sn * dy + cs * dx + cx;
                        o(y, x) = sample_bilinear_zero(image, sy, sx);
                    }
                }
                return o;
            },
            [&](const xform::Shift& s) {
                Image o(image.height, image.width, 0.0);
                const auto dy = static_cast<std::ptrdiff_t>(std::lround(s.dy));
                const auto dx = static_cast<std::ptrdiff_t>(std::lround(s.dx));
                const auto H = static_cast<std::ptrdiff_t>(image.height), W = static_cast<std::ptrdiff_t>(image.width);
                for (std::ptrdiff_t y = 0; y < H; ++y) {
                    const std::ptrdiff_t sy = y - dy;
                    if (sy < 0 || sy >= H) continue;
                    for (std::ptrdiff_t x = 0; x < W; ++x) {
                        const std::ptrdiff_t sx = x - dx;
                        if (sx < 0 || sx >= W) continue;
                        o(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                            image(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
                    }
                }
                return o;
            },
        },
        t);
    clip_in_place(out);
    return out;
}

MriVolume apply_plan(const MriVolume& vol, const TransformPlan& plan) {
    if (plan.empty()) return vol;
    // Geometry is checked up front so a bad plan fails before any work.
    for (const auto& step : plan.steps) {
        if (const auto* c = std::get_if<xform::CenterCrop>(&step.transform)) {
            if (c->size > vol.height || c->size > vol.width) check_crop(Image(vol.height, vol.width), c->size);
        } else if (const auto* r = std::get_if<xform::RandomCrop>(&step.transform)) {
            if (r->size > vol.height || r->size > vol.width) check_crop(Image(vol.height, vol.width), r->size);
        }
    }
    MriVolume out = vol;
    for (std::size_t i = 0; i < vol.slices; ++i) {
        Image img(vol.height, vol.width, vol.slice(i));
        for (const auto& step : plan.steps) {
            const std::size_t h = img.height, w = img.width;
            img = apply_transform(img, step.transform);
            if (is_crop(step.transform)) img = resize_bilinear(img, h, w);
        }
        std::copy(img.data.begin(), img.data.end(), out.slice(i).begin());
    }
    return out;
}

void to_json(nlohmann::json& j, const AugmentationPolicy& p) {
    j = nlohmann::json{{"p", p.p},
                       {"channel_mode", p.channel_mode == ChannelMode::three_channel ? "three_channel" : "single_channel"},
                       {"baseline_extras", p.baseline_extras},
                       {"crop_size", p.crop_size}};
}

void from_json(const nlohmann::json& j, AugmentationPolicy& p) {
    static const std::set<std::string> known{"p", "channel_mode", "baseline_extras", "crop_size"};
    if (!j.is_object()) throw ParseError("augmentation policy must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ParseError("augmentation policy: unknown key '" + k + "'");
    AugmentationPolicy out;
    if (j.contains("p")) out.p = j.at("p").get<double>();
    if (j.contains("channel_mode")) {
        const auto mode = j.at("channel_mode").get<std::string>();
        if (mode == "three_channel") out.channel_mode = ChannelMode::three_channel;
        else if (mode == "single_channel") out.channel_mode = ChannelMode::single_channel;
        else throw ParseError("augmentation policy: unknown channel_mode '" + mode + "'");
    }
    if (j.contains("baseline_extras")) out.baseline_extras = j.at("baseline_extras").get<bool>();
    if (j.contains("crop_size")) out.crop_size = j.at("crop_size").get<std::size_t>();
    out.validate();
    p = out;
}

}  // namespace kneenet
