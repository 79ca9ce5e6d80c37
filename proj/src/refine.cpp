#include "inkwell/refine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <exception>
#include <mutex>
#include <thread>

#include "inkwell/error.hpp"
#include "inkwell/rng.hpp"
#include "inkwell/tensor.hpp"

namespace inkwell {

void RefineChain::validate() const
{
    if (m < 1) throw ArgumentError("chain iteration count must be >= 1");
    cfg.validate();
    const std::size_t want = net_count(mode, m);
    if (nets.size() != want) {
        throw ArgumentError(std::string(mode_name(mode)) + " chain with m=" + std::to_string(m) + " needs " +
                            std::to_string(want) + " networks, has " + std::to_string(nets.size()));
    }
}

const UNetParams& RefineChain::net_for(int i) const
{
    if (i < 1 || i > m) throw ArgumentError("iterate index " + std::to_string(i) + " outside 1.." + std::to_string(m));
    return nets.at(net_index(i));
}

bool RefineChain::operator==(const RefineChain& o) const
{
    return mode == o.mode && m == o.m && cfg == o.cfg && nets == o.nets;
}

RefineChain zero_chain(ChainMode mode, int m, const UNetConfig& cfg)
{
    RefineChain chain{mode, m, cfg, {}};
    if (m < 1) throw ArgumentError("chain iteration count must be >= 1");
    chain.nets.assign(RefineChain::net_count(mode, m), zero_params(cfg));
    return chain;
}

RefineChain init_chain(ChainMode mode, int m, const UNetConfig& cfg, std::uint64_t seed)
{
    RefineChain chain{mode, m, cfg, {}};
    if (m < 1) throw ArgumentError("chain iteration count must be >= 1");
    const std::size_t count = RefineChain::net_count(mode, m);
    for (std::size_t k = 0; k < count; ++k) chain.nets.push_back(init_params(cfg, derive_seed(seed, k)));
    return chain;
}

Tensor enhance_once(const UNetParams& net, const UNetConfig& cfg, const Tensor& x, bool clamp)
{
    Tensor out = unet_forward(net, cfg, x);
    out += x;
    if (clamp) {
        for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

std::vector<Tensor> chain_enhance(const RefineChain& chain, const Tensor& x)
{
    chain.validate();
    std::vector<Tensor> iterates;
    iterates.reserve(static_cast<std::size_t>(chain.m));
    const Tensor* prev = &x;
    for (int i = 1; i <= chain.m; ++i) {
        iterates.push_back(enhance_once(chain.net_for(i), chain.cfg, *prev));
        prev = &iterates.back();
    }
    return iterates;
}

GrayImage fuse_iterations(const std::vector<GrayImage>& iterates)
{
    if (iterates.empty()) throw ArgumentError("fuse_iterations: no iterates");
    const int w = iterates.front().width();
    const int h = iterates.front().height();
    for (const auto& it : iterates) {
        if (it.width() != w || it.height() != h) {
            throw ArgumentError("fuse_iterations: iterate is " + std::to_string(it.width()) + "x" +
                                std::to_string(it.height()) + ", expected " + std::to_string(w) + "x" +
                                std::to_string(h));
        }
    }
    if (iterates.size() == 1) return iterates.front();
    std::vector<long double> sum(iterates.front().size(), 0.0L);
    for (const auto& it : iterates) {
        const auto d = it.data();
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += d[i];
    }
    GrayImage out(w, h);
    const auto n = static_cast<long double>(iterates.size());
    auto od = out.data();
    for (std::size_t i = 0; i < sum.size(); ++i) od[i] = static_cast<double>(sum[i] / n);
    return out;
}

namespace {

int scaled_window(double scale, int patch_size) { return static_cast<int>(std::lround(scale * patch_size)); }

template <class Fn>
void parallel_for(std::size_t count, int threads, const Fn& fn)
{
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t t = 0; t < std::min(workers, count); ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

GrayImage mean_images(const std::vector<const GrayImage*>& images)
{
    std::vector<GrayImage> copies;
    copies.reserve(images.size());
    for (const auto* img : images) copies.push_back(*img);
    return fuse_iterations(copies);
}

}  // namespace

std::vector<GrayImage> enhance_at_scale(const RefineChain& chain, const GrayImage& img, double scale, int patch_size,
                                        int stride, int threads)
{
    chain.validate();
    chain.cfg.check_input(patch_size, patch_size);
    if (!(scale > 0.0)) throw ArgumentError("scale must be positive");
    const int window = scaled_window(scale, patch_size);
    if (window < 1 || window > img.width() || window > img.height()) {
        throw ArgumentError("scale " + std::to_string(scale) + " gives a " + std::to_string(window) +
                            " pixel window, larger than the image");
    }
    const int base_stride = stride > 0 ? stride : std::max(1, patch_size / 2);
    const int step = std::max(1, static_cast<int>(std::lround(static_cast<double>(base_stride) * window / patch_size)));

    const PatchSet source = extract_patches(img, window, step);
    const std::size_t count = source.entries.size();
    std::vector<PatchSet> out(static_cast<std::size_t>(chain.m));
    for (auto& ps : out) {
        ps.patch_size = window;
        ps.entries.resize(count);
    }

    parallel_for(count, threads, [&](std::size_t k) {
        const PatchEntry& entry = source.entries[k];
        const bool resample = window != patch_size;
        const GrayImage input = resample ? resize_bilinear(entry.patch, patch_size, patch_size) : entry.patch;
        const std::vector<Tensor> iterates = chain_enhance(chain, to_tensor(input));
        for (int i = 0; i < chain.m; ++i) {
            GrayImage result = to_image(iterates[static_cast<std::size_t>(i)]);
            if (resample) {
                // carry the change, not the image, back to the window size
                GrayImage delta(patch_size, patch_size);
                auto dd = delta.data();
                const auto rd = result.data();
                const auto id = input.data();
                for (std::size_t p = 0; p < dd.size(); ++p) dd[p] = rd[p] - id[p];
                const GrayImage back = resize_bilinear(delta, window, window);
                result = entry.patch;
                auto od = result.data();
                const auto bd = back.data();
                for (std::size_t p = 0; p < od.size(); ++p) od[p] = std::clamp(od[p] + bd[p], 0.0, 1.0);
            }
            out[static_cast<std::size_t>(i)].entries[k] = PatchEntry{std::move(result), entry.x, entry.y};
        }
    });

    std::vector<GrayImage> stitched;
    stitched.reserve(out.size());
    for (const auto& ps : out) stitched.push_back(stitch_average(ps, img.width(), img.height()));
    return stitched;
}

GrayImage multiscale_enhance(const RefineChain& chain, const GrayImage& img, const std::vector<double>& scales,
                             int patch_size, std::vector<std::string>* warnings, int threads)
{
    if (scales.empty()) throw ArgumentError("multiscale_enhance: no scales");
    std::vector<GrayImage> finals;
    for (double s : scales) {
        const int window = scaled_window(s, patch_size);
        if (window > img.width() || window > img.height()) {
            if (warnings) {
                std::ostringstream msg;
                msg << "scale " << s << " skipped: " << window << " pixel window exceeds " << img.width() << "x"
                    << img.height() << " image";
                warnings->push_back(msg.str());
            }
            continue;
        }
        finals.push_back(enhance_at_scale(chain, img, s, patch_size, 0, threads).back());
    }
    if (finals.empty()) throw ArgumentError("multiscale_enhance: every scale exceeds the image");
    return fuse_iterations(finals);
}

PatchSet local_uniform(const PatchSet& patches, const SauvolaParams& sauvola, double ink_fraction)
{
    PatchSet out = patches;
    for (auto& entry : out.entries) {
        GrayImage& p = entry.patch;
        SauvolaParams sp = sauvola;
        const int limit = 2 * std::min(p.width(), p.height());
        if (sp.window > limit) sp.window = limit % 2 == 0 ? limit - 1 : limit;
        const BinaryMap ink = sauvola_binarize(p, sp);
        const double fraction = static_cast<double>(ink.text_count()) / static_cast<double>(ink.size());
        auto d = p.data();
        if (fraction >= ink_fraction) {
            const double lo = p.min_value();
            const double hi = p.max_value();
            if (hi > lo) {
                for (double& v : d) v = (v - lo) / (hi - lo);
            }
        } else {
            std::fill(d.begin(), d.end(), 1.0);
        }
    }
    return out;
}

EnhanceResult enhance_document(const RefineChain& chain, const GrayImage& img, const EnhanceOptions& opt)
{
    chain.validate();
    if (img.empty()) throw ArgumentError("enhance_document: empty image");
    const int P = opt.patch_size;
    chain.cfg.check_input(P, P);
    const int stride = opt.stride > 0 ? opt.stride : std::max(1, P / 2);

    const bool padded = img.width() < P || img.height() < P;
    const GrayImage work = padded ? pad_reflect(img, std::max(P, img.width()), std::max(P, img.height())) : img;

    EnhanceResult result;
    const std::vector<double> scales = opt.multiscale ? opt.scales : std::vector<double>{1.0};
    if (scales.empty()) throw ArgumentError("enhance_document: no scales");
    std::vector<std::vector<GrayImage>> per_scale;
    for (double s : scales) {
        const int window = scaled_window(s, P);
        if (window > work.width() || window > work.height()) {
            std::ostringstream msg;
            msg << "scale " << s << " skipped: " << window << " pixel window exceeds " << work.width() << "x"
                << work.height() << " image";
            result.warnings.push_back(msg.str());
            continue;
        }
        per_scale.push_back(enhance_at_scale(chain, work, s, P, stride, opt.threads));
    }
    if (per_scale.empty()) throw ArgumentError("enhance_document: every scale exceeds the image");

    std::vector<GrayImage> iterates;
    for (int i = 0; i < chain.m; ++i) {
        std::vector<const GrayImage*> views;
        for (const auto& s : per_scale) views.push_back(&s[static_cast<std::size_t>(i)]);
        iterates.push_back(views.size() == 1 ? *views.front() : mean_images(views));
    }

    GrayImage enhanced = opt.fusion ? fuse_iterations(iterates) : iterates.back();
    if (opt.uniform) {
        const PatchSet patches = extract_patches(enhanced, P, stride);
        enhanced = stitch_average(local_uniform(patches, opt.sauvola, opt.ink_fraction), work.width(), work.height());
    }

    if (padded) {
        enhanced = crop(enhanced, 0, 0, img.width(), img.height());
        for (auto& it : iterates) it = crop(it, 0, 0, img.width(), img.height());
    }
    result.image = std::move(enhanced);
    result.iterates = std::move(iterates);
    return result;
}

}  // namespace inkwell
