#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "moiregen/blend.hpp"
#include "moiregen/config.hpp"
#include "moiregen/corpus.hpp"
#include "moiregen/fusion.hpp"
#include "moiregen/image_io.hpp"
#include "moiregen/manifest.hpp"
#include "moiregen/metrics.hpp"

// Orchestration: corpus ingestion, seeded parallel batch synthesis, manifest
// emission, pattern filtering, scoring and reporting. Every item gets its own
// RNG stream derived from (seed, item index) and results are collected in
// item order, so worker count and scheduling never change the outputs.

namespace moiregen {

namespace fs = std::filesystem;

namespace detail {

inline bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

} // namespace detail

inline std::vector<std::string> list_images(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw std::runtime_error("not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && detail::has_image_extension(entry.path()))
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    return paths;
}

// Decoded images are immutable; share them across workers.
class ImageCache {
public:
    std::shared_ptr<const ImageBuf> get(const std::string& path) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(path);
        if (it != cache_.end())
            return it->second;
        auto img = std::make_shared<const ImageBuf>(decode_image(path));
        cache_.emplace(path, img);
        return img;
    }

private:
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const ImageBuf>> cache_;
};

// Runs fn(i) for i in [0, n) on `workers` threads. fn must not throw; items
// report their own failures.
inline void parallel_for_items(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    int count = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (count < 1)
        count = 1;
    count = static_cast<int>(std::min<std::size_t>(count, n));
    if (count <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (int t = 0; t < count; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n)
                    return;
                fn(i);
            }
        });
    for (auto& t : pool)
        t.join();
}

inline double mean_brightness(const ImageBuf& img) {
    double sum = 0.0;
    for (float v : img.data)
        sum += v;
    return sum / static_cast<double>(img.data.size());
}

// Number formatting for CSV: shortest round-trip, "inf" for the PSNR sentinel.
inline std::string fmt_number(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return nlohmann::ordered_json(v).dump();
}

struct SynthesisOutcome {
    std::vector<SynthesisRecord> records;
    std::vector<std::string> failures; // "item N: reason", item-ordered
    std::string manifest_path;
};

namespace detail {

inline ImageBuf fit_pattern(const ImageBuf& patch, int w, int h, const std::string& policy) {
    if (policy == "stretch")
        return resize(patch, w, h);
    // crop-center: scale the shorter side up to cover, then center-crop
    const double f = std::max(static_cast<double>(w) / patch.width,
                              static_cast<double>(h) / patch.height);
    const int sw = std::max(w, static_cast<int>(std::ceil(patch.width * f)));
    const int sh = std::max(h, static_cast<int>(std::ceil(patch.height * f)));
    ImageBuf scaled = resize(patch, sw, sh);
    return crop(scaled, CropRect{(sw - w) / 2, (sh - h) / 2, w, h});
}

inline std::string item_filename(std::uint64_t item) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "item_%06llu.png", static_cast<unsigned long long>(item));
    return buf;
}

} // namespace detail

inline SynthesisOutcome synthesize(const PipelineConfig& cfg) {
    validate_config(cfg);
    const std::vector<std::string> cleans = list_images(cfg.clean_dir);
    const std::vector<std::string> patterns = list_images(cfg.pattern_dir);
    if (cleans.empty())
        throw std::runtime_error("empty clean corpus: " + cfg.clean_dir);
    if (patterns.empty())
        throw std::runtime_error("empty pattern corpus: " + cfg.pattern_dir);
    fs::create_directories(cfg.output_dir);

    std::optional<ImageBuf> tone;
    if (!cfg.tone_matrix_path.empty()) {
        tone = decode_image(cfg.tone_matrix_path);
        if (tone->width != cfg.clean_crop_w || tone->height != cfg.clean_crop_h)
            throw std::runtime_error("tone matrix dims must match the clean crop size");
    }

    // Reference pool for the color distance: one mean histogram over the pool.
    std::optional<HistogramFeature> color_ref;
    if (cfg.metrics.color_distance) {
        const auto refs = list_images(cfg.metrics.color_reference_dir);
        if (refs.empty())
            throw std::runtime_error("empty color reference pool: " + cfg.metrics.color_reference_dir);
        HistogramFeature acc;
        for (std::size_t i = 0; i < refs.size(); ++i) {
            HistogramFeature h = rgbuv_histogram(decode_image(refs[i]));
            if (i == 0) {
                acc = std::move(h);
            } else {
                for (std::size_t k = 0; k < acc.values.size(); ++k)
                    acc.values[k] += h.values[k];
            }
        }
        for (double& v : acc.values)
            v /= static_cast<double>(refs.size());
        color_ref = std::move(acc);
    }

    const std::size_t n_items = cleans.size() * static_cast<std::size_t>(cfg.samples_per_clean);
    std::vector<std::optional<SynthesisRecord>> slots(n_items);
    std::vector<std::string> fail_slots(n_items);
    ImageCache cache;

    parallel_for_items(n_items, cfg.workers, [&](std::size_t item) {
        try {
            RngEngine rng = make_stream(cfg.seed, item);
            const std::uint64_t stream_seed = derive_stream_seed(cfg.seed, item);

            const std::string& clean_path = cleans[item / cfg.samples_per_clean];
            const std::uint64_t pattern_idx = uniform_below(rng, patterns.size());
            const std::string& pattern_path = patterns[pattern_idx];

            auto clean = cache.get(clean_path);
            if (clean->channels != 3)
                throw std::runtime_error("clean image must be RGB: " + clean_path);
            if (clean->width < cfg.clean_crop_w || clean->height < cfg.clean_crop_h)
                throw std::runtime_error("clean image smaller than crop: " + clean_path);
            const CropRect crop_rect = corpus_detail_random_crop(rng, clean->width, clean->height,
                                                                 cfg.clean_crop_w, cfg.clean_crop_h);
            const ImageBuf clean_crop = crop(*clean, crop_rect);

            auto frame = cache.get(pattern_path);
            auto patch = select_patch(*frame, cfg.selection, rng);
            if (!patch)
                throw std::runtime_error("pattern rejected after " +
                                         std::to_string(cfg.selection.attempts) +
                                         " attempts: " + pattern_path);

            const ImageBuf pattern = detail::fit_pattern(patch->image, cfg.clean_crop_w,
                                                         cfg.clean_crop_h, cfg.pattern_resize);
            const BlendParams params =
                cfg.multiply_only ? multiply_only_params() : sample_blend_params(rng, cfg.blend);
            ImageBuf out_img = blend_mib(pattern, clean_crop, params);
            if (tone)
                out_img = apply_tone_matrix(out_img, *tone);

            SynthesisRecord rec;
            rec.item = item;
            rec.clean_path = clean_path;
            rec.pattern_path = pattern_path;
            rec.output_path = (fs::path(cfg.output_dir) / detail::item_filename(item)).string();
            rec.seed = cfg.seed;
            rec.seed_stream = stream_seed;
            rec.clean_crop = crop_rect;
            rec.blend = params;
            rec.pattern_sharpness = patch->sharpness;
            rec.pattern_colorfulness = patch->colorfulness;
            rec.pattern_tier = scale_tier_name(patch->tier);
            rec.pattern_crop = patch->rect;
            rec.mean_brightness = mean_brightness(out_img);
            if (cfg.metrics.tv)
                rec.tv = tv_loss(out_img);
            if (cfg.metrics.psnr)
                rec.psnr = psnr(out_img, clean_crop);
            if (cfg.metrics.ssim)
                rec.ssim = ssim(out_img, clean_crop);
            if (color_ref)
                rec.color_distance = hellinger_color_distance(rgbuv_histogram(out_img), *color_ref);

            encode_png(out_img, rec.output_path);
            slots[item] = std::move(rec);
        } catch (const std::exception& e) {
            fail_slots[item] = "item " + std::to_string(item) + ": " + e.what();
        }
    });

    SynthesisOutcome out;
    for (std::size_t i = 0; i < n_items; ++i) {
        if (slots[i])
            out.records.push_back(std::move(*slots[i]));
        else
            out.failures.push_back(fail_slots[i]);
    }
    out.manifest_path = (fs::path(cfg.output_dir) / "manifest.jsonl").string();
    write_manifest(out.records, out.manifest_path);
    save_config(cfg, (fs::path(cfg.output_dir) / "config.json").string());
    return out;
}

// ------ pattern filtering ------

struct FilterOutcome {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<std::string> failures;
    std::string sidecar_path;
};

inline FilterOutcome filter_patterns(const std::string& input_dir, const std::string& output_dir,
                                     const SelectionConfig& selection, std::uint64_t seed,
                                     int workers) {
    selection.validate();
    const std::vector<std::string> frames = list_images(input_dir);
    if (frames.empty())
        throw std::runtime_error("empty pattern corpus: " + input_dir);
    fs::create_directories(output_dir);

    struct Entry {
        nlohmann::ordered_json line;
        bool accepted = false;
        std::string failure;
    };
    std::vector<Entry> entries(frames.size());

    parallel_for_items(frames.size(), workers, [&](std::size_t i) {
        Entry& e = entries[i];
        try {
            RngEngine rng = make_stream(seed, i);
            const ImageBuf frame = decode_image(frames[i]);
            auto patch = select_patch(frame, selection, rng);
            if (!patch)
                return; // below thresholds on every attempt
            const std::string out_name = fs::path(frames[i]).stem().string() + "_patch.png";
            const std::string out_path = (fs::path(output_dir) / out_name).string();
            encode_png(patch->image, out_path);
            nlohmann::ordered_json j;
            j["source_path"] = frames[i];
            j["output_path"] = out_path;
            j["sharpness"] = patch->sharpness;
            j["colorfulness"] = patch->colorfulness;
            j["tier"] = scale_tier_name(patch->tier);
            j["crop"] = patch->rect ? detail::rect_to_json(*patch->rect)
                                    : nlohmann::ordered_json(nullptr);
            j["seed"] = seed;
            j["seed_stream"] = derive_stream_seed(seed, i);
            e.line = std::move(j);
            e.accepted = true;
        } catch (const std::exception& ex) {
            e.failure = frames[i] + ": " + ex.what();
        }
    });

    FilterOutcome out;
    out.sidecar_path = (fs::path(output_dir) / "patches.jsonl").string();
    std::ofstream sidecar(out.sidecar_path, std::ios::binary);
    if (!sidecar)
        throw std::runtime_error("cannot write sidecar: " + out.sidecar_path);
    for (const auto& e : entries) {
        if (!e.failure.empty()) {
            out.failures.push_back(e.failure);
        } else if (e.accepted) {
            sidecar << e.line.dump() << "\n";
            ++out.accepted;
        } else {
            ++out.rejected;
        }
    }
    return out;
}

// ------ corpus scoring ------

struct CorpusStatsRow {
    std::string path;
    double sharpness = 0.0;
    double colorfulness = 0.0;
};

struct CorpusStatsOutcome {
    std::vector<CorpusStatsRow> rows;
    std::vector<std::string> failures;
};

inline CorpusStatsOutcome corpus_stats(const std::string& input_dir, int workers = 0) {
    const std::vector<std::string> paths = list_images(input_dir);
    CorpusStatsOutcome out;
    std::vector<std::optional<CorpusStatsRow>> slots(paths.size());
    std::vector<std::string> fail_slots(paths.size());
    parallel_for_items(paths.size(), workers, [&](std::size_t i) {
        try {
            const ImageBuf img = decode_image(paths[i]);
            CorpusStatsRow row;
            row.path = paths[i];
            row.sharpness = sharpness(img);
            row.colorfulness = img.channels == 3 ? colorfulness(img) : 0.0;
            slots[i] = std::move(row);
        } catch (const std::exception& e) {
            fail_slots[i] = paths[i] + ": " + e.what();
        }
    });
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (slots[i])
            out.rows.push_back(std::move(*slots[i]));
        else
            out.failures.push_back(fail_slots[i]);
    }
    return out;
}

inline void write_corpus_stats_csv(const CorpusStatsOutcome& stats, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write csv: " + path);
    out << "path,sharpness,colorfulness\n";
    for (const auto& row : stats.rows)
        out << row.path << "," << fmt_number(row.sharpness) << "," << fmt_number(row.colorfulness)
            << "\n";
}

// ------ evaluation ------

struct EvaluatePair {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct EvaluateOutcome {
    std::vector<EvaluatePair> pairs;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::vector<std::string> failures;
};

inline EvaluateOutcome evaluate_dirs(const std::string& pred_dir, const std::string& ref_dir,
                                     int workers = 0) {
    auto preds = list_images(pred_dir);
    auto refs = list_images(ref_dir);
    std::map<std::string, std::string> ref_by_name;
    for (const auto& r : refs)
        ref_by_name[fs::path(r).filename().string()] = r;

    std::vector<std::pair<std::string, std::string>> matched; // pred path, ref path
    EvaluateOutcome out;
    for (const auto& p : preds) {
        const std::string name = fs::path(p).filename().string();
        auto it = ref_by_name.find(name);
        if (it == ref_by_name.end())
            out.failures.push_back(name + ": no reference counterpart");
        else
            matched.emplace_back(p, it->second);
    }
    if (matched.empty())
        throw std::runtime_error("no matching prediction/reference pairs");

    std::vector<std::optional<EvaluatePair>> slots(matched.size());
    std::vector<std::string> fail_slots(matched.size());
    parallel_for_items(matched.size(), workers, [&](std::size_t i) {
        try {
            const ImageBuf a = decode_image(matched[i].first);
            const ImageBuf b = decode_image(matched[i].second);
            EvaluatePair pair;
            pair.name = fs::path(matched[i].first).filename().string();
            pair.psnr = psnr(a, b);
            pair.ssim = ssim(a, b);
            slots[i] = std::move(pair);
        } catch (const std::exception& e) {
            fail_slots[i] = fs::path(matched[i].first).filename().string() + ": " + e.what();
        }
    });
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (std::size_t i = 0; i < matched.size(); ++i) {
        if (slots[i]) {
            psnr_sum += slots[i]->psnr;
            ssim_sum += slots[i]->ssim;
            out.pairs.push_back(std::move(*slots[i]));
        } else {
            out.failures.push_back(fail_slots[i]);
        }
    }
    if (!out.pairs.empty()) {
        out.mean_psnr = psnr_sum / static_cast<double>(out.pairs.size());
        out.mean_ssim = ssim_sum / static_cast<double>(out.pairs.size());
    }
    return out;
}

inline void write_evaluate_csv(const EvaluateOutcome& outcome, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write csv: " + path);
    out << "name,psnr,ssim\n";
    for (const auto& p : outcome.pairs)
        out << p.name << "," << fmt_number(p.psnr) << "," << fmt_number(p.ssim) << "\n";
    if (!outcome.pairs.empty())
        out << "mean," << fmt_number(outcome.mean_psnr) << "," << fmt_number(outcome.mean_ssim)
            << "\n";
}

// ------ reporting ------

struct SeriesSummary {
    std::string name;
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double p10 = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double max = 0.0;
};

struct ReportOutcome {
    std::vector<SeriesSummary> summaries;
    std::vector<std::string> errors; // malformed manifest lines
    std::size_t record_count = 0;
};

namespace detail {

inline SeriesSummary summarize_series(const std::string& name, std::vector<double> values) {
    SeriesSummary s;
    s.name = name;
    s.count = values.size();
    if (values.empty())
        return s;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    auto pct = [&](double q) {
        const std::size_t idx =
            static_cast<std::size_t>(std::llround(q * static_cast<double>(values.size() - 1)));
        return values[idx];
    };
    s.mean = sum / static_cast<double>(values.size());
    s.min = values.front();
    s.p10 = pct(0.10);
    s.p50 = pct(0.50);
    s.p90 = pct(0.90);
    s.max = values.back();
    return s;
}

} // namespace detail

// Aggregates a manifest into summary.csv, omega_hist.csv and scatter.csv
// under out_dir.
inline ReportOutcome report(const std::string& manifest_path, const std::string& out_dir) {
    ManifestReadResult manifest = read_manifest(manifest_path);
    fs::create_directories(out_dir);
    ReportOutcome out;
    out.errors = manifest.errors;
    out.record_count = manifest.records.size();

    std::vector<double> brightness, tv, psnr_vals, ssim_vals, color, omega, sharp, colorful;
    for (const auto& r : manifest.records) {
        brightness.push_back(r.mean_brightness);
        if (r.tv)
            tv.push_back(*r.tv);
        if (r.psnr && std::isfinite(*r.psnr))
            psnr_vals.push_back(*r.psnr);
        if (r.ssim)
            ssim_vals.push_back(*r.ssim);
        if (r.color_distance)
            color.push_back(*r.color_distance);
        omega.push_back(r.blend.omega_m);
        sharp.push_back(r.pattern_sharpness);
        colorful.push_back(r.pattern_colorfulness);
    }
    out.summaries.push_back(detail::summarize_series("mean_brightness", brightness));
    out.summaries.push_back(detail::summarize_series("tv", tv));
    out.summaries.push_back(detail::summarize_series("psnr_finite", psnr_vals));
    out.summaries.push_back(detail::summarize_series("ssim", ssim_vals));
    out.summaries.push_back(detail::summarize_series("color_distance", color));
    out.summaries.push_back(detail::summarize_series("omega_m", omega));
    out.summaries.push_back(detail::summarize_series("pattern_sharpness", sharp));
    out.summaries.push_back(detail::summarize_series("pattern_colorfulness", colorful));

    {
        std::ofstream csv((fs::path(out_dir) / "summary.csv").string(), std::ios::binary);
        if (!csv)
            throw std::runtime_error("cannot write summary.csv");
        csv << "metric,count,mean,min,p10,p50,p90,max\n";
        for (const auto& s : out.summaries) {
            if (s.count == 0) {
                csv << s.name << ",0,,,,,,\n";
                continue;
            }
            csv << s.name << "," << s.count << "," << fmt_number(s.mean) << ","
                << fmt_number(s.min) << "," << fmt_number(s.p10) << "," << fmt_number(s.p50)
                << "," << fmt_number(s.p90) << "," << fmt_number(s.max) << "\n";
        }
    }
    {
        std::ofstream csv((fs::path(out_dir) / "omega_hist.csv").string(), std::ios::binary);
        if (!csv)
            throw std::runtime_error("cannot write omega_hist.csv");
        csv << "bin_lo,bin_hi,count\n";
        if (!omega.empty()) {
            const double lo = *std::min_element(omega.begin(), omega.end());
            const double hi = *std::max_element(omega.begin(), omega.end());
            const int n_bins = 10;
            const double width = hi > lo ? (hi - lo) / n_bins : 1.0;
            std::vector<std::size_t> counts(n_bins, 0);
            for (double v : omega) {
                int b = hi > lo ? static_cast<int>((v - lo) / width) : 0;
                counts[std::min(b, n_bins - 1)]++;
            }
            for (int b = 0; b < n_bins; ++b)
                csv << fmt_number(lo + b * width) << "," << fmt_number(lo + (b + 1) * width)
                    << "," << counts[b] << "\n";
        }
    }
    {
        std::ofstream csv((fs::path(out_dir) / "scatter.csv").string(), std::ios::binary);
        if (!csv)
            throw std::runtime_error("cannot write scatter.csv");
        csv << "sharpness,colorfulness\n";
        for (std::size_t i = 0; i < sharp.size(); ++i)
            csv << fmt_number(sharp[i]) << "," << fmt_number(colorful[i]) << "\n";
    }
    return out;
}

} // namespace moiregen
