#include "positq/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "positq/errors.hpp"

namespace positq {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

int parse_int(std::string_view text, std::string_view context) {
    int value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
        throw ConfigError(fmt::format("{}: '{}' is not an integer", context, text));
    }
    return value;
}

// "A..B" or "N".
std::pair<int, int> parse_range(std::string_view text, std::string_view context) {
    const std::size_t dots = text.find("..");
    if (dots == std::string_view::npos) {
        const int v = parse_int(text, context);
        return {v, v};
    }
    const int lo = parse_int(text.substr(0, dots), context);
    const int hi = parse_int(text.substr(dots + 2), context);
    if (lo > hi) throw ConfigError(fmt::format("{}: empty range {}..{}", context, lo, hi));
    return {lo, hi};
}

bool family_less(const SweepRecord& a, const SweepRecord& b) {
    const auto fa = a.codec.family();
    const auto fb = b.codec.family();
    if (fa != fb) return fa < fb;
    return a.codec.bits() < b.codec.bits();
}

std::string format_number(double v, std::string_view spec) {
    if (std::isnan(v)) return "nan";
    return fmt::format(fmt::runtime(spec), v);
}

bool is_posit_family(const Codec& codec) {
    return codec.kind() == CodecKind::kPosit || codec.kind() == CodecKind::kNormalizedPosit;
}

}  // namespace

std::vector<Codec> parse_codec_list(std::string_view spec) {
    std::vector<Codec> codecs;
    for (std::string_view group : split(spec, ',')) {
        if (group.empty()) throw ConfigError(fmt::format("codec list '{}' has an empty entry", spec));
        const auto tokens = split(group, ':');
        const std::string_view family = tokens.front();

        std::optional<std::pair<int, int>> bits;
        std::optional<std::pair<int, int>> fraction;
        int es = 0;
        bool normalized = false;
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            const std::string_view tok = tokens[i];
            if (tok == "normalized") {
                normalized = true;
            } else if (tok.starts_with("es=")) {
                es = parse_int(tok.substr(3), group);
            } else if (tok.starts_with("bits=")) {
                bits = parse_range(tok.substr(5), group);
            } else if (tok.starts_with("f=")) {
                fraction = parse_range(tok.substr(2), group);
            } else {
                throw ConfigError(fmt::format("{}: unknown option '{}'", group, tok));
            }
        }

        if (family == "identity") {
            if (tokens.size() > 1) throw ConfigError(fmt::format("{}: identity takes no options", group));
            codecs.push_back(Codec::identity());
        } else if (family == "posit") {
            if (!bits) throw ConfigError(fmt::format("{}: posit needs bits=A..B", group));
            if (fraction) throw ConfigError(fmt::format("{}: f= applies to fixed only", group));
            for (int n = bits->first; n <= bits->second; ++n) {
                const PositFormat format(n, es);
                codecs.push_back(normalized ? Codec::normalized_posit(format) : Codec::posit(format));
            }
        } else if (family == "fixed") {
            if (bits.has_value() == fraction.has_value()) {
                throw ConfigError(fmt::format("{}: fixed needs exactly one of f=A..B or bits=A..B", group));
            }
            if (normalized || es != 0) throw ConfigError(fmt::format("{}: es/normalized apply to posit only", group));
            const auto [lo, hi] = fraction ? *fraction : std::pair{bits->first - 1, bits->second - 1};
            for (int f = lo; f <= hi; ++f) codecs.push_back(Codec::fixed(FixedFormat(f)));
        } else {
            throw ConfigError(fmt::format("unknown codec family '{}'", family));
        }
    }
    return codecs;
}

SweepResult run_sweep(const SweepConfig& config, const ModelBundle& bundle, const MnistDataset& dataset) {
    if (config.limit == 0) throw ConfigError("--limit must be >= 1");
    if (config.limit > dataset.size()) {
        throw ConfigError(fmt::format("--limit {} exceeds the {} images available", config.limit, dataset.size()));
    }
    if (bundle.pixel_scale != kPixelScale) {
        throw ConfigError(fmt::format("model '{}' expects pixels / {}, the dataset provides pixels / {}", bundle.name,
                                      bundle.pixel_scale, kPixelScale));
    }
    const unsigned jobs = std::max(1u, config.jobs);

    SweepResult result;
    const Model& model = bundle.model;
    result.baseline_top1 = evaluate_top1(model, dataset, config.limit, jobs);

    std::vector<Codec> points;
    for (const Codec& c : config.codecs) {
        if (c.kind() == CodecKind::kIdentity) continue;
        if (std::find(points.begin(), points.end(), c) == points.end()) points.push_back(c);
    }

    std::vector<SweepRecord> records(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            SweepRecord& rec = records[i];
            rec.codec = points[i];
            try {
                const QuantizedModel q = quantize_model(model, points[i], config.skip_bias);
                rec.max_abs_error = q.report.max_abs_error;
                rec.top1 = evaluate_top1(q.model, dataset, config.limit, 1);
                rec.relative_accuracy = result.baseline_top1 > 0.0 ? rec.top1 / result.baseline_top1 : NAN;
            } catch (const Error& e) {
                rec.top1 = rec.relative_accuracy = rec.max_abs_error = NAN;
                rec.failure = e.what();
            }
        }
    };
    {
        std::vector<std::jthread> threads;
        const std::size_t count = std::min<std::size_t>(jobs, std::max<std::size_t>(points.size(), 1));
        for (std::size_t t = 0; t < count; ++t) threads.emplace_back(worker);
    }

    SweepRecord baseline;
    baseline.top1 = result.baseline_top1;
    baseline.relative_accuracy = 1.0;
    records.push_back(baseline);
    std::sort(records.begin(), records.end(), family_less);
    result.records = std::move(records);
    return result;
}

SweepResult run_sweep(const SweepConfig& config) {
    const ModelBundle bundle = load_manifest(config.manifest);
    const MnistDataset dataset = load_mnist(config.images, config.labels);
    SweepResult result = run_sweep(config, bundle, dataset);
    if (!config.output.empty()) write_csv(result.records, config.output);
    return result;
}

std::string to_csv(const std::vector<SweepRecord>& records) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const SweepRecord& r : records) {
        out += fmt::format("{},{},{},{},{}\n", r.codec.family(), r.codec.bits(), format_number(r.top1, "{:.6f}"),
                           format_number(r.relative_accuracy, "{:.6f}"), format_number(r.max_abs_error, "{:.9g}"));
    }
    return out;
}

void write_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    out << to_csv(records);
    if (!out) throw ConfigError(fmt::format("{}: cannot write CSV", path.string()));
}

SweepSummary summarize(const std::vector<SweepRecord>& records, double threshold) {
    SweepSummary summary;
    std::vector<SweepRecord> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(), family_less);

    for (const SweepRecord& r : sorted) {
        if (r.codec.kind() == CodecKind::kIdentity) continue;
        const std::string family = r.codec.family();
        if (summary.families.empty() || summary.families.back().family != family) {
            summary.families.push_back({family, std::nullopt});
        }
        auto& entry = summary.families.back();
        if (!entry.min_bits && !r.failure && r.relative_accuracy >= threshold) entry.min_bits = r.codec.bits();
    }

    for (const SweepRecord& r : sorted) {
        if (r.codec.kind() == CodecKind::kIdentity) continue;
        const auto it = std::find_if(summary.families.begin(), summary.families.end(),
                                     [&](const FamilyThreshold& f) { return f.family == r.codec.family(); });
        if (r.codec.kind() == CodecKind::kFixed) {
            summary.fixed = *it;
        } else if (is_posit_family(r.codec)) {
            // Prefer the posit family that reaches the threshold with the fewest bits.
            const bool better = !summary.posit || (it->min_bits && (!summary.posit->min_bits ||
                                                                    *it->min_bits < *summary.posit->min_bits));
            if (better) summary.posit = *it;
        }
    }

    std::string text = fmt::format("relative accuracy threshold: {:.2f}\n", threshold);
    for (const auto& f : summary.families) {
        text += f.min_bits ? fmt::format("{}: {} bits\n", f.family, *f.min_bits)
                           : fmt::format("{}: not achieved\n", f.family);
    }
    if (!summary.posit || !summary.fixed) {
        text += "memory reduction: not achieved (needs both a posit and a fixed-point family)\n";
    } else if (!summary.posit->min_bits || !summary.fixed->min_bits) {
        text += fmt::format("memory reduction: not achieved ({} or {} never reaches the threshold)\n",
                            summary.posit->family, summary.fixed->family);
    } else if (*summary.posit->min_bits > *summary.fixed->min_bits) {
        text += fmt::format("memory reduction: none ({} needs {} bits, {} needs {} bits)\n", summary.posit->family,
                            *summary.posit->min_bits, summary.fixed->family, *summary.fixed->min_bits);
    } else {
        summary.reduction_percent = memory_reduction(*summary.posit->min_bits, *summary.fixed->min_bits);
        text += fmt::format("memory reduction ({} {} bits vs {} {} bits): {}\n", summary.posit->family,
                            *summary.posit->min_bits, summary.fixed->family, *summary.fixed->min_bits,
                            format_percent(*summary.reduction_percent));
    }
    summary.text = std::move(text);
    return summary;
}

}  // namespace positq
