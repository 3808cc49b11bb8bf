#pragma once

// Bit-width sweep: quantize the weights with each codec, evaluate top-1 on the
// dataset, and compare codec families by the smallest width that stays within
// 1% of the float baseline.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "positq/mnist.hpp"
#include "positq/model_io.hpp"
#include "positq/quantizer.hpp"

namespace positq {

inline constexpr double kRelativeAccuracyThreshold = 0.99;

// Comma-separated codec groups, each a family followed by ':' options:
//   identity
//   posit[:es=E][:normalized]:bits=A..B      (or bits=N)
//   fixed:f=A..B   or   fixed:bits=A..B      (bits = 1 + f)
// Throws ConfigError on syntax errors and FormatError on illegal widths.
std::vector<Codec> parse_codec_list(std::string_view spec);

inline constexpr std::string_view kDefaultCodecs = "posit:es=0:normalized:bits=2..8,fixed:f=0..15";

struct SweepConfig {
    std::filesystem::path manifest;
    std::filesystem::path images;
    std::filesystem::path labels;
    std::size_t limit = 10000;
    std::vector<Codec> codecs;
    std::filesystem::path output;  // empty: no CSV written
    unsigned jobs = 1;
    bool skip_bias = false;
};

struct SweepRecord {
    Codec codec = Codec::identity();
    double top1 = 0.0;
    double relative_accuracy = 0.0;
    double max_abs_error = 0.0;
    std::optional<std::string> failure;  // set when the point aborted
};

struct SweepResult {
    double baseline_top1 = 0.0;
    std::vector<SweepRecord> records;  // sorted by (family, bits), baseline included
};

// Evaluates the baseline and every codec point. Points run on up to config.jobs
// threads; the result is identical for any job count.
SweepResult run_sweep(const SweepConfig& config, const ModelBundle& bundle, const MnistDataset& dataset);

// Loads the manifest and dataset named in the config, runs the sweep and writes
// the CSV if config.output is set.
SweepResult run_sweep(const SweepConfig& config);

inline constexpr std::string_view kCsvHeader = "codec,bits,top1,relative_accuracy,max_abs_error";

std::string to_csv(const std::vector<SweepRecord>& records);
void write_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path);

struct FamilyThreshold {
    std::string family;
    std::optional<int> min_bits;  // smallest width with relative accuracy >= threshold
};

struct SweepSummary {
    std::vector<FamilyThreshold> families;
    std::optional<FamilyThreshold> posit;  // best posit-type family, if any
    std::optional<FamilyThreshold> fixed;
    std::optional<double> reduction_percent;
    std::string text;
};

SweepSummary summarize(const std::vector<SweepRecord>& records, double threshold = kRelativeAccuracyThreshold);

}  // namespace positq
