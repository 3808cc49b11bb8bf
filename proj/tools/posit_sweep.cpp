// posit_sweep: accuracy vs. weight bit-width for posit and fixed-point codecs.
//
//   posit_sweep --manifest models/lenet/lenet.json \
//               --images data/mnist/t10k-images-idx3-ubyte \
//               --labels data/mnist/t10k-labels-idx1-ubyte \
//               --codecs "posit:es=0:normalized:bits=2..8,fixed:f=0..15" \
//               --out sweep.csv --summary

#include <cstdio>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "positq/errors.hpp"
#include "positq/sweep.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Quantize model weights with posit / fixed-point codecs and measure top-1 accuracy"};

    positq::SweepConfig config;
    std::string manifest, images, labels, output;
    std::string codecs(positq::kDefaultCodecs);
    bool print_summary = false;

    app.add_option("--manifest", manifest, "Model manifest (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--images", images, "IDX image file")->required()->check(CLI::ExistingFile);
    app.add_option("--labels", labels, "IDX label file")->required()->check(CLI::ExistingFile);
    app.add_option("--limit", config.limit, "Number of images to evaluate")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--codecs", codecs, "Codec list, e.g. \"posit:es=0:normalized:bits=2..8,fixed:f=0..15\"")
        ->capture_default_str();
    app.add_option("--out", output, "CSV output path");
    app.add_option("--jobs", config.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_flag("--skip-bias", config.skip_bias, "Keep biases in float32; quantize weights only");
    app.add_flag("--summary", print_summary, "Print the minimal-bits and memory-reduction summary");

    CLI11_PARSE(app, argc, argv);

    try {
        config.manifest = manifest;
        config.images = images;
        config.labels = labels;
        config.output = output;
        config.codecs = positq::parse_codec_list(codecs);

        const positq::SweepResult result = positq::run_sweep(config);
        if (output.empty()) fmt::print("{}", positq::to_csv(result.records));
        for (const auto& r : result.records) {
            if (r.failure) fmt::print(stderr, "point {} failed: {}\n", r.codec.label(), *r.failure);
        }
        if (print_summary) fmt::print("{}", positq::summarize(result.records).text);
    } catch (const positq::Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
