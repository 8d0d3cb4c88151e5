#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "snn/backprop.hpp"
#include "snn/error.hpp"
#include "snn/random.hpp"
#include "snn/tensor.hpp"

namespace snn {

struct Dataset {
    std::vector<LabeledSample> samples;
    Index input_dim = 0;
    Index num_classes = 0;
};

inline Vector one_hot(Index label, Index num_classes) {
    if (label < 0 || label >= num_classes)
        throw ValueError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(num_classes) + " classes");
    Vector v = Vector::Zero(num_classes);
    v[label] = 1.0;
    return v;
}

namespace detail {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

inline std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IoError("truncated file while reading " + what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

inline void write_be_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace detail

/// Reads the big-endian image/label container: images are
/// [0x00000803, count, rows, cols] followed by count*rows*cols pixel bytes,
/// labels are [0x00000801, count] followed by count class bytes. Pixels are
/// scaled by 1/255, labels one-hot encoded.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        Index num_classes = 10) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open image file '" + images_path + "'");
    const std::uint32_t img_magic = detail::read_be_u32(img, "image magic");
    if (img_magic != detail::kIdxImagesMagic)
        throw IoError("bad magic in '" + images_path + "': got " + std::to_string(img_magic) +
                      ", expected " + std::to_string(detail::kIdxImagesMagic));
    const std::uint32_t img_count = detail::read_be_u32(img, "image count");
    const std::uint32_t rows = detail::read_be_u32(img, "row count");
    const std::uint32_t cols = detail::read_be_u32(img, "column count");

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open label file '" + labels_path + "'");
    const std::uint32_t lab_magic = detail::read_be_u32(lab, "label magic");
    if (lab_magic != detail::kIdxLabelsMagic)
        throw IoError("bad magic in '" + labels_path + "': got " + std::to_string(lab_magic) +
                      ", expected " + std::to_string(detail::kIdxLabelsMagic));
    const std::uint32_t lab_count = detail::read_be_u32(lab, "label count");
    if (img_count != lab_count)
        throw IoError("count mismatch: " + std::to_string(img_count) + " images vs " +
                      std::to_string(lab_count) + " labels");

    Dataset ds;
    ds.input_dim = static_cast<Index>(rows) * static_cast<Index>(cols);
    ds.num_classes = num_classes;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(ds.input_dim));
    for (std::uint32_t i = 0; i < img_count; ++i) {
        if (!img.read(reinterpret_cast<char*>(pixels.data()), ds.input_dim))
            throw IoError("truncated image payload in '" + images_path + "' at image " +
                          std::to_string(i));
        char label_byte = 0;
        if (!lab.get(label_byte))
            throw IoError("truncated label payload in '" + labels_path + "' at label " +
                          std::to_string(i));
        const auto label = static_cast<Index>(static_cast<unsigned char>(label_byte));
        if (label >= num_classes)
            throw IoError("label " + std::to_string(label) + " at index " + std::to_string(i) +
                          " exceeds class count " + std::to_string(num_classes));
        Vector input(ds.input_dim);
        for (Index p = 0; p < ds.input_dim; ++p)
            input[p] = pixels[static_cast<std::size_t>(p)] / 255.0;
        ds.samples.push_back({std::move(input), one_hot(label, num_classes)});
    }
    return ds;
}

/// Test-fixture writer for the same container; inverse of load_idx on the
/// raw bytes.
inline void write_idx(const std::string& images_path, const std::string& labels_path,
                      const std::vector<std::vector<unsigned char>>& images, Index rows,
                      Index cols, const std::vector<unsigned char>& labels) {
    if (images.size() != labels.size())
        throw ValueError("write_idx: " + std::to_string(images.size()) + " images vs " +
                         std::to_string(labels.size()) + " labels");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot write image file '" + images_path + "'");
    detail::write_be_u32(img, detail::kIdxImagesMagic);
    detail::write_be_u32(img, static_cast<std::uint32_t>(images.size()));
    detail::write_be_u32(img, static_cast<std::uint32_t>(rows));
    detail::write_be_u32(img, static_cast<std::uint32_t>(cols));
    for (const auto& image : images) {
        if (static_cast<Index>(image.size()) != rows * cols)
            throw ValueError("write_idx: image size does not match rows*cols");
        img.write(reinterpret_cast<const char*>(image.data()),
                  static_cast<std::streamsize>(image.size()));
    }
    if (!img) throw IoError("write failure on '" + images_path + "'");

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot write label file '" + labels_path + "'");
    detail::write_be_u32(lab, detail::kIdxLabelsMagic);
    detail::write_be_u32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
    if (!lab) throw IoError("write failure on '" + labels_path + "'");
}

/// Reads rows of `label,feature1,...,featureN`. When any |feature| exceeds 1
/// the whole file is rescaled by the largest absolute value; afterwards all
/// features must lie in [0, 1]. Pass num_classes <= 0 to infer it as
/// max label + 1.
inline Dataset load_csv(const std::string& path, Index num_classes = 0) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open csv file '" + path + "'");
    std::vector<Index> labels;
    std::vector<std::vector<double>> features;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<double> row;
        std::size_t at = 0;
        while (at <= line.size()) {
            const std::size_t comma = line.find(',', at);
            const std::size_t end = comma == std::string::npos ? line.size() : comma;
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(line.data() + at, line.data() + end, value);
            if (ec != std::errc{} || ptr != line.data() + end)
                throw ValueError("non-numeric field at line " + std::to_string(line_no) + " in '" +
                                 path + "'");
            row.push_back(value);
            if (comma == std::string::npos) break;
            at = comma + 1;
        }
        if (row.size() < 2)
            throw ValueError("row with no features at line " + std::to_string(line_no));
        if (!features.empty() && row.size() - 1 != features.front().size())
            throw ValueError("ragged row at line " + std::to_string(line_no) + ": expected " +
                             std::to_string(features.front().size()) + " features, got " +
                             std::to_string(row.size() - 1));
        const double label_field = row.front();
        const auto label = static_cast<Index>(label_field);
        if (static_cast<double>(label) != label_field || label < 0)
            throw ValueError("label must be a nonnegative integer at line " +
                             std::to_string(line_no));
        labels.push_back(label);
        features.emplace_back(row.begin() + 1, row.end());
    }
    if (labels.empty()) throw ValueError("csv file '" + path + "' has no rows");

    if (num_classes <= 0) num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= num_classes)
            throw ValueError("label " + std::to_string(labels[i]) + " out of range for " +
                             std::to_string(num_classes) + " classes");

    double max_abs = 0.0;
    for (const auto& row : features)
        for (double v : row) max_abs = std::max(max_abs, std::abs(v));
    const double scale = max_abs > 1.0 ? 1.0 / max_abs : 1.0;

    Dataset ds;
    ds.input_dim = static_cast<Index>(features.front().size());
    ds.num_classes = num_classes;
    for (std::size_t i = 0; i < features.size(); ++i) {
        Vector input(ds.input_dim);
        for (Index j = 0; j < ds.input_dim; ++j) {
            const double v = features[i][static_cast<std::size_t>(j)] * scale;
            if (v < 0.0 || v > 1.0)
                throw ValueError("feature value " + std::to_string(v) +
                                 " outside [0, 1] after normalization");
            input[j] = v;
        }
        ds.samples.push_back({std::move(input), one_hot(labels[i], num_classes)});
    }
    return ds;
}

/// Two gaussian blobs around (0.25, 0.25) and (0.75, 0.75), labeled by blob.
/// Points are clamped into the unit square.
inline Dataset synth_two_clusters(Index n, std::uint64_t seed, double noise = 0.08) {
    if (n < 4) throw ValueError("synthetic dataset needs at least 4 points");
    Rng rng(seed);
    Dataset ds;
    ds.input_dim = 2;
    ds.num_classes = 2;
    for (Index i = 0; i < n; ++i) {
        const Index label = i % 2;
        const double cx = label == 0 ? 0.25 : 0.75;
        Vector p(2);
        p[0] = std::clamp(cx + noise * rng.gaussian(), 0.0, 1.0);
        p[1] = std::clamp(cx + noise * rng.gaussian(), 0.0, 1.0);
        ds.samples.push_back({std::move(p), one_hot(label, 2)});
    }
    return ds;
}

/// The four corners of the unit square with uniform jitter, labeled by
/// coordinate parity.
inline Dataset synth_xor(Index n, std::uint64_t seed, double jitter = 0.05) {
    if (n < 4) throw ValueError("synthetic dataset needs at least 4 points");
    Rng rng(seed);
    Dataset ds;
    ds.input_dim = 2;
    ds.num_classes = 2;
    for (Index i = 0; i < n; ++i) {
        const double cx = (i % 4 == 1 || i % 4 == 3) ? 1.0 : 0.0;
        const double cy = (i % 4 == 2 || i % 4 == 3) ? 1.0 : 0.0;
        const Index label = (cx != cy) ? 1 : 0;
        Vector p(2);
        p[0] = std::clamp(cx + rng.uniform(-jitter, jitter), 0.0, 1.0);
        p[1] = std::clamp(cy + rng.uniform(-jitter, jitter), 0.0, 1.0);
        ds.samples.push_back({std::move(p), one_hot(label, 2)});
    }
    return ds;
}

inline Dataset synth(const std::string& kind, Index n, std::uint64_t seed) {
    if (kind == "two-clusters") return synth_two_clusters(n, seed);
    if (kind == "xor") return synth_xor(n, seed);
    throw ValueError("unknown synthetic dataset kind '" + kind + "'");
}

} // namespace snn
