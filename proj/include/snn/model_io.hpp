#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "snn/activations.hpp"
#include "snn/error.hpp"
#include "snn/mask.hpp"
#include "snn/network.hpp"

// Model container (.snn), all integers little-endian, all floats raw
// IEEE-754 bit patterns so a round trip is exact:
//
//   magic        "SNN1" (the trailing digit is the format version)
//   num_widths   u32
//   widths       num_widths x u32
//   per weight layer:
//     act_tag    u8 (0 identity, 1 sigmoid, 2 relu, 3 modified-relu,
//                    4 thresholded-sigmoid)
//     eps_count  u32 (0 none, 1 broadcast, or one per neuron)
//     eps        eps_count x f64
//   has_mask     u8
//   parameters   (weights + biases) x f64 in flatten order: all weight
//                matrices layer by layer row-major, then all bias vectors
//                layer by layer
//   mask         has_mask ? one byte (0/1) per weight, same order : absent
//
// The mask sidecar (.mask) is "SNM1", num_widths, widths, then the mask
// bytes.

namespace snn {
namespace detail {

constexpr char kModelMagic[4] = {'S', 'N', 'N', '1'};
constexpr char kMaskMagic[4] = {'S', 'N', 'M', '1'};

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[at_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t{static_cast<unsigned char>(bytes_[at_ + i])} << (8 * i);
        at_ += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= std::uint64_t{static_cast<unsigned char>(bytes_[at_ + i])} << (8 * i);
        at_ += 8;
        double v = 0.0;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void expect_end() {
        if (at_ != bytes_.size())
            throw IoError("payload inconsistency in '" + path_ + "': " +
                          std::to_string(bytes_.size() - at_) + " trailing bytes");
    }

private:
    void need(std::size_t n) {
        if (at_ + n > bytes_.size())
            throw IoError("payload inconsistency in '" + path_ + "': truncated at byte " +
                          std::to_string(at_));
    }
    std::string bytes_;
    std::string path_;
    std::size_t at_ = 0;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void spill(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on '" + path + "'");
}

inline std::uint8_t act_tag(ActKind k) {
    switch (k) {
    case ActKind::Identity: return 0;
    case ActKind::Sigmoid: return 1;
    case ActKind::Relu: return 2;
    case ActKind::ModifiedRelu: return 3;
    case ActKind::ThresholdedSigmoid: return 4;
    }
    throw ValueError("unknown activation kind");
}

inline void check_magic(Reader& r, const char (&magic)[4], const std::string& path) {
    char got[4];
    for (char& c : got) c = static_cast<char>(r.u8());
    if (got[0] != magic[0] || got[1] != magic[1] || got[2] != magic[2]) {
        throw IoError("bad magic in '" + path + "'");
    }
    if (got[3] != magic[3])
        throw IoError("unsupported format version '" + std::string(1, got[3]) + "' in '" + path +
                      "' (supported: " + std::string(1, magic[3]) + ")");
}

} // namespace detail

/// Writes the network (and optional mask) as one canonical byte string;
/// saving a loaded model reproduces the file byte for byte.
inline void save_model(const Network& net, const PruneMask* mask, const std::string& path) {
    if (mask) mask->validate_against(net);
    std::string out;
    out.append(detail::kModelMagic, 4);
    const auto& widths = net.shape().widths;
    detail::put_u32(out, static_cast<std::uint32_t>(widths.size()));
    for (Index w : widths) detail::put_u32(out, static_cast<std::uint32_t>(w));
    for (Index l = 0; l < net.depth(); ++l) {
        const Activation& act = net.layer(l).activation;
        out.push_back(static_cast<char>(detail::act_tag(act.kind())));
        detail::put_u32(out, static_cast<std::uint32_t>(act.epsilon().size()));
        for (Index i = 0; i < act.epsilon().size(); ++i) detail::put_f64(out, act.epsilon()[i]);
    }
    out.push_back(mask ? 1 : 0);
    for (Index l = 0; l < net.depth(); ++l) {
        const Matrix& w = net.layer(l).weights;
        for (Index j = 0; j < w.rows(); ++j)
            for (Index u = 0; u < w.cols(); ++u) detail::put_f64(out, w(j, u));
    }
    for (Index l = 0; l < net.depth(); ++l) {
        const Vector& b = net.layer(l).biases;
        for (Index j = 0; j < b.size(); ++j) detail::put_f64(out, b[j]);
    }
    if (mask) {
        for (const BoolMatrix& m : mask->layers)
            for (Index j = 0; j < m.rows(); ++j)
                for (Index u = 0; u < m.cols(); ++u) out.push_back(m(j, u) ? 1 : 0);
    }
    detail::spill(path, out);
}

struct LoadedModel {
    Network network;
    std::optional<PruneMask> mask;
};

inline LoadedModel load_model(const std::string& path) {
    detail::Reader r(detail::slurp(path), path);
    detail::check_magic(r, detail::kModelMagic, path);

    const std::uint32_t num_widths = r.u32();
    if (num_widths < 2 || num_widths > 1024)
        throw IoError("shape inconsistency in '" + path + "': " + std::to_string(num_widths) +
                      " layer widths");
    std::vector<Index> widths(num_widths);
    for (auto& w : widths) {
        w = static_cast<Index>(r.u32());
        if (w < 1) throw IoError("shape inconsistency in '" + path + "': zero layer width");
    }
    NetworkShape shape(widths);

    std::vector<Activation> activations;
    for (Index l = 0; l < shape.depth(); ++l) {
        const std::uint8_t tag = r.u8();
        const std::uint32_t eps_count = r.u32();
        if (eps_count != 0 && eps_count != 1 &&
            eps_count != static_cast<std::uint32_t>(shape.widths[l + 1]))
            throw IoError("shape inconsistency in '" + path + "': layer " + std::to_string(l) +
                          " has " + std::to_string(eps_count) + " epsilon values");
        Vector eps(eps_count);
        for (std::uint32_t i = 0; i < eps_count; ++i) eps[static_cast<Index>(i)] = r.f64();
        if ((tag == 3 || tag == 4) && eps_count == 0)
            throw IoError("shape inconsistency in '" + path + "': thresholded activation without epsilon");
        switch (tag) {
        case 0: activations.emplace_back(ActKind::Identity); break;
        case 1: activations.emplace_back(ActKind::Sigmoid); break;
        case 2: activations.emplace_back(ActKind::Relu); break;
        case 3: activations.emplace_back(ActKind::ModifiedRelu, eps); break;
        case 4: activations.emplace_back(ActKind::ThresholdedSigmoid, eps); break;
        default:
            throw IoError("unknown activation tag " + std::to_string(tag) + " in '" + path + "'");
        }
        if (!kind_has_threshold(activations.back().kind()) && eps_count != 0)
            throw IoError("shape inconsistency in '" + path + "': epsilon on a plain activation");
    }

    const std::uint8_t has_mask = r.u8();
    if (has_mask > 1) throw IoError("shape inconsistency in '" + path + "': bad mask flag");

    std::vector<LayerParams> layers;
    for (Index l = 0; l < shape.depth(); ++l)
        layers.push_back({Matrix(shape.widths[l + 1], shape.widths[l]),
                          Vector(shape.widths[l + 1]),
                          activations[static_cast<std::size_t>(l)]});
    for (auto& layer : layers)
        for (Index j = 0; j < layer.weights.rows(); ++j)
            for (Index u = 0; u < layer.weights.cols(); ++u) layer.weights(j, u) = r.f64();
    for (auto& layer : layers)
        for (Index j = 0; j < layer.biases.size(); ++j) layer.biases[j] = r.f64();

    LoadedModel result{Network(shape, std::move(layers)), std::nullopt};
    if (has_mask) {
        PruneMask mask;
        for (Index l = 0; l < shape.depth(); ++l) {
            BoolMatrix m(shape.widths[l + 1], shape.widths[l]);
            for (Index j = 0; j < m.rows(); ++j)
                for (Index u = 0; u < m.cols(); ++u) m(j, u) = r.u8() != 0;
            mask.layers.push_back(std::move(m));
        }
        r.expect_end();
        mask.validate_against(result.network); // frozen entries must hold exact zeros
        result.mask = std::move(mask);
    } else {
        r.expect_end();
    }
    for (const auto& layer : result.network.layers())
        if (!all_finite(layer.weights) || !all_finite(layer.biases))
            throw IoError("non-finite parameter in '" + path + "'");
    return result;
}

inline void save_mask(const PruneMask& mask, const NetworkShape& shape, const std::string& path) {
    std::string out;
    out.append(detail::kMaskMagic, 4);
    detail::put_u32(out, static_cast<std::uint32_t>(shape.widths.size()));
    for (Index w : shape.widths) detail::put_u32(out, static_cast<std::uint32_t>(w));
    for (const BoolMatrix& m : mask.layers)
        for (Index j = 0; j < m.rows(); ++j)
            for (Index u = 0; u < m.cols(); ++u) out.push_back(m(j, u) ? 1 : 0);
    detail::spill(path, out);
}

inline PruneMask load_mask(const std::string& path) {
    detail::Reader r(detail::slurp(path), path);
    detail::check_magic(r, detail::kMaskMagic, path);
    const std::uint32_t num_widths = r.u32();
    if (num_widths < 2 || num_widths > 1024)
        throw IoError("shape inconsistency in '" + path + "'");
    std::vector<Index> widths(num_widths);
    for (auto& w : widths) w = static_cast<Index>(r.u32());
    NetworkShape shape(widths);
    PruneMask mask;
    for (Index l = 0; l < shape.depth(); ++l) {
        BoolMatrix m(shape.widths[l + 1], shape.widths[l]);
        for (Index j = 0; j < m.rows(); ++j)
            for (Index u = 0; u < m.cols(); ++u) m(j, u) = r.u8() != 0;
        mask.layers.push_back(std::move(m));
    }
    r.expect_end();
    return mask;
}

} // namespace snn
