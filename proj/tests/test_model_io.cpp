#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <unistd.h>

#include "snn/model_io.hpp"
#include "snn/sparsity.hpp"

using namespace snn;

namespace {

class ModelIoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("snn_model_io_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    }

    std::filesystem::path dir_;
};

std::vector<Activation> sigmoids(Index k) {
    return std::vector<Activation>(static_cast<std::size_t>(k), Activation(ActKind::Sigmoid));
}

bool bitwise_identical(const Network& a, const Network& b) {
    if (!(a.shape() == b.shape())) return false;
    for (Index l = 0; l < a.depth(); ++l) {
        const Matrix &wa = a.layer(l).weights, &wb = b.layer(l).weights;
        for (Index j = 0; j < wa.rows(); ++j)
            for (Index u = 0; u < wa.cols(); ++u)
                if (std::memcmp(&wa(j, u), &wb(j, u), 8) != 0) return false;
        const Vector &ba = a.layer(l).biases, &bb = b.layer(l).biases;
        for (Index j = 0; j < ba.size(); ++j)
            if (std::memcmp(&ba[j], &bb[j], 8) != 0) return false;
    }
    return true;
}

} // namespace

TEST_F(ModelIoTest, SaveLoadSaveIsByteStable) {
    const Network net = init_network({3, 4, 2}, sigmoids(2), 12);
    save_model(net, nullptr, path("a.snn"));
    const LoadedModel loaded = load_model(path("a.snn"));
    save_model(loaded.network, nullptr, path("b.snn"));
    EXPECT_EQ(slurp(path("a.snn")), slurp(path("b.snn")));
}

TEST_F(ModelIoTest, HeaderDeclaresShapeAndPayloadSizeMatches) {
    const Network net = init_network({3, 2, 1}, sigmoids(2), 4);
    save_model(net, nullptr, path("m.snn"));
    const std::string bytes = slurp(path("m.snn"));
    // magic(4) + num_widths(4) + widths(12) + 2 layers * (tag 1 + eps_count 4)
    // + has_mask(1) + (8 weights + 3 biases) * 8
    EXPECT_EQ(bytes.size(), 4u + 4u + 12u + 2u * 5u + 1u + 11u * 8u);
    EXPECT_EQ(bytes.substr(0, 4), "SNN1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 3u); // 3 widths, little-endian
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 1u);
}

TEST_F(ModelIoTest, UnwritablePathFails) {
    const Network net = init_network({2, 2}, sigmoids(1), 1);
    EXPECT_THROW(save_model(net, nullptr, "/nonexistent-dir/model.snn"), IoError);
}

TEST_F(ModelIoTest, RoundTripIsBitwiseOnTenSeededNetworks) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const NetworkShape shape = seed % 2 ? NetworkShape{4, 3, 2} : NetworkShape{2, 5, 4, 1};
        Network net = init_network(shape, sigmoids(shape.depth()), seed);
        const PruneResult pruned = prune_to_target(net, 0.3);
        save_model(pruned.network, &pruned.mask, path("rt.snn"));
        const LoadedModel loaded = load_model(path("rt.snn"));
        EXPECT_TRUE(bitwise_identical(pruned.network, loaded.network)) << "seed " << seed;
        ASSERT_TRUE(loaded.mask.has_value());
        for (std::size_t l = 0; l < pruned.mask.layers.size(); ++l)
            EXPECT_TRUE((pruned.mask.layers[l] == loaded.mask->layers[l]).all());
    }
}

TEST_F(ModelIoTest, NegativeZeroAndSubnormalsSurvive) {
    std::vector<LayerParams> layers;
    Matrix w(2, 2);
    w << -0.0, std::numeric_limits<double>::denorm_min(), -4.9406564584124654e-324, 1.0;
    Vector b(2);
    b << -0.0, 2.2250738585072014e-308; // smallest normal
    layers.push_back({w, b, Activation(ActKind::ThresholdedSigmoid, 0.25)});
    const Network net(NetworkShape{2, 2}, std::move(layers));
    save_model(net, nullptr, path("weird.snn"));
    const LoadedModel loaded = load_model(path("weird.snn"));
    EXPECT_TRUE(bitwise_identical(net, loaded.network));
    EXPECT_TRUE(std::signbit(loaded.network.layer(0).weights(0, 0)));
    EXPECT_EQ(loaded.network.layer(0).activation.kind(), ActKind::ThresholdedSigmoid);
    EXPECT_EQ(loaded.network.layer(0).activation.epsilon_at(1), 0.25);
}

TEST_F(ModelIoTest, PerNeuronEpsilonRoundTrips) {
    Vector eps(3);
    eps << 0.1, 0.0, 2.5;
    std::vector<LayerParams> layers;
    layers.push_back({Matrix::Constant(3, 2, 0.5), Vector::Zero(3),
                      Activation(ActKind::ModifiedRelu, eps)});
    const Network net(NetworkShape{2, 3}, std::move(layers));
    save_model(net, nullptr, path("eps.snn"));
    const LoadedModel loaded = load_model(path("eps.snn"));
    EXPECT_TRUE(loaded.network.layer(0).activation.epsilon() == eps);
}

TEST_F(ModelIoTest, TruncatedFileDiagnosed) {
    const Network net = init_network({3, 2}, sigmoids(1), 2);
    save_model(net, nullptr, path("full.snn"));
    const std::string bytes = slurp(path("full.snn"));
    std::ofstream out(path("cut.snn"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
    out.close();
    try {
        load_model(path("cut.snn"));
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("payload inconsistency"), std::string::npos);
    }
}

TEST_F(ModelIoTest, TrailingBytesDiagnosed) {
    const Network net = init_network({3, 2}, sigmoids(1), 2);
    save_model(net, nullptr, path("full.snn"));
    std::ofstream out(path("fat.snn"), std::ios::binary);
    const std::string bytes = slurp(path("full.snn"));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.write("xx", 2);
    out.close();
    EXPECT_THROW(load_model(path("fat.snn")), IoError);
}

TEST_F(ModelIoTest, MaskViolationDiagnosed) {
    // mask says frozen but the stored weight is 0.3
    Network net = init_network({2, 2}, sigmoids(1), 3);
    net.layer(0).weights(0, 0) = 0.0;
    PruneMask mask = PruneMask::all_active(net.shape());
    mask.layers[0](0, 0) = false;
    save_model(net, &mask, path("ok.snn"));

    std::string bytes = slurp(path("ok.snn"));
    // first parameter starts after magic(4) + num_widths(4) + widths(8)
    // + 1 layer * (tag 1 + eps_count 4) + has_mask(1)
    const std::size_t param_at = 4 + 4 + 8 + 5 + 1;
    const double bad = 0.3;
    std::memcpy(bytes.data() + param_at, &bad, 8);
    std::ofstream out(path("bad.snn"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    try {
        load_model(path("bad.snn"));
        FAIL() << "expected ValueError";
    } catch (const ValueError& e) {
        EXPECT_NE(std::string(e.what()).find("mask violation"), std::string::npos);
    }
}

TEST_F(ModelIoTest, VersionMismatchRejectedBeforeParameterParse) {
    const Network net = init_network({2, 2}, sigmoids(1), 3);
    save_model(net, nullptr, path("v1.snn"));
    std::string bytes = slurp(path("v1.snn"));
    bytes[3] = '2';
    std::ofstream out(path("v2.snn"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    try {
        load_model(path("v2.snn"));
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
}

TEST_F(ModelIoTest, ForeignMagicRejected) {
    std::ofstream out(path("junk.snn"), std::ios::binary);
    out.write("JUNKJUNKJUNK", 12);
    out.close();
    try {
        load_model(path("junk.snn"));
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
    }
}

TEST_F(ModelIoTest, MaskSidecarRoundTrips) {
    const Network net = init_network({3, 4, 2}, sigmoids(2), 8);
    const PruneResult pruned = prune_to_target(net, 0.4);
    save_mask(pruned.mask, net.shape(), path("m.mask"));
    const PruneMask loaded = load_mask(path("m.mask"));
    ASSERT_EQ(loaded.layers.size(), pruned.mask.layers.size());
    for (std::size_t l = 0; l < loaded.layers.size(); ++l)
        EXPECT_TRUE((loaded.layers[l] == pruned.mask.layers[l]).all());
    loaded.validate_against(pruned.network);
}

TEST_F(ModelIoTest, MaskSidecarRejectsModelMagic) {
    const Network net = init_network({2, 2}, sigmoids(1), 3);
    save_model(net, nullptr, path("m.snn"));
    EXPECT_THROW(load_mask(path("m.snn")), IoError);
}
