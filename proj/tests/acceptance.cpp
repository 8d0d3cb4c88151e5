// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Usage: acceptance <path-to-snn-cli>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "snn/backprop.hpp"
#include "snn/csv.hpp"
#include "snn/data.hpp"
#include "snn/metrics.hpp"
#include "snn/model_io.hpp"
#include "snn/network.hpp"
#include "snn/optimize.hpp"
#include "snn/sparsity.hpp"

using namespace snn;

namespace {

std::string g_cli_path;
std::filesystem::path g_dir;

std::vector<Activation> sigmoids(Index k) {
    return std::vector<Activation>(static_cast<std::size_t>(k), Activation(ActKind::Sigmoid));
}

LabeledSample random_sample(const NetworkShape& shape, std::uint64_t seed) {
    Rng rng(seed);
    LabeledSample s{Vector(shape.input_width()), Vector(shape.output_width())};
    for (Index i = 0; i < s.input.size(); ++i) s.input[i] = rng.uniform01();
    for (Index i = 0; i < s.target.size(); ++i) s.target[i] = rng.uniform01();
    return s;
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int run_cli(const std::string& args) {
    const std::string cmd = g_cli_path + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// shared across criteria 4-6
struct DeskScaleRun {
    Network dense;
    std::vector<LabeledSample> data;
    double dense_accuracy = 0.0;
    double train_seconds = 0.0;
};

const DeskScaleRun& desk_scale_run() {
    static const DeskScaleRun run = [] {
        std::vector<LabeledSample> data = synth_two_clusters(200, 1).samples;
        const auto start = std::chrono::steady_clock::now();
        Network net = init_network({2, 8, 2}, sigmoids(2), 1);
        OptimizerConfig cfg;
        cfg.method = Method::Minibatch;
        cfg.batch_size = 10;
        cfg.learning_rate = 0.5;
        cfg.epochs = 500;
        cfg.seed = 1;
        train(net, data, cfg);
        const double seconds = seconds_since(start);
        const double accuracy = evaluate(net, data).accuracy;
        return DeskScaleRun{std::move(net), std::move(data), accuracy, seconds};
    }();
    return run;
}

bool criterion1(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    const NetworkShape shapes[] = {{3, 2}, {3, 4, 2}, {5, 4, 3, 2}};
    double worst = 0.0;
    bool all_pass = true;
    for (int seed = 1; seed <= 20; ++seed) {
        const NetworkShape& shape = shapes[seed % 3];
        const Network net =
            init_network(shape, sigmoids(shape.depth()), static_cast<std::uint64_t>(seed));
        const GradCheckReport r = gradient_check(
            net, random_sample(shape, static_cast<std::uint64_t>(seed) + 100), 1e-5, 1e-6);
        worst = std::max(worst, r.max_rel_error);
        all_pass = all_pass && r.pass;
    }
    const double elapsed = seconds_since(start);
    std::ostringstream os;
    os << "20 seeded networks, max rel error " << format_double(worst) << " (tol 1e-6), "
       << format_double(elapsed) << " s (limit 5)";
    detail = os.str();
    return all_pass && elapsed <= 5.0;
}

bool criterion2(std::string& detail) {
    std::vector<LayerParams> layers;
    layers.push_back({Matrix::Zero(1, 1), Vector::Zero(1), Activation(ActKind::Sigmoid)});
    const Network net(NetworkShape{1, 1}, std::move(layers));
    const ForwardTrace trace = forward(net, Vector::Constant(1, 1.0));
    const GradientSet g = backward(net, trace, Vector::Zero(1));
    const double dw = g.weight_grads[0](0, 0);
    const double db = g.bias_grads[0][0];
    detail = "dC/dw = " + format_double(dw) + ", dC/db = " + format_double(db) +
             " (expected 0.25 within 1e-12)";
    return std::abs(dw - 0.25) <= 1e-12 && std::abs(db - 0.25) <= 1e-12;
}

bool criterion3(std::string& detail) {
    Vector outputs(10);
    outputs << 0.4, 0.7, 0.2, 0.1, 0.0, 0.4, 1.0, 0.1, 0.0, 0.3;
    const double c = cost(outputs, one_hot(8, 10));
    const Index pick = argmax(outputs);
    detail = "cost = " + format_double(c) + " (expected 2.96 within 1e-12), argmax = " +
             std::to_string(pick) + " (expected 6)";
    return std::abs(c - 2.96) <= 1e-12 && pick == 6;
}

bool criterion4(std::string& detail) {
    const DeskScaleRun& run = desk_scale_run();
    std::ostringstream os;
    os << "train accuracy " << format_double(run.dense_accuracy) << " (need >= 0.98), "
       << format_double(run.train_seconds) << " s (limit 10)";
    detail = os.str();
    return run.dense_accuracy >= 0.98 && run.train_seconds <= 10.0;
}

bool criterion5(std::string& detail) {
    const DeskScaleRun& run = desk_scale_run();
    PruneResult pruned = prune_to_target(run.dense, 0.35);
    OptimizerConfig cfg;
    cfg.method = Method::Minibatch;
    cfg.batch_size = 10;
    cfg.learning_rate = 0.5;
    cfg.epochs = 200;
    cfg.seed = 1;
    retrain(pruned.network, pruned.mask, run.data, cfg);
    const double pruned_accuracy = evaluate(pruned.network, run.data).accuracy;

    bool frozen_zero = true;
    for (Index l = 0; l < pruned.network.depth(); ++l) {
        const auto il = static_cast<std::size_t>(l);
        const Matrix& w = pruned.network.layer(l).weights;
        for (Index j = 0; j < w.rows(); ++j)
            for (Index u = 0; u < w.cols(); ++u)
                if (!pruned.mask.layers[il](j, u) && w(j, u) != 0.0) frozen_zero = false;
    }
    std::ostringstream os;
    os << "dense accuracy " << format_double(run.dense_accuracy) << ", pruned+retrained "
       << format_double(pruned_accuracy) << " (gap limit 0.02), frozen weights zero: "
       << (frozen_zero ? "yes" : "NO");
    detail = os.str();
    return pruned_accuracy >= run.dense_accuracy - 0.02 && frozen_zero;
}

bool criterion6(std::string& detail) {
    const DeskScaleRun& run = desk_scale_run();
    std::ostringstream os;
    bool ok = true;
    for (const double q : {0.4, 0.6, 0.9}) {
        const std::vector<double> eps = epsilon_from_quantile(run.dense, run.data, q);
        const Network cut = set_epsilon(run.dense, eps);
        const double sparsity = sparsity_report(cut, run.data).activation_sparsity;
        ok = ok && sparsity >= q - 0.02;
        os << "q=" << format_double(q) << " -> " << format_double(sparsity) << "; ";
    }
    // a uniform ascending sweep must have a nondecreasing sparsity column
    std::vector<double> z_values;
    for (const LabeledSample& s : run.data) {
        const ForwardTrace trace = forward(run.dense, s.input);
        for (const Vector& z : trace.preactivations)
            for (Index j = 0; j < z.size(); ++j) z_values.push_back(z[j]);
    }
    std::vector<double> cutoffs;
    for (const double q : {0.2, 0.4, 0.6, 0.8, 0.95})
        cutoffs.push_back(std::max(0.0, lower_quantile(z_values, q)));
    std::sort(cutoffs.begin(), cutoffs.end());
    const auto rows = epsilon_sweep(run.dense, run.data, cutoffs);
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        monotone = monotone && rows[i].activation_sparsity >= rows[i - 1].activation_sparsity;
    os << "sweep monotone: " << (monotone ? "yes" : "NO");
    detail = os.str();
    return ok && monotone;
}

bool criterion7(std::string& detail) {
    const NetworkShape shape{3, 4, 2};
    const Network net = init_network(shape, sigmoids(2), 10);
    Rng rng(20);
    std::vector<LabeledSample> data;
    for (int i = 0; i < 37; ++i) {
        LabeledSample s{Vector(3), Vector(2)};
        for (Index j = 0; j < 3; ++j) s.input[j] = rng.uniform01();
        for (Index j = 0; j < 2; ++j) s.target[j] = rng.uniform01();
        data.push_back(std::move(s));
    }
    auto mean_over = [&](const std::vector<Index>& idx) {
        GradientSet sum = GradientSet::zeros(shape);
        for (Index i : idx)
            sum.add(backward(net, forward(net, data[static_cast<std::size_t>(i)].input),
                             data[static_cast<std::size_t>(i)].target));
        sum.scale(1.0 / static_cast<double>(idx.size()));
        return flatten(sum);
    };
    std::vector<Index> all(37);
    std::iota(all.begin(), all.end(), Index{0});
    const Vector full = mean_over(all);
    Vector recombined = Vector::Zero(full.size());
    for (const auto& batch : minibatches(37, 5, 3))
        recombined += static_cast<double>(batch.size()) * mean_over(batch);
    recombined /= 37.0;
    const double err = (full - recombined).cwiseAbs().maxCoeff();
    detail = "max componentwise gap " + format_double(err) + " (tol 1e-10)";
    return err <= 1e-10;
}

bool criterion8(std::string& detail) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        for (const auto& [n, b] : std::vector<std::pair<Index, Index>>{{37, 5}, {10, 3}, {8, 8}}) {
            std::set<Index> seen;
            std::size_t total = 0;
            for (const auto& batch : minibatches(n, b, seed)) {
                seen.insert(batch.begin(), batch.end());
                total += batch.size();
            }
            if (total != static_cast<std::size_t>(n) ||
                seen.size() != static_cast<std::size_t>(n) || *seen.begin() != 0 ||
                *seen.rbegin() != n - 1) {
                detail = "partition broken at seed " + std::to_string(seed);
                return false;
            }
        }
    }
    detail = "exact partition for 100 seeds x 3 (n, batch) configurations";
    return true;
}

bool criterion9(std::string& detail) {
    const std::string model_path = (g_dir / "roundtrip.snn").string();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const NetworkShape shape = seed % 2 ? NetworkShape{4, 3, 2} : NetworkShape{2, 5, 1};
        const Network net = init_network(shape, sigmoids(shape.depth()), seed);
        const PruneResult pruned = prune_to_target(net, 0.3);
        save_model(pruned.network, &pruned.mask, model_path);
        const std::string first = slurp(model_path);
        const LoadedModel loaded = load_model(model_path);
        save_model(loaded.network, &*loaded.mask, model_path);
        if (slurp(model_path) != first) {
            detail = "round trip not byte-identical at seed " + std::to_string(seed);
            return false;
        }
    }
    // flip the version digit; the file must be rejected
    std::string bytes = slurp(model_path);
    bytes[3] = '7';
    const std::string bad_path = (g_dir / "bad_version.snn").string();
    std::ofstream(bad_path, std::ios::binary).write(bytes.data(),
                                                    static_cast<std::streamsize>(bytes.size()));
    try {
        load_model(bad_path);
        detail = "version-mismatch file was accepted";
        return false;
    } catch (const IoError&) {
    }
    detail = "10 masked round trips byte-identical; foreign version rejected";
    return true;
}

bool criterion10(std::string& detail) {
    const std::string args = "train --data synth:two-clusters:60:seed=5 --shape 2,6,2 "
                             "--method minibatch --batch 8 --lr 0.5 --epochs 12 --seed 3";
    const std::string a_model = (g_dir / "a.snn").string();
    const std::string b_model = (g_dir / "b.snn").string();
    const std::string a_hist = (g_dir / "a.csv").string();
    const std::string b_hist = (g_dir / "b.csv").string();
    if (run_cli(args + " --out " + a_model + " --history " + a_hist) != 0 ||
        run_cli(args + " --out " + b_model + " --history " + b_hist) != 0) {
        detail = "cli train run failed";
        return false;
    }
    const bool models_equal = slurp(a_model) == slurp(b_model) && !slurp(a_model).empty();
    const bool hists_equal = slurp(a_hist) == slurp(b_hist) && !slurp(a_hist).empty();
    detail = std::string("model files byte-identical: ") + (models_equal ? "yes" : "NO") +
             ", history files byte-identical: " + (hists_equal ? "yes" : "NO");
    return models_equal && hists_equal;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-snn-cli>\n";
        return 2;
    }
    g_cli_path = argv[1];
    g_dir = std::filesystem::temp_directory_path() /
            ("snn_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(g_dir);

    const std::vector<std::pair<std::string, std::function<bool(std::string&)>>> criteria = {
        {"gradient oracle: backprop vs central differences on 20 seeded networks", criterion1},
        {"closed form: 1->1 sigmoid net gradient equals 0.25", criterion2},
        {"ten-output walkthrough: cost 2.96 and argmax at index 6", criterion3},
        {"desk-scale training reaches 98% train accuracy in time", criterion4},
        {"prune to 35% then retrain keeps accuracy within 2 points, frozen zeros", criterion5},
        {"quantile cutoffs deliver their activation sparsity; sweep monotone", criterion6},
        {"size-weighted batch means equal the full-dataset gradient", criterion7},
        {"every epoch's batches partition the dataset exactly", criterion8},
        {"model serialization is bitwise; foreign versions rejected", criterion9},
        {"end-to-end train runs are byte-for-byte reproducible", criterion10},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].second(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::cout << (ok ? "PASS" : "FAIL") << "  " << (i + 1) << "  " << criteria[i].first
                  << "  [" << detail << "]\n";
    }
    std::filesystem::remove_all(g_dir);
    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failures))
              << "\n";
    return failures == 0 ? 0 : 2;
}
