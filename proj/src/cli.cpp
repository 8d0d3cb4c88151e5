#include "snn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "snn/backprop.hpp"
#include "snn/csv.hpp"
#include "snn/data.hpp"
#include "snn/metrics.hpp"
#include "snn/model_io.hpp"
#include "snn/network.hpp"
#include "snn/optimize.hpp"
#include "snn/sparsity.hpp"

namespace snn {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t at = 0;
    while (at <= s.size()) {
        const std::size_t next = s.find(sep, at);
        parts.push_back(s.substr(at, next == std::string::npos ? std::string::npos : next - at));
        if (next == std::string::npos) break;
        at = next + 1;
    }
    return parts;
}

std::string trim(const std::string& s) {
    const std::size_t first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const std::size_t last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

/// Flat `key = value` config support: entries become `--key=value` tokens
/// appended after the command line, so with a take-last policy the file
/// overrides flags. Keys mirror the subcommand's long option names.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config file '" + config_path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ValueError("config line " + std::to_string(line_no) +
                             " is not 'key = value': " + stripped);
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ValueError("config line " + std::to_string(line_no) + " has an empty key");
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

NetworkShape parse_shape(const std::string& text) {
    std::vector<Index> widths;
    for (const std::string& part : split(text, ',')) {
        try {
            widths.push_back(static_cast<Index>(std::stoll(part)));
        } catch (const std::exception&) {
            throw ValueError("bad width '" + part + "' in shape '" + text + "'");
        }
    }
    return NetworkShape(widths);
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> values;
    for (const std::string& part : split(text, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ValueError("bad value '" + part + "' in " + what);
        }
    }
    return values;
}

/// Builds the per-layer activation list from the comma-separated tags and
/// the epsilon string (one value broadcast to all layers, or one per
/// layer). Layers without a cutoff ignore their epsilon entry.
std::vector<Activation> parse_activations(const NetworkShape& shape, std::string tags,
                                          const std::string& epsilon_text) {
    const auto k = static_cast<std::size_t>(shape.depth());
    if (tags.empty()) {
        tags = "sigmoid";
        for (std::size_t i = 1; i < k; ++i) tags += ",sigmoid";
    }
    const std::vector<std::string> tag_list = split(tags, ',');
    if (tag_list.size() != k)
        throw ValueError("expected " + std::to_string(k) + " activation tags, got " +
                         std::to_string(tag_list.size()));
    std::vector<double> eps =
        epsilon_text.empty() ? std::vector<double>{0.0}
                             : parse_double_list(epsilon_text, "epsilon list");
    if (eps.size() == 1) eps.assign(k, eps[0]);
    if (eps.size() != k)
        throw ValueError("expected 1 or " + std::to_string(k) + " epsilon values, got " +
                         std::to_string(eps.size()));
    std::vector<Activation> acts;
    for (std::size_t l = 0; l < k; ++l) {
        const ActKind kind = parse_act_kind(tag_list[l]);
        if (kind_has_threshold(kind))
            acts.emplace_back(kind, eps[l]);
        else
            acts.emplace_back(kind);
    }
    return acts;
}

/// Dataset locator: idx:<images>,<labels> | csv:<path> |
/// synth:<kind>:<n>[:seed=S][:noise=X]
Dataset load_data(const std::string& spec, Index classes) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos)
        throw ValueError("data spec '" + spec + "' has no scheme (idx:, csv:, synth:)");
    const std::string scheme = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    if (scheme == "idx") {
        const std::vector<std::string> paths = split(rest, ',');
        if (paths.size() != 2) throw ValueError("idx spec needs '<images>,<labels>'");
        return load_idx(paths[0], paths[1], classes > 0 ? classes : 10);
    }
    if (scheme == "csv") return load_csv(rest, classes);
    if (scheme == "synth") {
        const std::vector<std::string> parts = split(rest, ':');
        if (parts.size() < 2) throw ValueError("synth spec needs '<kind>:<n>'");
        Index n = 0;
        try {
            n = static_cast<Index>(std::stoll(parts[1]));
        } catch (const std::exception&) {
            throw ValueError("bad sample count '" + parts[1] + "' in synth spec");
        }
        std::uint64_t seed = 1;
        double noise = -1.0;
        for (std::size_t i = 2; i < parts.size(); ++i) {
            if (parts[i].rfind("seed=", 0) == 0)
                seed = std::stoull(parts[i].substr(5));
            else if (parts[i].rfind("noise=", 0) == 0)
                noise = std::stod(parts[i].substr(6));
            else
                throw ValueError("unknown synth option '" + parts[i] + "'");
        }
        if (parts[0] == "two-clusters")
            return synth_two_clusters(n, seed, noise >= 0.0 ? noise : 0.08);
        if (parts[0] == "xor") return synth_xor(n, seed, noise >= 0.0 ? noise : 0.05);
        throw ValueError("unknown synthetic dataset kind '" + parts[0] + "'");
    }
    throw ValueError("unknown data scheme '" + scheme + "'");
}

void check_data_matches(const Dataset& ds, const NetworkShape& shape) {
    if (ds.input_dim != shape.input_width())
        throw ValueError("dataset input dimension " + std::to_string(ds.input_dim) +
                         " does not match network input width " +
                         std::to_string(shape.input_width()));
    if (ds.num_classes != shape.output_width())
        throw ValueError("dataset has " + std::to_string(ds.num_classes) +
                         " classes but the network has " + std::to_string(shape.output_width()) +
                         " outputs");
}

struct OptimizerFlags {
    std::string method = "minibatch";
    Index batch = 32;
    double lr = 0.5;
    double momentum = 0.9;
    bool adaptive = false;
    double damping = 1e-8;
    Index epochs = 50;
    std::uint64_t seed = 1;
    bool threshold_in_training = false;

    void attach(CLI::App* cmd, bool threshold_default) {
        threshold_in_training = threshold_default;
        cmd->add_option("--method", method, "Descent flavor: full-batch, sgd, or minibatch")
            ->check(CLI::IsMember({"full-batch", "sgd", "minibatch"}))
            ->capture_default_str();
        cmd->add_option("--batch", batch, "Mini-batch size")->capture_default_str();
        cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
        cmd->add_option("--momentum", momentum, "Velocity coefficient in [0,1)")
            ->capture_default_str();
        cmd->add_flag("--adaptive", adaptive,
                      "Per-parameter rates: lr / (sqrt of accumulated squared gradient + damping)");
        cmd->add_option("--damping", damping, "Damping for the adaptive rate denominator")
            ->capture_default_str();
        cmd->add_option("--epochs", epochs, "Training epochs (0 leaves parameters untouched)")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Seed for shuffling (and initialization where relevant)")
            ->envname("SNN_SEED")
            ->capture_default_str();
        cmd->add_flag("--threshold-in-training,!--no-threshold-in-training",
                      threshold_in_training,
                      "Apply activation cutoffs during training passes, not just at evaluation");
    }

    OptimizerConfig config() const {
        OptimizerConfig cfg;
        cfg.method = parse_method(method);
        cfg.batch_size = batch;
        cfg.learning_rate = lr;
        cfg.momentum = momentum;
        cfg.adaptive = adaptive;
        cfg.adaptive_damping = damping;
        cfg.epochs = epochs;
        cfg.seed = seed;
        cfg.threshold_during_training = threshold_in_training;
        cfg.validate();
        return cfg;
    }
};

void print_metrics(const Metrics& m) {
    std::cout << "accuracy=" << format_double(m.accuracy)
              << " mean_cost=" << format_double(m.mean_cost)
              << " weight_sparsity=" << format_double(m.weight_sparsity)
              << " activation_sparsity=" << format_double(m.activation_sparsity) << "\n";
}

int cmd_train(const std::string& data_spec, Index classes, const std::string& shape_text,
              const std::string& activations_text, const std::string& epsilon_text,
              const OptimizerFlags& flags, const std::string& out_path,
              const std::string& history_path) {
    const NetworkShape shape = parse_shape(shape_text);
    const Dataset ds = load_data(data_spec, classes);
    check_data_matches(ds, shape);
    Network net = init_network(shape, parse_activations(shape, activations_text, epsilon_text),
                               flags.seed);
    const TrainingHistory history = train(net, ds.samples, flags.config());
    save_model(net, nullptr, out_path);
    if (!history_path.empty()) emit_history_csv(history, history_path);
    print_metrics(evaluate(net, ds.samples));
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_spec, Index classes) {
    const LoadedModel loaded = load_model(model_path);
    const Dataset ds = load_data(data_spec, classes);
    check_data_matches(ds, loaded.network.shape());
    print_metrics(evaluate(loaded.network, ds.samples));
    return 0;
}

int cmd_gradcheck(const std::string& shape_text, const std::string& activations_text,
                  const std::string& epsilon_text, int seeds, double h, double tol) {
    const NetworkShape shape = parse_shape(shape_text);
    const std::vector<Activation> acts = parse_activations(shape, activations_text, epsilon_text);
    std::cout << "seed,max_rel_error,compared,excluded,result\n";
    bool all_pass = true;
    for (int s = 1; s <= seeds; ++s) {
        const Network net = init_network(shape, acts, static_cast<std::uint64_t>(s));
        Rng rng(mix_seed(static_cast<std::uint64_t>(s), 0x5eed));
        LabeledSample sample{Vector(shape.input_width()), Vector(shape.output_width())};
        for (Index i = 0; i < sample.input.size(); ++i) sample.input[i] = rng.uniform01();
        for (Index i = 0; i < sample.target.size(); ++i) sample.target[i] = rng.uniform01();
        const GradCheckReport r = gradient_check(net, sample, h, tol);
        all_pass = all_pass && r.pass;
        std::cout << s << ',' << format_double(r.max_rel_error) << ',' << r.compared << ','
                  << r.excluded << ',' << (r.pass ? "pass" : "FAIL") << "\n";
    }
    return all_pass ? 0 : 2;
}

int cmd_prune(const std::string& model_path, double target, const std::string& out_path,
              const std::string& mask_path) {
    const LoadedModel loaded = load_model(model_path);
    const PruneResult result = prune_to_target(loaded.network, target);
    save_model(result.network, &result.mask, out_path);
    if (!mask_path.empty()) save_mask(result.mask, result.network.shape(), mask_path);
    std::cout << "theta=" << format_double(result.theta)
              << " weight_sparsity=" << format_double(weight_sparsity(result.network)) << "\n";
    return 0;
}

int cmd_retrain(const std::string& model_path, const std::string& mask_path,
                const std::string& data_spec, Index classes, const OptimizerFlags& flags,
                const std::string& out_path, const std::string& history_path) {
    LoadedModel loaded = load_model(model_path);
    PruneMask mask;
    if (!mask_path.empty())
        mask = load_mask(mask_path);
    else if (loaded.mask)
        mask = *loaded.mask;
    else
        throw ValueError("model '" + model_path + "' embeds no mask; pass --mask");
    const Dataset ds = load_data(data_spec, classes);
    check_data_matches(ds, loaded.network.shape());
    const TrainingHistory history = retrain(loaded.network, mask, ds.samples, flags.config());
    save_model(loaded.network, &mask, out_path);
    if (!history_path.empty()) emit_history_csv(history, history_path);
    print_metrics(evaluate(loaded.network, ds.samples));
    return 0;
}

int cmd_sparsity(const std::string& model_path, const std::string& data_spec, Index classes,
                 const std::string& sweep_text, const std::string& out_path, double calibrate) {
    const LoadedModel loaded = load_model(model_path);
    const Dataset ds = load_data(data_spec, classes);
    check_data_matches(ds, loaded.network.shape());
    const SparsityReport report = sparsity_report(loaded.network, ds.samples);
    std::cout << "weight_sparsity=" << format_double(report.weight_sparsity)
              << " activation_sparsity=" << format_double(report.activation_sparsity)
              << " mac_skip_fraction=" << format_double(report.mac_skip_fraction()) << "\n";
    for (std::size_t l = 0; l < report.weight_sparsity_per_layer.size(); ++l)
        std::cout << "layer " << l << ": weight_sparsity="
                  << format_double(report.weight_sparsity_per_layer[l]) << " activation_sparsity="
                  << format_double(report.activation_sparsity_per_layer[l]) << "\n";
    if (calibrate >= 0.0) {
        const std::vector<double> eps = epsilon_from_quantile(loaded.network, ds.samples, calibrate);
        std::cout << "calibrated_epsilon=";
        for (std::size_t l = 0; l < eps.size(); ++l)
            std::cout << (l ? "," : "") << format_double(eps[l]);
        const Network thresholded = set_epsilon(loaded.network, eps);
        std::cout << " activation_sparsity="
                  << format_double(sparsity_report(thresholded, ds.samples).activation_sparsity)
                  << "\n";
    }
    if (!sweep_text.empty()) {
        if (out_path.empty()) throw ValueError("--eps-sweep needs --out for the csv table");
        const std::vector<SweepRow> rows =
            epsilon_sweep(loaded.network, ds.samples, parse_double_list(sweep_text, "eps sweep"));
        emit_sweep_csv(rows, out_path);
        std::cout << "sweep rows=" << rows.size() << " written to " << out_path << "\n";
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Feedforward neural network trainer with gradient verification, "
                 "magnitude pruning, and activation-cutoff sparsification.\n"
                 "Exit codes: 0 success, 1 usage/validation failure, 2 verification failure."};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_path;
    const std::string config_help =
        "Flat key = value file mirroring the long flags; file entries override flags";

    std::string data_spec, shape_text, activations_text, epsilon_text;
    std::string model_path, out_path, history_path, mask_path, sweep_text;
    Index classes = 0;
    OptimizerFlags train_flags, retrain_flags;
    int seeds = 20;
    double h = 1e-5, tol = 1e-6, target = 0.0, calibrate = -1.0;

    const std::string data_help =
        "Dataset: idx:<images>,<labels> | csv:<path> | synth:<kind>:<n>[:seed=S][:noise=X]";

    auto* train_cmd = app.add_subcommand(
        "train", "Train a network with full-batch, stochastic, or mini-batch gradient descent, "
                 "optionally with momentum and adaptive per-parameter rates");
    train_cmd->add_option("--config", config_path, config_help);
    train_cmd->add_option("--data", data_spec, data_help)->required();
    train_cmd->add_option("--classes", classes, "Class count override for csv/idx data");
    train_cmd->add_option("--shape", shape_text, "Layer widths, e.g. 784,16,16,10")->required();
    train_cmd->add_option("--activations", activations_text,
                          "Per-layer tags: identity, sigmoid, relu, modified-relu, "
                          "thresholded-sigmoid (default: all sigmoid)");
    train_cmd->add_option("--epsilon", epsilon_text,
                          "Cutoff for thresholded activations: one value or one per layer");
    train_flags.attach(train_cmd, /*threshold_default=*/false);
    train_cmd->add_option("--out", out_path, "Model file to write")->required();
    train_cmd->add_option("--history", history_path, "Per-epoch metrics csv");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved model on a dataset");
    eval_cmd->add_option("--config", config_path, config_help);
    eval_cmd->add_option("--model", model_path, "Model file")->required();
    eval_cmd->add_option("--data", data_spec, data_help)->required();
    eval_cmd->add_option("--classes", classes, "Class count override for csv/idx data");

    auto* grad_cmd = app.add_subcommand(
        "gradcheck", "Verify backpropagation against central finite differences on seeded "
                     "random networks; exits 2 on any failure");
    grad_cmd->add_option("--config", config_path, config_help);
    grad_cmd->set_help_flag("--help", "Print this help message and exit"); // frees -h for --h
    grad_cmd->add_option("--shape", shape_text, "Layer widths")->required();
    grad_cmd->add_option("--activations", activations_text, "Per-layer activation tags");
    grad_cmd->add_option("--epsilon", epsilon_text, "Cutoffs for thresholded activations");
    grad_cmd->add_option("--seeds", seeds, "Number of seeded networks")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    grad_cmd->add_option("--h", h, "Central difference step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    grad_cmd->add_option("--tol", tol, "Max relative error allowed")->capture_default_str();

    auto* prune_cmd = app.add_subcommand(
        "prune", "Zero and freeze the smallest-magnitude weights up to a target sparsity");
    prune_cmd->add_option("--config", config_path, config_help);
    prune_cmd->add_option("--model", model_path, "Model file")->required();
    prune_cmd->add_option("--target", target, "Weight sparsity fraction to reach")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    prune_cmd->add_option("--out", out_path, "Pruned model file (mask embedded)")->required();
    prune_cmd->add_option("--mask", mask_path, "Also write the mask sidecar here");

    auto* retrain_cmd = app.add_subcommand(
        "retrain", "Continue training a pruned model with its frozen weights held at zero");
    retrain_cmd->add_option("--config", config_path, config_help);
    retrain_cmd->add_option("--model", model_path, "Pruned model file")->required();
    retrain_cmd->add_option("--mask", mask_path, "Mask sidecar (default: mask embedded in model)");
    retrain_cmd->add_option("--data", data_spec, data_help)->required();
    retrain_cmd->add_option("--classes", classes, "Class count override for csv/idx data");
    retrain_flags.attach(retrain_cmd, /*threshold_default=*/true);
    retrain_cmd->add_option("--out", out_path, "Model file to write")->required();
    retrain_cmd->add_option("--history", history_path, "Per-epoch metrics csv");

    auto* sparsity_cmd = app.add_subcommand(
        "sparsity", "Report exact-zero weight and activation sparsity; optionally calibrate "
                    "cutoffs at a pre-activation quantile or sweep a cutoff list");
    sparsity_cmd->add_option("--config", config_path, config_help);
    sparsity_cmd->add_option("--model", model_path, "Model file")->required();
    sparsity_cmd->add_option("--data", data_spec, data_help)->required();
    sparsity_cmd->add_option("--classes", classes, "Class count override for csv/idx data");
    sparsity_cmd->add_option("--eps-sweep", sweep_text,
                             "Ascending cutoff list applied uniformly, e.g. 0,0.25,0.5,1,2");
    sparsity_cmd->add_option("--out", out_path, "Sweep csv path");
    sparsity_cmd->add_option("--calibrate", calibrate,
                             "Also print per-layer cutoffs at this pre-activation quantile")
        ->check(CLI::Range(0.0, 1.0));

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end()); // CLI11 consumes tokens back to front
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (train_cmd->parsed())
            return cmd_train(data_spec, classes, shape_text, activations_text, epsilon_text,
                             train_flags, out_path, history_path);
        if (eval_cmd->parsed()) return cmd_eval(model_path, data_spec, classes);
        if (grad_cmd->parsed())
            return cmd_gradcheck(shape_text, activations_text, epsilon_text, seeds, h, tol);
        if (prune_cmd->parsed()) return cmd_prune(model_path, target, out_path, mask_path);
        if (retrain_cmd->parsed())
            return cmd_retrain(model_path, mask_path, data_spec, classes, retrain_flags, out_path,
                               history_path);
        if (sparsity_cmd->parsed())
            return cmd_sparsity(model_path, data_spec, classes, sweep_text, out_path, calibrate);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace snn
