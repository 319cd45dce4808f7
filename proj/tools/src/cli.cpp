#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>

#include "commands.hpp"
#include "semgraph/error.hpp"
#include "semgraph/parallel.hpp"
#include "semgraph/text.hpp"

namespace semgraph::cli {

namespace {

// Model options as strings until the subcommand runs, so that bad names come
// back as configuration errors with the list of valid values.
struct ModelFlags {
    ModelOptions options;
    std::string edge_scheme{"exp_l2"};
    std::string normalization{"row"};
    std::string addon_update{"matmul"};
    std::string activation{"tanh"};
    bool addon = true;
    bool addon_bias = true;
    bool input_edge_one = false;
    CLI::Option* input_edge_one_opt = nullptr;

    ModelOptions resolve() const {
        ModelOptions o = options;
        o.model.edge_scheme = parse_edge_scheme(edge_scheme);
        o.model.normalization = parse_normalization(normalization);
        o.model.addon_update = parse_addon_update(addon_update);
        o.model.activation = parse_activation(activation);
        o.model.addon_enabled = addon;
        o.model.addon_bias = addon_bias;
        if (input_edge_one_opt->count() > 0) o.input_edge_one = input_edge_one;
        return o;
    }
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
    auto& m = f.options.model;
    sub->add_option("--edge-scheme", f.edge_scheme,
                    "default_one, exp_l2, exp_l2_squared, gauss_kernel or gaussian_input")
        ->capture_default_str();
    sub->add_option("--normalization", f.normalization, "row, column, naive_symmetric or symmetric")
        ->capture_default_str();
    sub->add_flag("--addon,!--no-addon", f.addon, "Add-on layers between graph convolutions");
    sub->add_option("--addon-update", f.addon_update, "matmul or elementwise")->capture_default_str();
    sub->add_flag("--addon-bias,!--no-addon-bias", f.addon_bias, "Bias on the add-on maps");
    f.input_edge_one_opt = sub->add_flag("--input-edge-one,!--no-input-edge-one", f.input_edge_one,
                                         "Unit edges in the first layer (default: on for one-hot data)");
    sub->add_option("--activation", f.activation, "tanh or relu")->capture_default_str();
    sub->add_option("--layer-dims", m.layer_dims, "Graph convolution widths, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--sort-k,--z", m.sort_k, "Rows kept by SortPooling")->capture_default_str();
    sub->add_option("--kernel-sigma", m.kernel_sigma, "Width of gauss_kernel")->capture_default_str();
    sub->add_option("--dropout", m.dropout)->capture_default_str();
    sub->add_option("--epochs", f.options.epochs)->capture_default_str();
    sub->add_option("--batch", f.options.batch)->capture_default_str();
    sub->add_option("--lr", f.options.lr, "Adam learning rate")->capture_default_str();
    sub->add_option("--seed", f.options.seed)->capture_default_str();
}

void add_data_flags(CLI::App* sub, DataSource& d, bool with_split) {
    sub->add_option("--data", d.data, "SEMGRAPH dataset file");
    sub->add_option("--tu", d.tu_dir, "Directory with a TU-format dataset");
    sub->add_option("--tu-name", d.tu_name, "TU dataset name (file prefix)");
    if (with_split) {
        sub->add_option("--test-ids", d.test_ids, "File listing the ids of held-out samples");
        sub->add_option("--test-data", d.test_data, "Separate SEMGRAPH file for the held-out split");
    }
}

// Flat `key = value` lines; keys are long option names. Options already given
// on the command line keep their value.
void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line(text::trim(raw));
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key(text::trim(std::string_view(line).substr(0, eq)));
        const std::string value(text::trim(std::string_view(line).substr(eq + 1)));
        CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
        if (!opt)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "' for " +
                              sub->get_name());
        if (opt->count() > 0) continue;
        try {
            // Maps negated flag names, so "no-addon = true" turns the add-on layers off.
            opt->add_result(opt->get_flag_value(key, value));
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + key + ": " + e.what());
        }
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Semantic graphs from part-labelled point clouds, and graph classification"};
    app.name("semgraph");
    app.require_subcommand(1);

    std::string config_path;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "File of key = value defaults (flags take precedence)");
    };

    AnnotateOptions annotate;
    auto* annotate_cmd = app.add_subcommand("annotate", "Label clouds by registering them to labelled templates");
    annotate_cmd->add_option("--source", annotate.source, "Directory of <category>/<cloud> files");
    annotate_cmd->add_option("--templates", annotate.templates, "Directory of labelled <category>/<cloud> templates");
    annotate_cmd->add_option("--out", annotate.out, "Output directory for labelled clouds");
    annotate_cmd->add_option("--report", annotate.report, "Per-file CSV (default <out>/report.csv)");
    annotate_cmd->add_option("--max-iters", annotate.max_iters)->capture_default_str();
    annotate_cmd->add_option("--tol", annotate.tol)->capture_default_str();
    annotate_cmd->add_option("--points", annotate.points, "Points sampled from each source")->capture_default_str();
    annotate_cmd->add_option("--seed", annotate.seed)->capture_default_str();
    add_config(annotate_cmd);

    ExtractOptions extract;
    auto* extract_cmd = app.add_subcommand("extract", "Build a graph dataset from labelled clouds");
    extract_cmd->add_option("--input", extract.input, "Directory of labelled <category>/<cloud> files");
    extract_cmd->add_option("--out", extract.out, "Dataset file to write");
    extract_cmd->add_option("--tau", extract.tau, "Neighbourhood radius")->capture_default_str();
    add_config(extract_cmd);

    TrainCommand train;
    ModelFlags train_flags;
    auto* train_cmd = app.add_subcommand("train", "Train a classifier");
    add_data_flags(train_cmd, train.source, true);
    add_model_flags(train_cmd, train_flags);
    train_cmd->add_option("--out-dir", train.out_dir, "Directory for model.ckpt, metrics.csv and confusion.csv");
    train_cmd->add_option("--resume", train.resume, "Checkpoint to continue from");
    add_config(train_cmd);

    EvalCommand eval;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_data_flags(eval_cmd, eval.source, false);
    eval_cmd->add_option("--checkpoint", eval.checkpoint);
    eval_cmd->add_option("--ids", eval.ids, "Only evaluate the samples listed in this file");
    eval_cmd->add_option("--metrics", eval.metrics, "Write a metrics CSV");
    eval_cmd->add_option("--confusion", eval.confusion, "Write the confusion matrix as CSV");
    add_config(eval_cmd);

    XvalCommand xval;
    ModelFlags xval_flags;
    auto* xval_cmd = app.add_subcommand("xval", "k-fold cross-validation");
    add_data_flags(xval_cmd, xval.source, false);
    add_model_flags(xval_cmd, xval_flags);
    xval_cmd->add_option("--folds", xval.folds)->capture_default_str();
    xval_cmd->add_flag("--stratified", xval.stratified, "Balance classes across folds");
    xval_cmd->add_option("--out", xval.out, "Per-fold CSV");
    add_config(xval_cmd);

    AblateCommand ablate;
    ModelFlags ablate_flags;
    auto* ablate_cmd = app.add_subcommand("ablate", "Accuracy over edge schemes and normalizations");
    add_data_flags(ablate_cmd, ablate.source, true);
    add_model_flags(ablate_cmd, ablate_flags);
    ablate_cmd->add_option("--schemes", ablate.schemes, "Edge schemes to try (default all)")->delimiter(',');
    ablate_cmd->add_option("--normalizations", ablate.normalizations, "Normalizations to try (default all)")
        ->delimiter(',');
    ablate_cmd->add_option("--out", ablate.out, "Grid CSV");
    add_config(ablate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!config_path.empty()) apply_config_file(sub, config_path);
        Context ctx{out, err, worker_count()};
        if (sub == annotate_cmd) return run_annotate(annotate, ctx);
        if (sub == extract_cmd) return run_extract(extract, ctx);
        if (sub == train_cmd) {
            train.options = train_flags.resolve();
            return run_train(train, ctx);
        }
        if (sub == eval_cmd) return run_eval(eval, ctx);
        if (sub == xval_cmd) {
            xval.options = xval_flags.resolve();
            return run_xval(xval, ctx);
        }
        ablate.options = ablate_flags.resolve();
        return run_ablate(ablate, ctx);
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace semgraph::cli
