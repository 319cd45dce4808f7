#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "semgraph/checkpoint.hpp"
#include "semgraph/data.hpp"
#include "semgraph/error.hpp"
#include "semgraph/parallel.hpp"
#include "semgraph/pointcloud.hpp"
#include "semgraph/registration.hpp"
#include "semgraph/text.hpp"

namespace fs = std::filesystem;

namespace semgraph::cli {

namespace {

std::string num(double v) { return text::format_double(v); }

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path.string());
    return out;
}

bool is_cloud_file(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".xyz" || ext == ".txt" || ext == ".pts" || ext == ".off" || ext == ".OFF";
}

struct CloudFile {
    fs::path path;
    std::string relative;  // "<category>/<file>"
    std::string category;
};

// Clouds under <root>/<category>/, sorted by relative path.
std::vector<CloudFile> list_clouds(const fs::path& root) {
    if (!fs::is_directory(root)) throw ArgumentError("not a directory: " + root.string());
    std::vector<CloudFile> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file() || !is_cloud_file(entry.path())) continue;
        const fs::path rel = fs::relative(entry.path(), root);
        const std::string category = std::distance(rel.begin(), rel.end()) > 1 ? rel.begin()->string() : "";
        files.push_back({entry.path(), rel.generic_string(), category});
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.relative < b.relative; });
    return files;
}

std::string sample_id(const CloudFile& f) {
    fs::path rel(f.relative);
    rel.replace_extension();
    return rel.generic_string();
}

struct LoadedData {
    GraphDataset train;
    std::optional<GraphDataset> test;
};

GraphDataset load_primary(const DataSource& src, Context& ctx) {
    if (!src.data.empty() && !src.tu_dir.empty()) throw ConfigError("give either --data or --tu, not both");
    if (!src.data.empty()) return load_dataset(src.data);
    if (!src.tu_dir.empty()) {
        if (src.tu_name.empty()) throw ConfigError("--tu needs --tu-name");
        TuLoad tu = load_tu(src.tu_dir, src.tu_name);
        for (const auto& w : tu.warnings) ctx.err << "warning: " << w << '\n';
        return std::move(tu.dataset);
    }
    throw ConfigError("no dataset given (use --data or --tu)");
}

LoadedData load_data(const DataSource& src, Context& ctx) {
    LoadedData d{load_primary(src, ctx), std::nullopt};
    if (!src.test_ids.empty() && !src.test_data.empty())
        throw ConfigError("give either --test-ids or --test-data, not both");
    if (!src.test_ids.empty()) {
        auto [rest, held] = split_by_ids(d.train, load_id_list(src.test_ids));
        if (held.samples.empty()) throw ConfigError("no sample id from " + src.test_ids + " is in the dataset");
        if (rest.samples.empty()) throw ConfigError("every sample is listed in " + src.test_ids);
        d.train = std::move(rest);
        d.test = std::move(held);
    } else if (!src.test_data.empty()) {
        d.test = load_dataset(src.test_data);
        if (d.test->class_names.size() != d.train.class_names.size())
            throw ConfigError("test data has " + std::to_string(d.test->class_names.size()) +
                              " classes, training data has " + std::to_string(d.train.class_names.size()));
    }
    return d;
}

ModelConfig resolve_config(const ModelOptions& opt, const GraphDataset& ds) {
    ModelConfig c = opt.model;
    c.input_edge_one = opt.input_edge_one.value_or(ds.feature_kind == FeatureKind::OneHot);
    c.validate();
    return c;
}

TrainOptions train_options(const ModelOptions& opt, const Context& ctx) {
    TrainOptions t;
    t.epochs = opt.epochs;
    t.batch_size = opt.batch;
    t.adam.lr = opt.lr;
    t.seed = opt.seed;
    t.workers = ctx.workers;
    return t;
}

void write_confusion(const fs::path& path, const GraphDataset& ds, const Evaluation& ev) {
    auto out = open_output(path);
    out << "true\\predicted";
    for (const auto& name : ds.class_names) out << ',' << name;
    out << '\n';
    for (std::size_t t = 0; t < ev.confusion.size(); ++t) {
        out << ds.class_names[t];
        for (auto c : ev.confusion[t]) out << ',' << c;
        out << '\n';
    }
}

void metrics_header(std::ostream& out) { out << "epoch,split,loss,accuracy\n"; }

void metrics_row(std::ostream& out, std::size_t epoch, const char* split, double loss, double acc) {
    out << epoch << ',' << split << ',' << num(loss) << ',' << num(acc) << '\n';
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population standard deviation.
double std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

// ---- annotate --------------------------------------------------------------

int run_annotate(const AnnotateOptions& opt, Context& ctx) {
    if (opt.source.empty() || opt.templates.empty() || opt.out.empty())
        throw ConfigError("annotate needs --source, --templates and --out");
    if (opt.points == 0) throw ConfigError("--points must be at least 1");

    std::map<std::string, std::vector<std::pair<std::string, PointCloud>>> templates;
    for (const auto& f : list_clouds(opt.templates)) {
        PointCloud cloud = load_cloud(f.path, format_for_path(f.path));
        if (!cloud.has_labels()) throw ConfigError("template " + f.relative + " has no part labels");
        templates[f.category].emplace_back(f.relative, std::move(cloud));
    }
    if (templates.empty()) throw ConfigError("no template clouds found in " + opt.templates);

    const auto sources = list_clouds(opt.source);
    struct Outcome {
        std::optional<PointCloud> labeled;
        std::string template_used;
        IcpResult icp;
        std::string error;
    };
    std::vector<Outcome> outcomes(sources.size());
    const IcpOptions icp{opt.max_iters, opt.tol};

    parallel_for(sources.size(), ctx.workers, [&](std::size_t i) {
        const CloudFile& f = sources[i];
        Outcome& o = outcomes[i];
        try {
            const auto it = templates.find(f.category);
            if (it == templates.end())
                throw ArgumentError("no template for category '" + f.category + "'");
            const PointCloud raw = load_cloud(f.path, format_for_path(f.path));
            const PointCloud cloud = subsample(raw, opt.points, substream_seed(opt.seed, f.relative));
            std::vector<PointCloud> candidates;
            for (const auto& [name, t] : it->second) candidates.push_back(t);
            const TemplateMatch match = register_best(cloud, candidates, icp);
            o.labeled = transfer_labels(cloud, candidates[match.template_index], match.icp.transform);
            o.template_used = it->second[match.template_index].first;
            o.icp = match.icp;
        } catch (const Error& e) {
            o.error = e.what();
        }
    });

    const fs::path out_dir(opt.out);
    auto report = open_output(opt.report.empty() ? out_dir / "report.csv" : fs::path(opt.report));
    report << "file,template_used,iterations,final_error\n";
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const Outcome& o = outcomes[i];
        if (!o.error.empty()) {
            ctx.err << "error: " << sources[i].relative << ": " << o.error << '\n';
            failures.push_back(sources[i].relative);
            continue;
        }
        fs::path target = out_dir / sources[i].relative;
        target.replace_extension(".xyz");
        fs::create_directories(target.parent_path());
        save_cloud(*o.labeled, target);
        report << sources[i].relative << ',' << o.template_used << ',' << o.icp.iterations << ','
               << num(o.icp.final_error) << '\n';
    }
    ctx.out << "annotated " << sources.size() - failures.size() << " of " << sources.size() << " clouds\n";
    if (!failures.empty()) {
        ctx.out << failures.size() << " failed:\n";
        for (const auto& f : failures) ctx.out << "  " << f << '\n';
        return kExitFileErrors;
    }
    return kExitOk;
}

// ---- extract ---------------------------------------------------------------

int run_extract(const ExtractOptions& opt, Context& ctx) {
    if (opt.input.empty() || opt.out.empty()) throw ConfigError("extract needs --input and --out");
    if (!(opt.tau > 0.0)) throw ConfigError("--tau must be positive");
    const auto files = list_clouds(opt.input);

    std::vector<std::string> categories;
    for (const auto& f : files)
        if (!f.category.empty() && (categories.empty() || categories.back() != f.category))
            categories.push_back(f.category);
    if (categories.empty()) throw ConfigError("no category directories with clouds in " + opt.input);

    struct Outcome {
        std::optional<GraphSample> sample;
        std::string warning;
        std::string error;
    };
    std::vector<Outcome> outcomes(files.size());
    parallel_for(files.size(), ctx.workers, [&](std::size_t i) {
        const CloudFile& f = files[i];
        try {
            if (f.category.empty()) throw ArgumentError("cloud is not inside a category directory");
            const PointCloud cloud = load_cloud(f.path, format_for_path(f.path));
            if (!cloud.has_labels()) {
                outcomes[i].warning = "no part labels, skipped";
                return;
            }
            const int label = static_cast<int>(
                std::find(categories.begin(), categories.end(), f.category) - categories.begin());
            outcomes[i].sample = to_sample(build_graph(cloud, opt.tau, label), sample_id(f));
        } catch (const Error& e) {
            outcomes[i].error = e.what();
        }
    });

    GraphDataset ds;
    ds.class_names = categories;
    std::size_t errors = 0;
    std::map<std::size_t, std::size_t> histogram;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!outcomes[i].warning.empty()) ctx.err << "warning: " << files[i].relative << ": " << outcomes[i].warning << '\n';
        if (!outcomes[i].error.empty()) {
            ctx.err << "error: " << files[i].relative << ": " << outcomes[i].error << '\n';
            ++errors;
        }
        if (outcomes[i].sample) {
            ++histogram[outcomes[i].sample->node_count()];
            ds.samples.push_back(std::move(*outcomes[i].sample));
        }
    }
    if (ds.samples.empty()) throw ArgumentError("no graphs could be extracted from " + opt.input);
    save_dataset(ds, opt.out);

    std::size_t nodes = 0;
    ctx.out << "nodes,graphs\n";
    for (const auto& [n, count] : histogram) {
        ctx.out << n << ',' << count << '\n';
        nodes += n * count;
    }
    ctx.out << "extracted " << ds.samples.size() << " graphs in " << ds.class_names.size()
            << " classes, mean nodes per graph " << num(static_cast<double>(nodes) / static_cast<double>(ds.samples.size()))
            << '\n';
    return errors ? kExitFileErrors : kExitOk;
}

// ---- train / eval ----------------------------------------------------------

int run_train(const TrainCommand& cmd, Context& ctx) {
    if (cmd.out_dir.empty()) throw ConfigError("train needs --out-dir");
    LoadedData data = load_data(cmd.source, ctx);
    const ModelConfig config = resolve_config(cmd.options, data.train);
    const std::size_t in_features = data.train.feature_width();
    const std::size_t classes = data.train.num_classes();
    if (data.test && data.test->feature_width() != in_features)
        throw ShapeError("test data has " + std::to_string(data.test->feature_width()) +
                         " node features, training data has " + std::to_string(in_features));

    std::optional<ModelParams> initial;
    if (!cmd.resume.empty()) initial = params_from_checkpoint(load_checkpoint(cmd.resume), config, in_features, classes);

    const fs::path dir(cmd.out_dir);
    auto metrics = open_output(dir / "metrics.csv");
    metrics_header(metrics);
    std::optional<EdgeStats> stats;
    const auto on_epoch = [&](const EpochMetrics& m, const ModelParams& params) {
        metrics_row(metrics, m.epoch, "train", m.loss, m.accuracy);
        if (data.test) {
            const Evaluation ev = evaluate(data.test->samples, classes, params, config, stats, ctx.workers);
            metrics_row(metrics, m.epoch, "test", ev.loss, ev.accuracy);
        }
    };
    if (config.edge_scheme == EdgeScheme::GaussianInput) stats = compute_edge_stats(data.train.samples);
    const TrainResult result =
        train(data.train.samples, classes, config, train_options(cmd.options, ctx), on_epoch, std::move(initial));

    Checkpoint ckpt = make_checkpoint(result.params, config, in_features, classes, result.stats);
    ckpt.meta.emplace_back("epochs", std::to_string(cmd.options.epochs));
    ckpt.meta.emplace_back("seed", std::to_string(cmd.options.seed));
    save_checkpoint(ckpt, dir / "model.ckpt");

    const GraphDataset& report_set = data.test ? *data.test : data.train;
    const Evaluation final_eval = evaluate(report_set.samples, classes, result.params, config, result.stats, ctx.workers);
    write_confusion(dir / "confusion.csv", report_set, final_eval);

    const EpochMetrics& last = result.history.back();
    ctx.out << "trained " << result.history.size() << " epochs on " << data.train.samples.size()
            << " graphs, final train loss " << num(last.loss) << '\n';
    ctx.out << (data.test ? "test" : "train") << " overall accuracy " << num(final_eval.accuracy) << '\n';
    ctx.out << "wrote " << (dir / "model.ckpt").string() << '\n';
    return kExitOk;
}

int run_eval(const EvalCommand& cmd, Context& ctx) {
    if (cmd.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
    const Checkpoint ckpt = load_checkpoint(cmd.checkpoint);
    const ModelConfig config = ModelConfig::from_meta(ckpt.meta);
    auto meta_size = [&](const std::string& key) {
        const auto v = ckpt.meta_value(key);
        std::size_t out = 0;
        if (!v || !text::parse_number(std::string_view(*v), out))
            throw FormatError("checkpoint metadata lacks '" + key + "'", 0);
        return out;
    };
    const std::size_t in_features = meta_size("in_features");
    const std::size_t classes = meta_size("num_classes");
    const ModelParams params = params_from_checkpoint(ckpt, config, in_features, classes);

    GraphDataset ds = load_primary(cmd.source, ctx);
    if (!cmd.ids.empty()) ds = split_by_ids(ds, load_id_list(cmd.ids)).second;
    if (ds.samples.empty()) throw ConfigError("nothing to evaluate");
    if (ds.feature_width() != in_features)
        throw ShapeError("dataset has " + std::to_string(ds.feature_width()) + " node features, checkpoint expects " +
                         std::to_string(in_features));
    if (ds.num_classes() != classes)
        throw ShapeError("dataset has " + std::to_string(ds.num_classes()) + " classes, checkpoint expects " +
                         std::to_string(classes));

    const Evaluation ev = evaluate(ds.samples, classes, params, config, stats_from_checkpoint(ckpt), ctx.workers);
    std::size_t correct = 0;
    for (std::size_t t = 0; t < classes; ++t) correct += ev.confusion[t][t];
    ctx.out << "overall accuracy " << num(ev.accuracy) << " (" << correct << '/' << ds.samples.size() << ")\n";
    ctx.out << "mean loss " << num(ev.loss) << '\n';
    if (!cmd.metrics.empty()) {
        auto out = open_output(cmd.metrics);
        metrics_header(out);
        const auto epochs = ckpt.meta_value("epochs");
        std::size_t e = 0;
        if (epochs) text::parse_number(std::string_view(*epochs), e);
        metrics_row(out, e, "eval", ev.loss, ev.accuracy);
    }
    if (!cmd.confusion.empty()) write_confusion(cmd.confusion, ds, ev);
    return kExitOk;
}

// ---- cross-validation ------------------------------------------------------

int run_xval(const XvalCommand& cmd, Context& ctx) {
    const GraphDataset ds = load_primary(cmd.source, ctx);
    const ModelConfig config = resolve_config(cmd.options, ds);
    const FoldPlan plan = make_folds(ds, cmd.folds, cmd.options.seed, cmd.stratified);

    std::optional<std::ofstream> csv;
    if (!cmd.out.empty()) {
        csv = open_output(cmd.out);
        *csv << "fold,train_size,test_size,loss,accuracy,accuracy_std\n";
    }
    std::vector<double> accs, losses;
    for (std::size_t f = 0; f < plan.k; ++f) {
        const auto [train_set, test_set] = split_by_fold(ds, plan, f);
        const TrainResult r =
            train(train_set.samples, ds.num_classes(), config, train_options(cmd.options, ctx));
        const Evaluation ev = evaluate(test_set.samples, ds.num_classes(), r.params, config, r.stats, ctx.workers);
        accs.push_back(ev.accuracy);
        losses.push_back(ev.loss);
        ctx.out << "fold " << f + 1 << '/' << plan.k << ": accuracy " << num(ev.accuracy) << " ("
                << test_set.samples.size() << " graphs)\n";
        if (csv)
            *csv << f + 1 << ',' << train_set.samples.size() << ',' << test_set.samples.size() << ',' << num(ev.loss)
                 << ',' << num(ev.accuracy) << ",\n";
    }
    ctx.out << "accuracy " << num(mean_of(accs)) << " +- " << num(std_of(accs)) << " over " << plan.k << " folds\n";
    if (csv) *csv << "mean,,," << num(mean_of(losses)) << ',' << num(mean_of(accs)) << ',' << num(std_of(accs)) << '\n';
    return kExitOk;
}

// ---- ablation grid ---------------------------------------------------------

int run_ablate(const AblateCommand& cmd, Context& ctx) {
    if (cmd.out.empty()) throw ConfigError("ablate needs --out");
    const LoadedData data = load_data(cmd.source, ctx);
    if (!data.test) throw ConfigError("ablate needs a held-out split (--test-ids or --test-data)");

    std::vector<EdgeScheme> schemes;
    for (const auto& s : cmd.schemes) schemes.push_back(parse_edge_scheme(s));
    if (schemes.empty()) schemes.assign(std::begin(kAllEdgeSchemes), std::end(kAllEdgeSchemes));
    std::vector<Normalization> norms;
    for (const auto& n : cmd.normalizations) norms.push_back(parse_normalization(n));
    if (norms.empty()) norms.assign(std::begin(kAllNormalizations), std::end(kAllNormalizations));

    const std::size_t classes = data.train.num_classes();
    auto csv = open_output(cmd.out);
    csv << "edge_scheme,normalization,train_loss,test_accuracy,status\n";
    int code = kExitOk;
    for (auto scheme : schemes) {
        for (auto norm : norms) {
            ModelOptions o = cmd.options;
            o.model.edge_scheme = scheme;
            o.model.normalization = norm;
            const ModelConfig config = resolve_config(o, data.train);
            csv << to_string(scheme) << ',' << to_string(norm) << ',';
            try {
                const TrainResult r = train(data.train.samples, classes, config, train_options(o, ctx));
                const Evaluation ev = evaluate(data.test->samples, classes, r.params, config, r.stats, ctx.workers);
                csv << num(r.history.back().loss) << ',' << num(ev.accuracy) << ",ok\n";
                ctx.out << to_string(scheme) << " / " << to_string(norm) << ": accuracy " << num(ev.accuracy) << '\n';
            } catch (const NumericError& e) {
                csv << ",,numeric_error\n";
                ctx.err << "error: " << to_string(scheme) << " / " << to_string(norm) << ": " << e.what() << '\n';
                code = kExitNumeric;
            } catch (const DegeneracyError& e) {
                csv << ",,degenerate\n";
                ctx.err << "error: " << to_string(scheme) << " / " << to_string(norm) << ": " << e.what() << '\n';
                code = kExitNumeric;
            }
        }
    }
    return code;
}

}  // namespace semgraph::cli
