#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semgraph/gnn.hpp"
#include "semgraph/partition.hpp"

namespace semgraph::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFileErrors = 1;  // some inputs failed, the rest were processed
inline constexpr int kExitUsage = 2;       // bad arguments, configuration or input data
inline constexpr int kExitNumeric = 3;     // training or evaluation hit a non-finite value

struct Context {
    std::ostream& out;
    std::ostream& err;
    std::size_t workers = 1;
};

struct DataSource {
    std::string data;       // SEMGRAPH dataset file
    std::string tu_dir;     // TU directory (with tu_name)
    std::string tu_name;
    std::string test_ids;   // sidecar list of ids held out as the test split
    std::string test_data;  // separate SEMGRAPH test file
};

struct ModelOptions {
    ModelConfig model;
    std::optional<bool> input_edge_one;  // default: on for one-hot datasets
    std::size_t epochs = 200;
    std::size_t batch = 20;
    double lr = 0.001;
    std::uint64_t seed = 0;
};

struct AnnotateOptions {
    std::string source;
    std::string templates;
    std::string out;
    std::string report;  // default <out>/report.csv
    std::size_t max_iters = 50;
    double tol = 1e-6;
    std::size_t points = 1024;
    std::uint64_t seed = 0;
};

struct ExtractOptions {
    std::string input;
    std::string out;
    double tau = kDefaultTau;
};

struct TrainCommand {
    DataSource source;
    ModelOptions options;
    std::string out_dir;
    std::string resume;
};

struct EvalCommand {
    DataSource source;
    std::string checkpoint;
    std::string ids;  // restrict evaluation to these ids
    std::string metrics;
    std::string confusion;
};

struct XvalCommand {
    DataSource source;
    ModelOptions options;
    std::size_t folds = 10;
    bool stratified = false;
    std::string out;
};

struct AblateCommand {
    DataSource source;
    ModelOptions options;
    std::vector<std::string> schemes;
    std::vector<std::string> normalizations;
    std::string out;
};

int run_annotate(const AnnotateOptions& opt, Context& ctx);
int run_extract(const ExtractOptions& opt, Context& ctx);
int run_train(const TrainCommand& cmd, Context& ctx);
int run_eval(const EvalCommand& cmd, Context& ctx);
int run_xval(const XvalCommand& cmd, Context& ctx);
int run_ablate(const AblateCommand& cmd, Context& ctx);

}  // namespace semgraph::cli
