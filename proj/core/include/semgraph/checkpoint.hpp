#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semgraph/tensor.hpp"

namespace semgraph {

/// Named arrays plus free-form string metadata.
///
/// Text layout, one record per line:
///
///     SEMGRAPH-CHECKPOINT v1
///     meta <key> <value>            (value runs to end of line)
///     array <name> <rows> <cols>
///     <cols reals>                  (repeated <rows> times)
///     end
///
/// Reals use the shortest decimal form that parses back to the same
/// double, so save/load is lossless.
struct Checkpoint {
    struct Array {
        std::string name;
        Matrix value;
    };

    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<Array> arrays;

    const Matrix* find(const std::string& name) const;
    std::optional<std::string> meta_value(const std::string& key) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);

}  // namespace semgraph
