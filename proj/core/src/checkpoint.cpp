#include "semgraph/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "semgraph/error.hpp"
#include "semgraph/text.hpp"

namespace semgraph {

namespace {
constexpr const char* kHeader = "SEMGRAPH-CHECKPOINT v1";
}

const Matrix* Checkpoint::find(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return &a.value;
    return nullptr;
}

std::optional<std::string> Checkpoint::meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return v;
    return std::nullopt;
}

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
    out << kHeader << '\n';
    for (const auto& [k, v] : ckpt.meta) out << "meta " << k << ' ' << v << '\n';
    for (const auto& a : ckpt.arrays) {
        out << "array " << a.name << ' ' << a.value.rows() << ' ' << a.value.cols() << '\n';
        for (std::size_t r = 0; r < a.value.rows(); ++r) {
            for (std::size_t c = 0; c < a.value.cols(); ++c) {
                if (c) out << ' ';
                out << text::format_double(a.value(r, c));
            }
            out << '\n';
        }
    }
    out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
    Checkpoint ckpt;
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        return true;
    };

    if (!next() || text::trim(line) != kHeader)
        throw FormatError("not a checkpoint (expected '" + std::string(kHeader) + "')", line_no);

    while (true) {
        if (!next()) throw FormatError("checkpoint truncated (missing 'end')", line_no);
        const auto tokens = text::split_ws(line);
        if (tokens.empty()) continue;
        if (tokens[0] == "end") break;
        if (tokens[0] == "meta") {
            if (tokens.size() < 2) throw FormatError("meta line without key", line_no);
            const std::size_t key_end = static_cast<std::size_t>(tokens[1].data() - line.data()) + tokens[1].size();
            ckpt.meta.emplace_back(std::string(tokens[1]), text::trim(std::string_view(line).substr(key_end)));
            continue;
        }
        if (tokens[0] != "array" || tokens.size() != 4)
            throw FormatError("expected 'array <name> <rows> <cols>'", line_no);
        std::size_t rows = 0, cols = 0;
        if (!text::parse_number(tokens[2], rows) || !text::parse_number(tokens[3], cols))
            throw FormatError("invalid array shape", line_no);
        Checkpoint::Array array{std::string(tokens[1]), Matrix(rows, cols)};
        for (std::size_t r = 0; r < rows; ++r) {
            if (!next()) throw FormatError("array '" + array.name + "' truncated", line_no);
            const auto values = text::split_ws(line);
            if (values.size() != cols)
                throw FormatError("array '" + array.name + "' row has " +
                                      std::to_string(values.size()) + " values, expected " +
                                      std::to_string(cols),
                                  line_no);
            for (std::size_t c = 0; c < cols; ++c) {
                if (!text::parse_number(values[c], array.value(r, c)))
                    throw FormatError("invalid number '" + std::string(values[c]) + "'", line_no);
            }
        }
        ckpt.arrays.push_back(std::move(array));
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path.string());
    write_checkpoint(ckpt, out);
    if (!out) throw ArgumentError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path.string());
    return read_checkpoint(in);
}

}  // namespace semgraph
