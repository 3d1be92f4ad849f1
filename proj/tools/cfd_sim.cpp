// Command-line front end: run experiments, export partitions, code soft-label
// files and summarize finished runs.
#include "cfd/codec/entropy.hpp"
#include "cfd/codec/wire.hpp"
#include "cfd/error.hpp"
#include "cfd/harness.hpp"

#include "CLI11.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace cfd;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

Matrix read_f32(const std::filesystem::path& path, std::size_t classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const std::size_t row_bytes = classes * 4;
    if (bytes.size() % row_bytes != 0) {
        throw FormatError(path.string() + ": size is not a multiple of " + std::to_string(row_bytes) + " bytes",
                          bytes.size() - bytes.size() % row_bytes);
    }
    Matrix m(static_cast<Eigen::Index>(bytes.size() / row_bytes), static_cast<Eigen::Index>(classes));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const auto* b = reinterpret_cast<const unsigned char*>(bytes.data()) + 4 * i;
        const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
                                   (std::uint32_t{b[3]} << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        m.data()[i] = f;
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double s = m.row(r).sum();
        if (s > 0.0) m.row(r) /= s;
    }
    return m;
}

std::vector<double> parse_targets(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw ConfigError("bad target accuracy '" + item + "'");
        }
    }
    return out;
}

int cmd_run(const std::string& config, const std::string& out_dir, std::optional<std::uint64_t> seed) {
    RunConfig cfg = load_run_config(config);
    if (seed) apply_seed_override(cfg, *seed);
    const RunReport report = run_experiment(cfg);
    emit_results(report, cfg.eval.targets, out_dir);
    for (const auto& r : report.rows) {
        std::cout << "round " << r.round << "  acc " << r.accuracy << "  up " << r.up_bytes << " B  down "
                  << r.down_bytes << " B\n";
    }
    if (!cfg.eval.targets.empty()) print_targets(std::cout, report, cfg.eval.targets);
    std::cout << "results written to " << out_dir << '\n';
    return 0;
}

int cmd_partition(const std::string& config, const std::string& out_path) {
    const RunConfig cfg = load_run_config(config);
    const ExperimentData data = prepare_data(cfg);
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write " + out_path);
    write_partition_jsonl(out, data.partition);
    std::cout << data.partition.size() << " clients written to " << out_path << '\n';
    return 0;
}

int cmd_encode(const std::string& in_path, const std::string& mode, const std::string& ref_path, std::size_t classes,
               std::string out_path, std::uint64_t tie_seed) {
    const SoftLabelMatrix y(read_f32(in_path, classes));
    EncodedMessage msg;
    if (mode == "raw32") {
        msg = encode_upstream(WireMode::raw32, {&y}, {1, 0});
    } else {
        const QuantizedLabels q = quantize_matrix(y, 1, tie_seed);
        if (mode == "q1") {
            msg = encode_upstream(WireMode::quantized, {nullptr, &q}, {1, 0});
        } else {
            std::optional<QuantizedLabels> prev;
            if (!ref_path.empty()) prev = quantize_matrix(SoftLabelMatrix(read_f32(ref_path, classes)), 1, tie_seed);
            msg = encode_upstream(WireMode::quantized_delta, {nullptr, &q, prev ? &*prev : nullptr, 0},
                                  {prev ? 2u : 1u, 0});
        }
    }
    if (out_path.empty()) out_path = in_path + ".cfdm";
    const auto bytes = msg.serialize();
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + out_path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));

    const DecodedMessage check = decode_message(msg, nullptr);
    std::cout << "rows " << y.rows() << "  classes " << classes << "  mode " << mode << "\npayload " << msg.payload.size()
              << " B  message " << bytes.size() << " B\n";
    if (!check.stream.symbols.empty()) {
        const double h = empirical_entropy(check.stream.symbols);
        const double per_symbol = 8.0 * static_cast<double>(msg.payload.size()) /
                                  static_cast<double>(check.stream.symbols.size());
        std::cout << "entropy " << h << " bits/symbol  coded " << per_symbol << " bits/symbol  eta "
                  << per_symbol - h << '\n';
    }
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& targets) {
    std::ifstream in(std::filesystem::path(run_dir) / "results.csv");
    if (!in) throw IoError("cannot open " + (std::filesystem::path(run_dir) / "results.csv").string());
    RunReport report;
    report.rows = read_csv(in);
    print_targets(std::cout, report, parse_targets(targets));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated distillation simulator with compressed soft-label transport"};
    app.require_subcommand(1);

    std::string config, out_dir = "results", partition_out, in_path, mode = "q1", ref_path, encode_out, run_dir,
                        targets = "0.5,0.8,0.9";
    std::optional<std::uint64_t> seed_override;
    std::size_t classes = 0;
    std::uint64_t tie_seed = 0;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed-override", seed_override, "derive every seed from this value");

    auto* encode = app.add_subcommand("encode", "code a float32 soft-label file");
    encode->add_option("--in", in_path, "row-major little-endian float32 soft labels")->required()->check(CLI::ExistingFile);
    encode->add_option("--mode", mode, "raw32, q1 or q1delta")->check(CLI::IsMember({"raw32", "q1", "q1delta"}));
    encode->add_option("--ref", ref_path, "previous round's soft labels (q1delta)")->check(CLI::ExistingFile);
    encode->add_option("--classes", classes, "number of classes per row")->required()->check(CLI::Range(1, 65534));
    encode->add_option("--out", encode_out, "output message file (default <in>.cfdm)");
    encode->add_option("--tie-seed", tie_seed, "quantizer tie-break seed");

    auto* part = app.add_subcommand("partition", "export the client partition as JSON lines");
    part->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    part->add_option("--out", partition_out, "output .jsonl")->required();

    auto* report = app.add_subcommand("report", "bits-to-target table for a finished run");
    report->add_option("--run", run_dir, "run output directory")->required()->check(CLI::ExistingDirectory);
    report->add_option("--targets", targets, "comma-separated accuracies");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config, out_dir, seed_override);
        if (*encode) return cmd_encode(in_path, mode, ref_path, classes, encode_out, tie_seed);
        if (*part) return cmd_partition(config, partition_out);
        if (*report) return cmd_report(run_dir, targets);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
