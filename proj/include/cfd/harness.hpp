#pragma once

#include "cfd/data.hpp"
#include "cfd/model.hpp"
#include "cfd/protocols.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cfd {

enum class DataSource { blobs, idx, csv };

struct DataConfig {
    DataSource source = DataSource::blobs;
    std::uint64_t seed = 0;

    // blobs
    int num_classes = 10;
    int dim = 32;
    int samples_per_class = 500;
    double spread = 1.0;
    double public_spread = 1.0;  // != spread gives a shifted public pool

    // idx / csv
    std::filesystem::path images;
    std::filesystem::path labels;
    std::filesystem::path csv;

    std::size_t public_pool_size = 1000;  // m
    std::size_t public_size = 1000;       // n_pub, selected once before round 1
    std::size_t validation_size = 1000;
    SelectionStrategy selection = SelectionStrategy::random;
    bool reselect = false;  // rerun active selection after every round
};

struct EvalConfig {
    std::vector<double> targets;
};

struct RunConfig {
    DataConfig data;
    PartitionSpec partition;
    ModelSpec model;  // input_dim and num_classes are filled from the data
    ProtocolConfig protocol;
    EvalConfig eval;
};

/// Parses the sectioned JSON schema (data, partition, model, protocol, eval).
/// Unknown keys, missing seeds, bad values and cross-field violations are all
/// collected and thrown together as one ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Replaces every seed with one derived from `seed`.
void apply_seed_override(RunConfig& cfg, std::uint64_t seed);

/// Client training data, public pool and validation split built from a config.
struct ExperimentData {
    Dataset train;
    PublicPool pool;
    Dataset validation;
    std::vector<IndexSet> partition;
};

ExperimentData prepare_data(const RunConfig& cfg);

struct LedgerRow {
    std::uint32_t round = 0;
    double accuracy = 0.0;
    std::size_t up_bytes = 0;
    std::size_t down_bytes = 0;
    double up_entropy_bits = 0.0;    // per transmitted symbol
    double down_entropy_bits = 0.0;
    double up_eta = 0.0;             // coded bits per symbol minus up_entropy_bits
    std::size_t cumulative_up_bytes = 0;
    std::size_t cumulative_down_bytes = 0;
    std::size_t participants = 0;
    double up_label_entropy_bits = 0.0;  // mean H of uploaded class labels

    friend bool operator==(const LedgerRow&, const LedgerRow&) = default;
};

struct RunReport {
    nlohmann::json config;
    std::vector<LedgerRow> rows;

    /// Sum over rounds of bytes / participants.
    double per_participant_bytes(Direction d, std::size_t through_round) const;
};

RunReport run_experiment(const RunConfig& cfg);

/// Builds a ledger row from one round's messages.
LedgerRow ledger_row(const RoundResult& round, double accuracy, const LedgerRow* previous);

/// MB are 10^6 bytes.
struct BitsToTarget {
    double target = 0.0;
    std::uint32_t round = 0;
    double up_mb = 0.0;  // per-participant average
    double down_mb = 0.0;
    double up_total_mb = 0.0;  // summed over participants
    double down_total_mb = 0.0;
};

/// Cumulative traffic at the first round with accuracy >= target; nullopt
/// ("n.a.") when no round reaches it.
std::optional<BitsToTarget> bits_to_target(const RunReport& report, double target);

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "round",           "accuracy",          "up_bytes",            "down_bytes",
        "up_entropy_bits", "down_entropy_bits", "up_eta",              "cumulative_up_bytes",
        "cumulative_down_bytes", "participants", "up_label_entropy_bits"};
    return cols;
}

void write_csv(std::ostream& out, const RunReport& report);
std::vector<LedgerRow> read_csv(std::istream& in);
nlohmann::json report_json(const RunReport& report, const std::vector<double>& targets);
/// One line per (round, direction).
void write_plot_data(std::ostream& out, const RunReport& report);

/// Writes results.csv, results.json and plot_data.csv into dir.
void emit_results(const RunReport& report, const std::vector<double>& targets, const std::filesystem::path& dir);

/// Table of bits-to-target entries, "n.a." for unreached targets.
void print_targets(std::ostream& out, const RunReport& report, const std::vector<double>& targets);

}  // namespace cfd
