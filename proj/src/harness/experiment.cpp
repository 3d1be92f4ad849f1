#include "cfd/harness.hpp"

#include "cfd/error.hpp"
#include "cfd/random.hpp"

#include <algorithm>
#include <numeric>

namespace cfd {

namespace {

// Random subset of `count` rows, kept in ascending index order.
Dataset take_rows(const Dataset& data, std::size_t count, std::uint64_t seed) {
    const PublicPool all{data.features, {}};
    return data.subset(select_random(all, count, seed));
}

int per_class(std::size_t total, int classes) {
    return static_cast<int>((total + static_cast<std::size_t>(classes) - 1) / static_cast<std::size_t>(classes));
}

ModelSpec resolved_model(const RunConfig& cfg, const Dataset& train) {
    ModelSpec spec = cfg.model;
    spec.input_dim = static_cast<int>(train.dim());
    spec.num_classes = train.num_classes;
    spec.validate();
    return spec;
}

void select_public(PublicPool& pool, const RunConfig& cfg, const ModelParams& model, const ModelSpec& spec) {
    const DataConfig& d = cfg.data;
    if (d.selection == SelectionStrategy::random) {
        pool.selected = select_random(pool, d.public_size, derive_seed(d.seed, {6}));
    } else {
        pool.selected = select_active(pool, d.public_size, forward(model, spec, pool.features), d.selection);
    }
}

}  // namespace

ExperimentData prepare_data(const RunConfig& cfg) {
    const DataConfig& d = cfg.data;
    ExperimentData out;
    if (d.source == DataSource::blobs) {
        const Matrix means = blob_means(d.num_classes, d.dim, d.seed);
        out.train = sample_blobs(means, d.samples_per_class, d.spread, derive_seed(d.seed, {1}));
        const Dataset pool = sample_blobs(means, per_class(d.public_pool_size, d.num_classes), d.public_spread,
                                          derive_seed(d.seed, {2}));
        out.pool.features = take_rows(pool, d.public_pool_size, derive_seed(d.seed, {3})).features;
        const Dataset val = sample_blobs(means, per_class(d.validation_size, d.num_classes), d.spread,
                                         derive_seed(d.seed, {4}));
        out.validation = take_rows(val, d.validation_size, derive_seed(d.seed, {5}));
    } else {
        const std::optional<int> classes = d.num_classes > 0 ? std::optional(d.num_classes) : std::nullopt;
        const Dataset all = d.source == DataSource::idx ? load_idx(d.images, d.labels, classes) : load_csv(d.csv, classes);
        if (all.size() <= d.public_pool_size + d.validation_size) {
            throw ConfigError("dataset has " + std::to_string(all.size()) + " rows, need more than public_pool_size + " +
                              "validation_size = " + std::to_string(d.public_pool_size + d.validation_size));
        }
        IndexSet order(all.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(d.seed, {1}));
        std::shuffle(order.begin(), order.end(), rng);
        const auto split = [&](std::size_t begin, std::size_t end) {
            IndexSet idx(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
            std::sort(idx.begin(), idx.end());
            return all.subset(idx);
        };
        out.pool.features = split(0, d.public_pool_size).features;
        out.validation = split(d.public_pool_size, d.public_pool_size + d.validation_size);
        out.train = split(d.public_pool_size + d.validation_size, all.size());
    }
    const ModelSpec spec = resolved_model(cfg, out.train);
    select_public(out.pool, cfg, init_model(spec), spec);
    out.partition = dirichlet_partition(out.train, cfg.partition);
    return out;
}

RunReport run_experiment(const RunConfig& cfg) {
    cfg.protocol.validate();
    ExperimentData data = prepare_data(cfg);
    const ModelSpec spec = resolved_model(cfg, data.train);
    const ProtocolConfig& pc = cfg.protocol;

    ServerState server = make_server(spec);
    std::vector<ClientState> clients = make_clients(data.train, data.partition, spec, pc);

    RunReport report;
    report.config = to_json(cfg);
    for (int t = 1; t <= pc.rounds; ++t) {
        const RoundPlan plan =
            plan_round(static_cast<std::uint32_t>(t), clients.size(), pc.participation_rate, pc.sampling_seed);
        const RoundResult result = run_round(server, clients, plan, data.pool, spec, pc);
        const double acc = accuracy(server.params, spec, data.validation.features, data.validation.labels);
        report.rows.push_back(ledger_row(result, acc, report.rows.empty() ? nullptr : &report.rows.back()));
        if (cfg.data.reselect) {
            select_public(data.pool, cfg, server.params, spec);
            refresh_broadcast(server, data.pool, spec, pc);
        }
    }
    return report;
}

LedgerRow ledger_row(const RoundResult& round, double accuracy, const LedgerRow* previous) {
    LedgerRow row;
    row.round = round.plan.round;
    row.accuracy = accuracy;
    row.participants = round.plan.participants.size();

    std::size_t up_symbols = 0, down_symbols = 0, uploads = 0;
    double up_weighted = 0.0, down_weighted = 0.0, label_sum = 0.0;
    for (const auto& m : round.messages) {
        if (m.direction == Direction::up) {
            row.up_bytes += m.payload_bytes;
            up_symbols += m.symbols;
            up_weighted += m.entropy_bits * static_cast<double>(m.symbols);
            label_sum += m.label_entropy_bits;
            ++uploads;
        } else {
            row.down_bytes += m.payload_bytes;
            down_symbols += m.symbols;
            down_weighted += m.entropy_bits * static_cast<double>(m.symbols);
        }
    }
    if (up_symbols > 0) {
        row.up_entropy_bits = up_weighted / static_cast<double>(up_symbols);
        row.up_eta = 8.0 * static_cast<double>(row.up_bytes) / static_cast<double>(up_symbols) - row.up_entropy_bits;
    }
    if (down_symbols > 0) row.down_entropy_bits = down_weighted / static_cast<double>(down_symbols);
    if (uploads > 0) row.up_label_entropy_bits = label_sum / static_cast<double>(uploads);
    row.cumulative_up_bytes = row.up_bytes + (previous ? previous->cumulative_up_bytes : 0);
    row.cumulative_down_bytes = row.down_bytes + (previous ? previous->cumulative_down_bytes : 0);
    return row;
}

double RunReport::per_participant_bytes(Direction d, std::size_t through_round) const {
    double total = 0.0;
    for (const auto& r : rows) {
        if (r.round > through_round) break;
        if (r.participants == 0) continue;
        const auto bytes = d == Direction::up ? r.up_bytes : r.down_bytes;
        total += static_cast<double>(bytes) / static_cast<double>(r.participants);
    }
    return total;
}

std::optional<BitsToTarget> bits_to_target(const RunReport& report, double target) {
    for (const auto& r : report.rows) {
        if (r.accuracy >= target) {
            BitsToTarget b;
            b.target = target;
            b.round = r.round;
            b.up_mb = report.per_participant_bytes(Direction::up, r.round) / 1e6;
            b.down_mb = report.per_participant_bytes(Direction::down, r.round) / 1e6;
            b.up_total_mb = static_cast<double>(r.cumulative_up_bytes) / 1e6;
            b.down_total_mb = static_cast<double>(r.cumulative_down_bytes) / 1e6;
            return b;
        }
    }
    return std::nullopt;
}

}  // namespace cfd
