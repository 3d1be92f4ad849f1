#include "cfd/protocols.hpp"

#include "cfd/codec/entropy.hpp"
#include "cfd/error.hpp"
#include "cfd/random.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace cfd {

namespace {

constexpr std::uint32_t kServerId = 0xFFFFFFFFu;

bool valid_bits(int b) { return (b >= 1 && b <= 15) || b == kRawBits; }

// Runs fn(0..n-1) on up to `workers` threads. The first exception in index
// order is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

Matrix params_column(const ModelParams& p) {
    Matrix m(static_cast<Eigen::Index>(p.param_count()), 1);
    std::copy(p.values().begin(), p.values().end(), m.data());
    return m;
}

ModelParams params_from_column(const Matrix& m, const std::vector<TensorInfo>& layout) {
    return ModelParams(layout, std::vector<double>(m.data(), m.data() + m.size()));
}

// float32 transport can leave row sums a few ulps off one.
SoftLabelMatrix renormalized(Matrix m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double s = m.row(r).sum();
        if (s > 0.0) m.row(r) /= s;
    }
    return SoftLabelMatrix(std::move(m));
}

double label_entropy(const std::vector<int>& classes) {
    if (classes.empty()) return 0.0;
    std::vector<std::uint32_t> symbols(classes.begin(), classes.end());
    return empirical_entropy(symbols);
}

std::vector<int> grid_argmax(const QuantizedLabels& labels) {
    std::vector<int> out(labels.rows());
    for (std::size_t r = 0; r < labels.rows(); ++r) {
        const auto row = labels.row(r);
        out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

MessageRecord describe(const EncodedMessage& msg, Direction dir, std::uint32_t client, const SymbolStream& stream,
                       double label_entropy_bits) {
    MessageRecord rec;
    rec.direction = dir;
    rec.client = client;
    rec.mode = msg.header.mode;
    rec.payload_bytes = msg.payload.size();
    rec.label_entropy_bits = label_entropy_bits;
    if (msg.header.mode == WireMode::raw32) {
        rec.symbols = msg.header.rows;
        rec.entropy_bits = 32.0 * msg.header.classes;
    } else {
        rec.symbols = stream.symbols.size();
        rec.entropy_bits = stream.symbols.empty() ? 0.0 : empirical_entropy(stream.symbols);
    }
    return rec;
}

// Broadcast and upload payloads for soft labels at precision `bits`.
EncodedMessage encode_labels(const SoftLabelMatrix& y, int bits, std::uint64_t tie_seed, const MessageContext& ctx,
                             QuantizedLabels* quantized_out) {
    if (bits == kRawBits) return encode_raw32(y.values(), ctx);
    QuantizedLabels q = quantize_matrix(y, bits, tie_seed);
    EncodedMessage msg = encode_quantized(q, ctx);
    if (quantized_out != nullptr) *quantized_out = std::move(q);
    return msg;
}

struct ClientOutcome {
    EncodedMessage upload;
    MessageRecord record;
    std::optional<QuantizedLabels> uploaded;
    ModelParams distilled;
    ModelParams trained;
};

struct Received {
    SoftLabelMatrix labels;
    double label_entropy_bits = 0.0;
};

Received receive(const DecodedMessage& decoded) {
    if (decoded.raw) {
        SoftLabelMatrix y = renormalized(*decoded.raw);
        return {y, label_entropy(row_argmax(y.values()))};
    }
    const QuantizedLabels& q = *decoded.labels;
    return {SoftLabelMatrix(q.dequantize()), label_entropy(grid_argmax(q))};
}

ModelParams client_start(const ServerState& server, const ModelSpec& spec, const ProtocolConfig& cfg,
                         std::uint32_t round) {
    if (cfg.init_mode == InitMode::previous) {
        return server.shared_client_model ? *server.shared_client_model : init_model(spec);
    }
    ModelSpec fresh = spec;
    fresh.init_seed = derive_seed(cfg.init_seed, {round, seed_tag::client_init});
    return init_model(fresh);
}

ClientOutcome client_step(ClientState& client, const ServerState& server, const Matrix& public_x,
                          const ModelSpec& spec, const ProtocolConfig& cfg, std::uint32_t round) {
    ClientOutcome out;
    ModelParams params = client_start(server, spec, cfg, round);

    // Distillation
    if (round > 1) {
        if (!server.broadcast) throw ProtocolError("round " + std::to_string(round) + " has no broadcast to download");
        const Received targets = receive(decode_message(*server.broadcast));
        if (targets.labels.rows() != static_cast<std::size_t>(public_x.rows())) {
            throw ShapeError("broadcast has " + std::to_string(targets.labels.rows()) + " rows, public set has " +
                             std::to_string(public_x.rows()));
        }
        OptimizerState opt = cfg.make_optimizer();
        params = train(std::move(params), spec, public_x, targets.labels.values(), opt,
                       {cfg.distill_epochs, cfg.batch_size, derive_seed(cfg.init_seed, {round, seed_tag::client_distill})});
    }
    out.distilled = params;

    // Local training
    client.optimizer = cfg.make_optimizer();
    const Matrix targets = one_hot(client.local_data.labels, spec.num_classes);
    params = train(std::move(params), spec, client.local_data.features, targets, client.optimizer,
                   {cfg.local_epochs, cfg.batch_size, derive_seed(cfg.init_seed, {round, seed_tag::local_train})});
    client.params = params;
    out.trained = params;

    // Compress soft-labels and upload
    const SoftLabelMatrix y = forward(params, spec, public_x);
    const MessageContext ctx{round, client.id};
    if (cfg.b_up == kRawBits) {
        out.upload = encode_raw32(y.values(), ctx);
        out.record = describe(out.upload, Direction::up, client.id, {}, label_entropy(row_argmax(y.values())));
        return out;
    }
    QuantizedLabels q = quantize_matrix(y, cfg.b_up, derive_seed(cfg.tie_seed, {round, client.id, seed_tag::quantize_up}));
    SymbolStream stream;
    if (cfg.delta_coding) {
        const QuantizedLabels* prev = client.last_uploaded ? &*client.last_uploaded : nullptr;
        const DeltaMessage delta = delta_encode(q, prev, prev ? std::optional(client.last_uploaded_round) : std::nullopt);
        out.upload = encode_delta(delta, ctx);
        stream = delta_symbols(delta);
    } else {
        out.upload = encode_quantized(q, ctx);
        stream = quantized_symbols(q);
    }
    out.record = describe(out.upload, Direction::up, client.id, stream, label_entropy(grid_argmax(q)));
    client.last_uploaded = q;
    client.last_uploaded_round = round;
    out.uploaded = std::move(q);
    return out;
}

void check_participants(const RoundPlan& plan, std::size_t num_clients) {
    if (plan.participants.empty()) throw ProtocolError("round " + std::to_string(plan.round) + " has no participants");
    for (std::size_t i = 0; i < plan.participants.size(); ++i) {
        if (plan.participants[i] >= num_clients) {
            throw ProtocolError("participant id " + std::to_string(plan.participants[i]) + " out of range");
        }
        if (i > 0 && plan.participants[i] <= plan.participants[i - 1]) {
            throw ProtocolError("participant ids must be strictly ascending");
        }
    }
}

void check_round(const ServerState& server, const RoundPlan& plan) {
    if (plan.round != server.round + 1) {
        throw ProtocolError("expected round " + std::to_string(server.round + 1) + ", got " + std::to_string(plan.round));
    }
}

RoundResult distillation_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                               const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg) {
    check_round(server, plan);
    check_participants(plan, clients.size());
    if (pool.selected.empty()) throw ProtocolError("public pool has no selected samples");
    const Matrix public_x = pool.selected_features();
    const std::uint32_t t = plan.round;

    RoundResult result;
    result.plan = plan;

    // Download
    if (t > 1 && server.broadcast) {
        const DecodedMessage decoded = decode_message(*server.broadcast);
        const Received r = receive(decoded);
        for (std::uint32_t id : plan.participants) {
            result.messages.push_back(describe(*server.broadcast, Direction::down, id, decoded.stream,
                                               r.label_entropy_bits));
        }
    }

    // Clients
    std::vector<ClientOutcome> outcomes(plan.participants.size());
    parallel_for(outcomes.size(), cfg.workers, [&](std::size_t i) {
        outcomes[i] = client_step(clients[plan.participants[i]], server, public_x, spec, cfg, t);
    });
    for (std::size_t i = 1; i < outcomes.size(); ++i) {
        if (!(outcomes[i].distilled == outcomes[0].distilled)) {
            throw ProtocolError("participants diverged after distillation in round " + std::to_string(t));
        }
    }
    server.shared_client_model = outcomes.front().distilled;

    // Aggregate
    std::vector<SoftLabelMatrix> received;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const std::uint32_t id = plan.participants[i];
        const EncodedMessage wire = EncodedMessage::parse(outcomes[i].upload.serialize());
        const auto ref = server.delta_references.find(id);
        const DecodedMessage decoded =
            decode_message(wire, ref == server.delta_references.end() ? nullptr : &ref->second);
        if (decoded.labels) server.delta_references[id] = *decoded.labels;
        received.push_back(receive(decoded).labels);
        result.messages.push_back(outcomes[i].record);
        result.uploads.push_back(std::move(outcomes[i].upload));
    }
    server.aggregated = aggregate_softlabels(received);

    // Server distillation
    const SoftLabelMatrix server_labels = dual_distill_server(server, spec, public_x, *server.aggregated, cfg);
    const SoftLabelMatrix& source = cfg.init_mode == InitMode::dual_distill ? server_labels : *server.aggregated;
    server.broadcast = encode_labels(source, cfg.b_down, derive_seed(cfg.tie_seed, {t, seed_tag::quantize_down}),
                                     {t, kServerId}, nullptr);
    server.round = t;
    return result;
}

}  // namespace

std::vector<std::string> ProtocolConfig::problems() const {
    std::vector<std::string> out;
    if (!valid_bits(b_up)) out.push_back("b_up must be in [1, 15] or 32, got " + std::to_string(b_up));
    if (!valid_bits(b_down)) out.push_back("b_down must be in [1, 15] or 32, got " + std::to_string(b_down));
    if (delta_coding && b_up != 1) out.push_back("delta_coding requires b_up = 1");
    if (protocol != Protocol::cfd && (b_up != kRawBits || b_down != kRawBits)) {
        out.push_back("fa and fd send 32-bit values: b_up and b_down must be 32");
    }
    if (protocol != Protocol::cfd && delta_coding) out.push_back("delta_coding is only available for cfd");
    if (!(participation_rate > 0.0 && participation_rate <= 1.0)) {
        out.push_back("participation_rate must be in (0, 1]");
    }
    if (rounds < 1) out.push_back("rounds must be >= 1");
    if (local_epochs < 1) out.push_back("local_epochs must be >= 1");
    if (distill_epochs < 1) out.push_back("distill_epochs must be >= 1");
    if (batch_size < 1) out.push_back("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) out.push_back("learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) out.push_back("momentum must be in [0, 1)");
    if (workers < 1) out.push_back("workers must be >= 1");
    return out;
}

void ProtocolConfig::validate() const {
    const auto list = problems();
    if (list.empty()) return;
    std::ostringstream msg;
    msg << "invalid protocol config:";
    for (const auto& p : list) msg << "\n  - " << p;
    throw ConfigError(msg.str());
}

OptimizerState ProtocolConfig::make_optimizer() const {
    return optimizer == OptimizerKind::adam ? OptimizerState::adam(learning_rate)
                                            : OptimizerState::sgd(learning_rate, momentum);
}

std::size_t RoundResult::bytes(Direction d) const {
    std::size_t total = 0;
    for (const auto& m : messages)
        if (m.direction == d) total += m.payload_bytes;
    return total;
}

RoundPlan plan_round(std::uint32_t round, std::size_t num_clients, double participation_rate, std::uint64_t seed) {
    if (num_clients == 0) throw ProtocolError("no clients");
    if (!(participation_rate > 0.0 && participation_rate <= 1.0)) {
        throw ConfigError("participation_rate must be in (0, 1]");
    }
    const auto wanted = static_cast<std::size_t>(std::lround(participation_rate * static_cast<double>(num_clients)));
    const std::size_t count = std::clamp<std::size_t>(wanted, 1, num_clients);
    std::vector<std::uint32_t> ids(num_clients);
    std::iota(ids.begin(), ids.end(), 0u);
    Rng rng(derive_seed(seed, {round, seed_tag::participants}));
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(count);
    std::sort(ids.begin(), ids.end());
    return {round, ids};
}

ServerState make_server(const ModelSpec& spec) {
    ServerState s;
    s.params = init_model(spec);
    return s;
}

std::vector<ClientState> make_clients(const Dataset& data, const std::vector<IndexSet>& partition,
                                      const ModelSpec& spec, const ProtocolConfig& cfg) {
    std::vector<ClientState> clients;
    clients.reserve(partition.size());
    for (std::size_t i = 0; i < partition.size(); ++i) {
        ClientState c;
        c.id = static_cast<std::uint32_t>(i);
        c.local_data = data.subset(partition[i]);
        c.params = init_model(spec);
        c.optimizer = cfg.make_optimizer();
        clients.push_back(std::move(c));
    }
    return clients;
}

SoftLabelMatrix dual_distill_server(ServerState& server, const ModelSpec& spec, const Matrix& public_x,
                                    const SoftLabelMatrix& targets, const ProtocolConfig& cfg) {
    if (cfg.distill_epochs < 1) throw ValidationError("distill_epochs must be >= 1");
    OptimizerState opt = cfg.make_optimizer();
    const std::uint32_t t = server.round + 1;
    server.params = train(std::move(server.params), spec, public_x, targets.values(), opt,
                          {cfg.distill_epochs, cfg.batch_size, derive_seed(cfg.init_seed, {t, seed_tag::server_distill})});
    return forward(server.params, spec, public_x);
}

RoundResult fa_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                     const ModelSpec& spec, const ProtocolConfig& cfg) {
    check_round(server, plan);
    check_participants(plan, clients.size());
    const std::vector<TensorInfo> layout = model_layout(spec);
    if (!(server.params.layout() == layout)) throw ProtocolError("server model does not match the model spec");
    const std::uint32_t t = plan.round;

    RoundResult result;
    result.plan = plan;
    const EncodedMessage down = encode_raw32(params_column(server.params), {t, kServerId});
    const ModelParams received = params_from_column(decode_raw32(EncodedMessage::parse(down.serialize())), layout);
    for (std::uint32_t id : plan.participants) result.messages.push_back(describe(down, Direction::down, id, {}, 0.0));

    std::vector<EncodedMessage> uploads(plan.participants.size());
    parallel_for(uploads.size(), cfg.workers, [&](std::size_t i) {
        ClientState& client = clients[plan.participants[i]];
        client.optimizer = cfg.make_optimizer();
        const Matrix targets = one_hot(client.local_data.labels, spec.num_classes);
        client.params = train(received, spec, client.local_data.features, targets, client.optimizer,
                              {cfg.local_epochs, cfg.batch_size,
                               derive_seed(cfg.init_seed, {t, seed_tag::local_train})});
        uploads[i] = encode_raw32(params_column(client.params), {t, client.id});
    });

    std::vector<ModelParams> models;
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < uploads.size(); ++i) {
        const ClientState& client = clients[plan.participants[i]];
        const Matrix column = decode_raw32(EncodedMessage::parse(uploads[i].serialize()));
        if (static_cast<std::size_t>(column.rows()) != received.param_count()) {
            throw ProtocolError("client " + std::to_string(client.id) + " uploaded a model with a different layout");
        }
        models.push_back(params_from_column(column, layout));
        sizes.push_back(client.local_data.size());
        result.messages.push_back(describe(uploads[i], Direction::up, client.id, {}, 0.0));
        result.uploads.push_back(std::move(uploads[i]));
    }
    server.params = weighted_average(models, sizes);
    server.round = t;
    return result;
}

RoundResult fd_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                     const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg) {
    ProtocolConfig fd = cfg;
    fd.protocol = Protocol::fd;
    fd.b_up = kRawBits;
    fd.b_down = kRawBits;
    fd.delta_coding = false;
    fd.init_mode = InitMode::previous;
    return distillation_round(server, clients, plan, pool, spec, fd);
}

RoundResult cfd_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                      const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg) {
    if (cfg.protocol != Protocol::cfd) throw ProtocolError("cfd_round needs protocol = cfd");
    cfg.validate();
    return distillation_round(server, clients, plan, pool, spec, cfg);
}

void refresh_broadcast(ServerState& server, const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg) {
    if (cfg.protocol != Protocol::cfd || cfg.init_mode != InitMode::dual_distill) {
        throw ProtocolError("only dual distillation can rebuild the broadcast for a new public set");
    }
    const SoftLabelMatrix y = forward(server.params, spec, pool.selected_features());
    server.broadcast = encode_labels(y, cfg.b_down, derive_seed(cfg.tie_seed, {server.round, seed_tag::quantize_down}),
                                     {server.round, kServerId}, nullptr);
}

RoundResult run_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                      const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg) {
    switch (cfg.protocol) {
        case Protocol::fa: return fa_round(server, clients, plan, spec, cfg);
        case Protocol::fd: return fd_round(server, clients, plan, pool, spec, cfg);
        case Protocol::cfd: return cfd_round(server, clients, plan, pool, spec, cfg);
    }
    throw ProtocolError("unknown protocol");
}

}  // namespace cfd
