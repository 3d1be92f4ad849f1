#pragma once

#include "cfd/codec/quantize.hpp"
#include "cfd/codec/wire.hpp"
#include "cfd/data.hpp"
#include "cfd/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cfd {

enum class Protocol { fa, fd, cfd };
enum class InitMode { random, previous, dual_distill };

/// Precision value meaning "no quantization, send 32-bit floats".
inline constexpr int kRawBits = 32;

struct ProtocolConfig {
    Protocol protocol = Protocol::cfd;
    int b_up = 1;
    int b_down = 1;
    bool delta_coding = false;
    double participation_rate = 1.0;
    int rounds = 1;
    int local_epochs = 1;
    int distill_epochs = 1;
    InitMode init_mode = InitMode::dual_distill;

    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.0;
    int batch_size = 32;

    std::uint64_t sampling_seed = 0;
    std::uint64_t init_seed = 0;
    std::uint64_t tie_seed = 0;

    /// Client steps run on this many threads; results do not depend on it.
    int workers = 1;

    /// Every violated constraint, empty when valid.
    std::vector<std::string> problems() const;
    /// Throws ConfigError listing all problems.
    void validate() const;
    OptimizerState make_optimizer() const;
};

struct ClientState {
    std::uint32_t id = 0;
    Dataset local_data;
    ModelParams params;
    OptimizerState optimizer;
    std::optional<QuantizedLabels> last_uploaded;
    std::uint32_t last_uploaded_round = 0;
};

struct ServerState {
    ModelParams params;  // theta_S, or the global model under fa
    std::map<std::uint32_t, QuantizedLabels> delta_references;
    std::optional<SoftLabelMatrix> aggregated;        // Y^pub
    std::optional<EncodedMessage> broadcast;          // next round's download
    std::optional<ModelParams> shared_client_model;   // init_mode = previous
    std::uint32_t round = 0;
};

struct RoundPlan {
    std::uint32_t round = 1;
    std::vector<std::uint32_t> participants;  // ascending client ids
};

/// max(1, round(rate * num_clients)) ids sampled without replacement.
RoundPlan plan_round(std::uint32_t round, std::size_t num_clients, double participation_rate, std::uint64_t seed);

enum class Direction { up, down };

/// One transmitted message as seen by the ledger.
struct MessageRecord {
    Direction direction = Direction::up;
    std::uint32_t client = 0;
    WireMode mode = WireMode::raw32;
    std::size_t payload_bytes = 0;
    std::size_t symbols = 0;
    double entropy_bits = 0.0;        // per symbol; 32 * C for raw32 rows
    double label_entropy_bits = 0.0;  // H of the per-row argmax class
};

struct RoundResult {
    RoundPlan plan;
    std::vector<MessageRecord> messages;
    std::vector<EncodedMessage> uploads;  // in participant order
    std::size_t bytes(Direction d) const;
};

/// Unweighted mean of the uploads; rows stay stochastic.
SoftLabelMatrix aggregate_softlabels(const std::vector<SoftLabelMatrix>& uploads);
SoftLabelMatrix aggregate_softlabels(const std::vector<QuantizedLabels>& uploads);

/// Data-size-weighted mean of parameter vectors.
ModelParams weighted_average(const std::vector<ModelParams>& params, const std::vector<std::size_t>& sizes);

/// Trains theta_S for distill_epochs from its previous value on (X^pub, Y^pub)
/// and returns its predictions on X^pub.
SoftLabelMatrix dual_distill_server(ServerState& server, const ModelSpec& spec, const Matrix& public_x,
                                    const SoftLabelMatrix& targets, const ProtocolConfig& cfg);

/// Fresh server state: theta_S = init_model(spec).
ServerState make_server(const ModelSpec& spec);
std::vector<ClientState> make_clients(const Dataset& data, const std::vector<IndexSet>& partition,
                                      const ModelSpec& spec, const ProtocolConfig& cfg);

RoundResult fa_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                     const ModelSpec& spec, const ProtocolConfig& cfg);

/// Federated distillation with raw 32-bit soft labels in both directions.
RoundResult fd_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                     const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg);

RoundResult cfd_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                      const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg);

/// Re-encodes the downstream message from theta_S on the pool's current
/// selection. Needed after the public set changes; requires init_mode =
/// dual_distill since aggregated labels belong to the old selection.
void refresh_broadcast(ServerState& server, const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg);

/// Dispatches on cfg.protocol.
RoundResult run_round(ServerState& server, std::vector<ClientState>& clients, const RoundPlan& plan,
                      const PublicPool& pool, const ModelSpec& spec, const ProtocolConfig& cfg);

}  // namespace cfd
