#include "cfd/data.hpp"

#include "cfd/error.hpp"
#include "cfd/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <ostream>

namespace cfd {

void PartitionSpec::validate() const {
    if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
}

namespace {

std::vector<IndexSet> class_pools(const Dataset& data, Rng& rng) {
    std::vector<IndexSet> pools(static_cast<std::size_t>(data.num_classes));
    for (std::size_t i = 0; i < data.size(); ++i) pools[static_cast<std::size_t>(data.labels[i])].push_back(i);
    for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);
    return pools;
}

std::vector<IndexSet> equal_size_split(const Dataset& data, const PartitionSpec& spec, Rng& rng) {
    const auto num_classes = static_cast<std::size_t>(data.num_classes);
    auto pools = class_pools(data, rng);
    const std::size_t quota = data.size() / static_cast<std::size_t>(spec.num_clients);

    auto least_depleted = [&pools]() -> std::size_t {
        std::size_t best = 0;
        for (std::size_t c = 1; c < pools.size(); ++c) {
            if (pools[c].size() > pools[best].size()) best = c;
        }
        return best;
    };

    const auto k = static_cast<std::size_t>(spec.num_clients);
    std::vector<std::vector<double>> proportions;
    for (std::size_t i = 0; i < k; ++i) proportions.push_back(sample_dirichlet(num_classes, spec.alpha, rng));

    // Most concentrated clients fill first so they can take whole classes.
    std::vector<std::size_t> order(k);
    std::vector<double> peak(k);
    for (std::size_t i = 0; i < k; ++i) {
        order[i] = i;
        peak[i] = *std::max_element(proportions[i].begin(), proportions[i].end());
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return peak[a] > peak[b]; });

    std::vector<IndexSet> clients(k);
    for (std::size_t i : order) {
        auto& client = clients[i];
        const std::vector<double>& p = proportions[i];
        std::discrete_distribution<std::size_t> draw(p.begin(), p.end());
        std::vector<std::size_t> remap(num_classes);
        for (std::size_t c = 0; c < num_classes; ++c) remap[c] = c;

        client.reserve(quota);
        for (std::size_t s = 0; s < quota; ++s) {
            const std::size_t wanted = draw(rng);
            if (pools[remap[wanted]].empty()) {
                const std::size_t substitute = least_depleted();
                if (pools[substitute].empty()) {
                    throw PartitionError("every class pool is exhausted after " + std::to_string(s) +
                                         " draws; retry with another seed or fewer clients");
                }
                remap[wanted] = substitute;
            }
            auto& pool = pools[remap[wanted]];
            client.push_back(pool.back());
            pool.pop_back();
        }
        std::sort(client.begin(), client.end());
    }
    return clients;
}

std::vector<IndexSet> per_class_split(const Dataset& data, const PartitionSpec& spec, Rng& rng) {
    const auto k = static_cast<std::size_t>(spec.num_clients);
    auto pools = class_pools(data, rng);
    std::vector<IndexSet> clients(k);
    for (const auto& pool : pools) {
        const std::vector<double> q = sample_dirichlet(k, spec.alpha, rng);
        double cumulative = 0.0;
        std::size_t begin = 0;
        for (std::size_t i = 0; i < k; ++i) {
            cumulative += q[i];
            const std::size_t end =
                i + 1 == k ? pool.size()
                           : std::min(pool.size(), static_cast<std::size_t>(cumulative * static_cast<double>(pool.size())));
            for (std::size_t j = begin; j < end; ++j) clients[i].push_back(pool[j]);
            begin = std::max(begin, end);
        }
    }
    for (auto& client : clients) std::sort(client.begin(), client.end());
    return clients;
}

}  // namespace

std::vector<IndexSet> dirichlet_partition(const Dataset& data, const PartitionSpec& spec) {
    spec.validate();
    data.validate();
    if (static_cast<std::size_t>(spec.num_clients) > data.size()) {
        throw PartitionError("num_clients (" + std::to_string(spec.num_clients) + ") exceeds sample count (" +
                             std::to_string(data.size()) + ")");
    }
    Rng rng(spec.seed);
    return spec.equal_sizes ? equal_size_split(data, spec, rng) : per_class_split(data, spec, rng);
}

std::vector<double> class_shares(const Dataset& data, const IndexSet& indices) {
    std::vector<double> shares(static_cast<std::size_t>(data.num_classes), 0.0);
    if (indices.empty()) return shares;
    for (std::size_t i : indices) shares[static_cast<std::size_t>(data.labels.at(i))] += 1.0;
    for (auto& s : shares) s /= static_cast<double>(indices.size());
    return shares;
}

void write_partition_jsonl(std::ostream& out, const std::vector<IndexSet>& partition) {
    for (std::size_t i = 0; i < partition.size(); ++i) {
        out << nlohmann::json{{"client_id", i}, {"indices", partition[i]}}.dump() << '\n';
    }
}

}  // namespace cfd
