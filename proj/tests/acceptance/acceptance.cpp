// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "oracles.hpp"

#include "cfd/codec/delta.hpp"
#include "cfd/codec/entropy.hpp"
#include "cfd/codec/quantize.hpp"
#include "cfd/codec/wire.hpp"
#include "cfd/data.hpp"
#include "cfd/harness.hpp"
#include "cfd/model.hpp"
#include "cfd/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace cfd;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Base setting for the end-to-end runs: 10 classes, d = 32, MLP h = 64,
// 20 clients at rate 0.4, 5000 public points.
json base_config() {
    return {{"data",
             {{"source", "blobs"},
              {"seed", 7},
              {"num_classes", 10},
              {"dim", 32},
              {"samples_per_class", 500},
              {"spread", 2.0},
              {"public_pool_size", 5000},
              {"public_size", 5000},
              {"validation_size", 2000}}},
            {"partition", {{"num_clients", 20}, {"alpha", 1.0}, {"seed", 11}}},
            {"model", {{"kind", "mlp1"}, {"hidden_dim", 64}, {"init_seed", 3}}},
            {"protocol",
             {{"protocol", "cfd"},
              {"b_up", 1},
              {"b_down", 1},
              {"participation_rate", 0.4},
              {"rounds", 20},
              {"local_epochs", 5},
              {"distill_epochs", 1},
              {"init_mode", "dual_distill"},
              {"learning_rate", 0.001},
              {"batch_size", 32},
              {"sampling_seed", 5},
              {"init_seed", 9},
              {"tie_seed", 13}}},
            {"eval", {{"targets", json::array()}}}};
}

json with_protocol(json c, const std::string& name) {
    c["protocol"]["protocol"] = name;
    if (name != "cfd") {
        c["protocol"].erase("b_up");
        c["protocol"].erase("b_down");
        c["protocol"].erase("init_mode");
    }
    return c;
}

std::size_t cumulative_up(const RunReport& r) { return r.rows.empty() ? 0 : r.rows.back().cumulative_up_bytes; }

// ---------------------------------------------------------------------------

Outcome accounting() {
    // Published FD traffic in MB (up and down rows) for the three models and
    // three heterogeneity levels.
    const std::vector<std::string> published{"89.60", "89.60", "38.40", "38.40", "6.40",  "6.40",
                                             "44.80", "44.80", "48.00", "48.00", "16.00", "16.00",
                                             "32.00", "32.00", "28.80", "28.80", "25.60", "25.60"};
    int divisible = 0;
    for (const auto& s : published) {
        const auto dot = s.find('.');
        const long centi = std::stol(s.substr(0, dot)) * 100 + std::stol(s.substr(dot + 1));
        if (centi % 320 == 0) ++divisible;
    }

    // A real fd round: every participant uploads raw32 labels for 80000 points.
    json c = with_protocol(base_config(), "fd");
    c["data"] = {{"source", "blobs"},      {"seed", 1},
                 {"num_classes", 10},      {"dim", 2},
                 {"samples_per_class", 5}, {"spread", 1.0},
                 {"public_pool_size", 80000}, {"public_size", 80000},
                 {"validation_size", 10}};
    c["partition"] = {{"num_clients", 2}, {"alpha", 1.0}, {"seed", 2}};
    c["model"] = {{"kind", "softmax_regression"}, {"init_seed", 3}};
    c["protocol"]["rounds"] = 1;
    c["protocol"]["participation_rate"] = 1.0;
    c["protocol"]["local_epochs"] = 1;
    const RunReport r = run_experiment(parse_run_config(c));
    const auto& row = r.rows.at(0);
    const double per_participant = static_cast<double>(row.up_bytes) / static_cast<double>(row.participants);
    const bool pass = per_participant == 3200000.0 && divisible == static_cast<int>(published.size());
    return {pass, fmt("upstream %.0f B per participant per round, %d/%zu published entries divisible by 3.2 MB",
                      per_participant, divisible, published.size())};
}

Outcome quantizer_oracle() {
    constexpr int kShift = 30;
    Rng rng(2718);
    std::uniform_int_distribution<std::int64_t> cut(0, std::int64_t{1} << kShift);
    int failures = 0, total = 0;
    for (int classes : {2, 3, 4}) {
        for (int bits : {1, 2, 3}) {
            const int levels = (1 << bits) - 1;
            for (int trial = 0; trial < 1000; ++trial) {
                // p_i = k_i / 2^30 is exact in double, so the L1 objective can
                // be compared in integer arithmetic.
                std::vector<std::int64_t> cuts{0, std::int64_t{1} << kShift};
                for (int i = 0; i + 1 < classes; ++i) cuts.push_back(cut(rng));
                std::sort(cuts.begin(), cuts.end());
                std::vector<std::int64_t> k;
                std::vector<double> p;
                for (std::size_t i = 1; i < cuts.size(); ++i) {
                    k.push_back(cuts[i] - cuts[i - 1]);
                    p.push_back(std::ldexp(static_cast<double>(k.back()), -kShift));
                }
                Rng tie(static_cast<std::uint64_t>(trial));
                const auto g = quantize(p, bits, tie);
                const std::vector<int> grid(g.begin(), g.end());
                ++total;
                if (std::accumulate(grid.begin(), grid.end(), 0) != levels ||
                    oracle::scaled_l1(grid, k, levels, kShift) != oracle::brute_force_min_l1(k, bits, kShift))
                    ++failures;
            }
        }
    }
    return {failures == 0, fmt("%d/%d rows optimal", total - failures, total)};
}

Outcome maximum_vote() {
    Rng rng(31415);
    int failures = 0, rows = 0;
    while (rows < 10000) {
        const auto p = sample_dirichlet(10, 0.5, rng);
        const auto top = std::max_element(p.begin(), p.end());
        if (std::count(p.begin(), p.end(), *top) != 1) continue;
        ++rows;
        const auto g = quantize(p, 1, rng);
        for (std::size_t c = 0; c < p.size(); ++c)
            if (g[c] != (static_cast<std::ptrdiff_t>(c) == top - p.begin() ? 1 : 0)) {
                ++failures;
                break;
            }
    }
    return {failures == 0, fmt("%d failures on %d rows", failures, rows)};
}

std::vector<std::uint32_t> draw(const std::vector<double>& probs, std::size_t n, Rng& rng) {
    std::discrete_distribution<std::uint32_t> d(probs.begin(), probs.end());
    std::vector<std::uint32_t> out(n);
    for (auto& s : out) s = d(rng);
    return out;
}

QuantizedLabels random_labels(std::size_t rows, int classes, Rng& rng) {
    std::uniform_int_distribution<std::uint32_t> cls(1, static_cast<std::uint32_t>(classes));
    std::vector<std::uint32_t> ids(rows);
    for (auto& v : ids) v = cls(rng);
    return QuantizedLabels::from_class_ids(ids, classes);
}

Outcome codec() {
    Rng rng(161803);
    int ok = 0;
    std::uniform_int_distribution<std::uint32_t> alphabet_dist(1, 200);
    std::uniform_int_distribution<std::size_t> len(0, 5000);
    std::uniform_int_distribution<int> classes_dist(2, 12);
    std::bernoulli_distribution change(0.1);
    for (int trial = 0; trial < 100; ++trial) {
        if (trial % 4 == 3) {
            // Delta mode through the wire: a sparse change against a reference.
            const int classes = classes_dist(rng);
            const std::size_t rows = len(rng) + 1;
            const auto prev = random_labels(rows, classes, rng);
            auto ids = prev.class_ids();
            std::uniform_int_distribution<std::uint32_t> cls(1, static_cast<std::uint32_t>(classes));
            for (auto& v : ids)
                if (change(rng)) v = cls(rng);
            const auto curr = QuantizedLabels::from_class_ids(ids, classes);
            const auto msg = EncodedMessage::parse(
                encode_upstream(WireMode::quantized_delta, {nullptr, &curr, &prev, 1}, {2, 0}).serialize());
            const auto back = decode_message(msg, &prev);
            if (back.labels && *back.labels == curr) ++ok;
            continue;
        }
        const std::uint32_t alphabet = alphabet_dist(rng);
        std::vector<double> probs(alphabet);
        std::gamma_distribution<double> g(0.4, 1.0);
        for (auto& p : probs) p = g(rng) + 1e-9;
        const auto symbols = draw(probs, len(rng), rng);
        if (entropy_decode(entropy_code(symbols, alphabet), alphabet, symbols.size()) == symbols) ++ok;
    }

    const std::size_t n = 10000;
    std::string sizes;
    bool bounded = true;
    for (const auto& probs : {std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5},
                              std::vector<double>(10, 0.1)}) {
        const auto symbols = draw(probs, n, rng);
        const double h = empirical_entropy(symbols);
        const double bits = static_cast<double>(entropy_code(symbols, static_cast<std::uint32_t>(probs.size())).size() * 8);
        const double bound = static_cast<double>(n) * (h + 0.1) + 64.0;
        bounded = bounded && bits <= bound;
        sizes += fmt(" H=%.3f:%.0f/%.0f bits", h, bits, bound);
    }
    return {ok == 100 && bounded, fmt("%d/100 round trips;", ok) + sizes};
}

Outcome delta_trend() {
    json c = base_config();
    c["protocol"]["delta_coding"] = true;
    const RunReport delta = run_experiment(parse_run_config(c));
    c["protocol"]["delta_coding"] = false;
    const RunReport plain = run_experiment(parse_run_config(c));
    const double h2 = delta.rows.at(1).up_entropy_bits;
    const double ht = delta.rows.back().up_entropy_bits;
    const bool pass = ht < h2 && cumulative_up(delta) < cumulative_up(plain);
    return {pass, fmt("H(round 2)=%.3f H(round %u)=%.3f bits; upstream delta %zu B vs plain %zu B", h2,
                      delta.rows.back().round, ht, cumulative_up(delta), cumulative_up(plain))};
}

Outcome heterogeneity_trend() {
    double entropy[2] = {0, 0};
    double bytes[2] = {0, 0};
    const double alphas[2] = {0.01, 100.0};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (int a = 0; a < 2; ++a) {
            json c = base_config();
            c["partition"]["alpha"] = alphas[a];
            c["protocol"]["delta_coding"] = true;
            RunConfig cfg = parse_run_config(c);
            apply_seed_override(cfg, seed);
            const RunReport r = run_experiment(cfg);
            double h = 0.0;
            for (const auto& row : r.rows) h += row.up_label_entropy_bits;
            entropy[a] += h / static_cast<double>(r.rows.size()) / 5.0;
            bytes[a] += static_cast<double>(cumulative_up(r)) / 5.0;
        }
    }
    const bool pass = entropy[0] < entropy[1] && bytes[0] < bytes[1];
    return {pass, fmt("mean upload label entropy %.3f vs %.3f bits; mean delta upstream %.0f vs %.0f B (alpha 0.01 vs 100)",
                      entropy[0], entropy[1], bytes[0], bytes[1])};
}

Outcome end_to_end() {
    const RunReport fa = run_experiment(parse_run_config(with_protocol(base_config(), "fa")));
    const RunReport fd = run_experiment(parse_run_config(with_protocol(base_config(), "fd")));
    const RunReport cfd = run_experiment(parse_run_config(base_config()));
    auto best = [](const RunReport& r) {
        double b = 0.0;
        for (const auto& row : r.rows) b = std::max(b, row.accuracy);
        return b;
    };
    const double target = std::min({best(fa), best(fd), best(cfd)});
    auto up_total = [&](const RunReport& r) { return bits_to_target(r, target).value().up_total_mb; };
    const double a = up_total(fa), d = up_total(fd), q = up_total(cfd);
    const double acc_fd = fd.rows.back().accuracy, acc_cfd = cfd.rows.back().accuracy;
    const bool c1 = q <= d / 20.0, c2 = d <= a / 2.0, c3 = acc_cfd >= acc_fd - 0.03;
    return {c1 && c2 && c3,
            fmt("target %.4f; upstream MB to target FA %.4f FD %.4f CFD-1-1 %.4f; CFD<=FD/20 %s, FD<=FA/2 %s; "
                "final accuracy FD %.4f CFD-1-1 %.4f (%s)",
                target, a, d, q, c1 ? "yes" : "no", c2 ? "yes" : "no", acc_fd, acc_cfd, c3 ? "ok" : "too low")};
}

Outcome gradient_check() {
    Rng rng(577);
    std::uniform_int_distribution<int> dim(1, 6), cls(2, 5), batch(1, 8), kind(0, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const bool mlp = kind(rng) == 1;
        const ModelSpec spec{mlp ? ModelKind::mlp1 : ModelKind::softmax_regression, dim(rng), mlp ? dim(rng) : 0,
                             cls(rng), static_cast<std::uint64_t>(1000 + trial)};
        const ModelParams p = init_model(spec);
        const Eigen::Index n = batch(rng);
        Matrix x(n, spec.input_dim);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
        Matrix t(n, spec.num_classes);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto row = sample_dirichlet(static_cast<std::size_t>(spec.num_classes), 1.0, rng);
            for (int k = 0; k < spec.num_classes; ++k) t(r, k) = row[static_cast<std::size_t>(k)];
        }
        const auto analytic = loss_and_grad(p, spec, x, t).grad;
        const auto numeric = oracle::numeric_gradient(p, spec, x, t);
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            const double g = analytic.values()[i];
            const double scale = std::max({1.0, std::abs(g), std::abs(numeric[i])});
            worst = std::max(worst, std::abs(g - numeric[i]) / scale);
        }
    }
    return {worst < 1e-4, fmt("worst relative error %.3g over 20 instances", worst)};
}

Outcome reduction() {
    json c = base_config();
    c["protocol"]["b_up"] = 32;
    c["protocol"]["b_down"] = 32;
    c["protocol"]["init_mode"] = "previous";
    const RunReport cfd = run_experiment(parse_run_config(c));
    const RunReport fd = run_experiment(parse_run_config(with_protocol(base_config(), "fd")));
    std::ostringstream a, b;
    write_csv(a, cfd);
    write_csv(b, fd);
    const bool pass = cfd.rows == fd.rows && a.str() == b.str();
    return {pass, fmt("%zu rounds, ledgers %s", fd.rows.size(), pass ? "identical" : "differ")};
}

double max_share(const Dataset& data, const IndexSet& idx) {
    const auto s = class_shares(data, idx);
    return *std::max_element(s.begin(), s.end());
}

Outcome partition_stats() {
    const Dataset data = make_blobs(10, 2, 1000, 1.0, 1);
    int iid_fail = 0, dominant = 0, clients = 0, size_fail = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (const auto& p : dirichlet_partition(data, {10, 100.0, seed, true}))
            if (max_share(data, p) >= 0.25) ++iid_fail;
        for (double alpha : {0.01, 100.0}) {
            for (const auto& p : dirichlet_partition(data, {10, alpha, seed, true}))
                if (p.size() != data.size() / 10) ++size_fail;
        }
        for (const auto& p : dirichlet_partition(data, {10, 0.01, seed, true})) {
            ++clients;
            if (max_share(data, p) > 0.9) ++dominant;
        }
    }
    const bool pass = iid_fail == 0 && size_fail == 0 && dominant * 5 >= clients * 4;
    return {pass, fmt("alpha 100: %d clients with max share >= 0.25; alpha 0.01: %d/%d clients dominant; %d size errors",
                      iid_fail, dominant, clients, size_fail)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "raw32 accounting", 1.0, accounting},
        {2, "quantizer matches brute force", 30.0, quantizer_oracle},
        {3, "one-bit quantization is the argmax", 5.0, maximum_vote},
        {4, "codec lossless and near entropy", 10.0, codec},
        {5, "delta entropy falls during training", 300.0, delta_trend},
        {6, "heterogeneity lowers upload entropy", 600.0, heterogeneity_trend},
        {7, "end-to-end compression", 900.0, end_to_end},
        {8, "gradient check", 5.0, gradient_check},
        {9, "32-bit cfd reproduces fd", 120.0, reduction},
        {10, "dirichlet partition statistics", 10.0, partition_stats},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("[%s] criterion %d %s: %s (%.2f s of %.0f s budget)\n", pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), o.detail.c_str(), secs, c.budget_s);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
