#include "cfd/harness.hpp"

#include "cfd/error.hpp"
#include "cfd/random.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cfd {

using nlohmann::json;

namespace {

// Reads one config section, recording every problem instead of stopping at
// the first.
class Section {
public:
    Section(const json& doc, std::string name, std::vector<std::string>& problems)
        : name_(std::move(name)), problems_(problems) {
        if (!doc.contains(name_)) {
            problems_.push_back("missing section '" + name_ + "'");
            return;
        }
        if (!doc[name_].is_object()) {
            problems_.push_back("section '" + name_ + "' must be an object");
            return;
        }
        node_ = &doc[name_];
    }

    template <class T>
    void read(const std::string& key, T& out, bool required = false) {
        known_.insert(key);
        if (node_ == nullptr) return;
        if (!node_->contains(key)) {
            if (required) problems_.push_back(path(key) + " is required");
            return;
        }
        const json& v = (*node_)[key];
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::invalid_argument("expected true or false");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
                if constexpr (std::is_unsigned_v<T>) {
                    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                        throw std::invalid_argument("expected a nonnegative integer");
                    }
                }
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw std::invalid_argument("expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::invalid_argument("expected a string");
            }
            out = v.get<T>();
        } catch (const std::exception& e) {
            problems_.push_back(path(key) + ": " + e.what());
        }
    }

    template <class E>
    void choice(const std::string& key, E& out, const std::map<std::string, E>& options) {
        std::string text;
        bool present = node_ != nullptr && node_->contains(key);
        read(key, text);
        if (!present || text.empty()) return;
        const auto it = options.find(text);
        if (it == options.end()) {
            std::string allowed;
            for (const auto& [k, _] : options) allowed += (allowed.empty() ? "" : ", ") + k;
            problems_.push_back(path(key) + ": unknown value '" + text + "' (expected one of " + allowed + ")");
            return;
        }
        out = it->second;
    }

    bool has(const std::string& key) const { return node_ != nullptr && node_->contains(key); }

    void reject_unknown() {
        if (node_ == nullptr) return;
        for (const auto& [key, _] : node_->items()) {
            if (!known_.count(key)) problems_.push_back("unknown key " + path(key));
        }
    }

private:
    std::string path(const std::string& key) const { return name_ + "." + key; }

    std::string name_;
    std::vector<std::string>& problems_;
    const json* node_ = nullptr;
    std::set<std::string> known_;
};

const std::map<std::string, DataSource> kSources{
    {"blobs", DataSource::blobs}, {"idx", DataSource::idx}, {"csv", DataSource::csv}};
const std::map<std::string, SelectionStrategy> kStrategies{{"random", SelectionStrategy::random},
                                                           {"entropy", SelectionStrategy::entropy},
                                                           {"certainty", SelectionStrategy::certainty},
                                                           {"margin", SelectionStrategy::margin}};
const std::map<std::string, ModelKind> kKinds{{"softmax_regression", ModelKind::softmax_regression},
                                              {"mlp1", ModelKind::mlp1}};
const std::map<std::string, Protocol> kProtocols{{"fa", Protocol::fa}, {"fd", Protocol::fd}, {"cfd", Protocol::cfd}};
const std::map<std::string, InitMode> kInitModes{
    {"random", InitMode::random}, {"previous", InitMode::previous}, {"dual_distill", InitMode::dual_distill}};
const std::map<std::string, OptimizerKind> kOptimizers{{"adam", OptimizerKind::adam}, {"sgd", OptimizerKind::sgd}};

template <class E>
std::string name_of(const std::map<std::string, E>& options, E value) {
    for (const auto& [k, v] : options)
        if (v == value) return k;
    return "?";
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
    std::vector<std::string> problems;
    RunConfig cfg;
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : doc.items()) {
        if (key != "data" && key != "partition" && key != "model" && key != "protocol" && key != "eval") {
            problems.push_back("unknown section '" + key + "'");
        }
    }

    DataConfig& d = cfg.data;
    Section data(doc, "data", problems);
    data.choice("source", d.source, kSources);
    data.read("seed", d.seed, true);
    bool has_classes = data.has("num_classes");
    data.read("num_classes", d.num_classes);
    data.read("dim", d.dim);
    data.read("samples_per_class", d.samples_per_class);
    data.read("spread", d.spread);
    d.public_spread = d.spread;
    data.read("public_spread", d.public_spread);
    std::string images, labels, csv;
    data.read("images", images);
    data.read("labels", labels);
    data.read("csv", csv);
    d.images = images;
    d.labels = labels;
    d.csv = csv;
    data.read("public_pool_size", d.public_pool_size);
    d.public_size = d.public_pool_size;
    data.read("public_size", d.public_size);
    data.read("validation_size", d.validation_size);
    data.choice("selection", d.selection, kStrategies);
    data.read("reselect", d.reselect);
    data.reject_unknown();

    Section part(doc, "partition", problems);
    part.read("num_clients", cfg.partition.num_clients, true);
    part.read("alpha", cfg.partition.alpha, true);
    part.read("seed", cfg.partition.seed, true);
    part.read("equal_sizes", cfg.partition.equal_sizes);
    part.reject_unknown();

    Section model(doc, "model", problems);
    model.choice("kind", cfg.model.kind, kKinds);
    model.read("hidden_dim", cfg.model.hidden_dim);
    model.read("init_seed", cfg.model.init_seed, true);
    model.reject_unknown();

    ProtocolConfig& p = cfg.protocol;
    Section proto(doc, "protocol", problems);
    proto.choice("protocol", p.protocol, kProtocols);
    if (p.protocol != Protocol::cfd) {
        p.b_up = kRawBits;
        p.b_down = kRawBits;
        p.init_mode = InitMode::previous;
    }
    proto.read("b_up", p.b_up);
    proto.read("b_down", p.b_down);
    proto.read("delta_coding", p.delta_coding);
    proto.read("participation_rate", p.participation_rate);
    proto.read("rounds", p.rounds, true);
    proto.read("local_epochs", p.local_epochs);
    proto.read("distill_epochs", p.distill_epochs);
    proto.choice("init_mode", p.init_mode, kInitModes);
    proto.choice("optimizer", p.optimizer, kOptimizers);
    proto.read("learning_rate", p.learning_rate);
    proto.read("momentum", p.momentum);
    proto.read("batch_size", p.batch_size);
    proto.read("sampling_seed", p.sampling_seed, true);
    proto.read("init_seed", p.init_seed, true);
    proto.read("tie_seed", p.tie_seed, true);
    proto.read("workers", p.workers);
    proto.reject_unknown();

    Section eval(doc, "eval", problems);
    eval.read("targets", cfg.eval.targets);
    eval.reject_unknown();

    // Cross-field checks
    for (const auto& s : p.problems()) problems.push_back("protocol: " + s);
    if (p.protocol == Protocol::fd && p.init_mode != InitMode::previous) {
        problems.push_back("protocol: fd clients start from the previous distilled model (init_mode = previous)");
    }
    if (cfg.partition.num_clients < 1) problems.push_back("partition.num_clients must be >= 1");
    if (!(cfg.partition.alpha > 0.0)) problems.push_back("partition.alpha must be > 0");
    if (cfg.model.kind == ModelKind::mlp1 && cfg.model.hidden_dim < 1) {
        problems.push_back("model.hidden_dim must be >= 1 for mlp1");
    }
    if (d.source == DataSource::blobs) {
        if (d.num_classes < 2) problems.push_back("data.num_classes must be >= 2");
        if (d.dim < 1) problems.push_back("data.dim must be >= 1");
        if (d.samples_per_class < 1) problems.push_back("data.samples_per_class must be >= 1");
        if (!(d.spread > 0.0)) problems.push_back("data.spread must be > 0");
        if (!(d.public_spread > 0.0)) problems.push_back("data.public_spread must be > 0");
        cfg.model.input_dim = d.dim;
        cfg.model.num_classes = d.num_classes;
    } else {
        if (d.source == DataSource::idx && (d.images.empty() || d.labels.empty())) {
            problems.push_back("data.images and data.labels are required for source idx");
        }
        if (d.source == DataSource::csv && d.csv.empty()) problems.push_back("data.csv is required for source csv");
        if (!has_classes) d.num_classes = 0;
    }
    if (d.public_pool_size < 1) problems.push_back("data.public_pool_size must be >= 1");
    if (d.public_size < 1 || d.public_size > d.public_pool_size) {
        problems.push_back("data.public_size must be in [1, public_pool_size]");
    }
    if (d.validation_size < 1) problems.push_back("data.validation_size must be >= 1");
    if (d.reselect && d.selection == SelectionStrategy::random) {
        problems.push_back("data.reselect needs an active selection strategy");
    }
    if (d.reselect && (p.protocol != Protocol::cfd || p.init_mode != InitMode::dual_distill)) {
        problems.push_back("data.reselect needs protocol cfd with init_mode dual_distill");
    }
    if (d.reselect && p.delta_coding) {
        problems.push_back("data.reselect changes the public set, which invalidates delta references");
    }
    for (double t : cfg.eval.targets) {
        if (!(t >= 0.0 && t <= 1.0)) problems.push_back("eval.targets entries must be in [0, 1]");
    }

    if (!problems.empty()) {
        std::ostringstream msg;
        msg << problems.size() << " config problem" << (problems.size() == 1 ? "" : "s") << ":";
        for (const auto& s : problems) msg << "\n  - " << s;
        throw ConfigError(msg.str());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(doc);
}

json to_json(const RunConfig& cfg) {
    const DataConfig& d = cfg.data;
    json data{{"source", name_of(kSources, d.source)},
              {"seed", d.seed},
              {"public_pool_size", d.public_pool_size},
              {"public_size", d.public_size},
              {"validation_size", d.validation_size},
              {"selection", name_of(kStrategies, d.selection)},
              {"reselect", d.reselect}};
    if (d.source == DataSource::blobs) {
        data["num_classes"] = d.num_classes;
        data["dim"] = d.dim;
        data["samples_per_class"] = d.samples_per_class;
        data["spread"] = d.spread;
        data["public_spread"] = d.public_spread;
    } else {
        if (d.num_classes > 0) data["num_classes"] = d.num_classes;
        if (d.source == DataSource::idx) {
            data["images"] = d.images.string();
            data["labels"] = d.labels.string();
        } else {
            data["csv"] = d.csv.string();
        }
    }
    const ProtocolConfig& p = cfg.protocol;
    json model{{"kind", name_of(kKinds, cfg.model.kind)}, {"init_seed", cfg.model.init_seed}};
    if (cfg.model.kind == ModelKind::mlp1) model["hidden_dim"] = cfg.model.hidden_dim;
    return json{
        {"data", data},
        {"partition",
         {{"num_clients", cfg.partition.num_clients},
          {"alpha", cfg.partition.alpha},
          {"seed", cfg.partition.seed},
          {"equal_sizes", cfg.partition.equal_sizes}}},
        {"model", model},
        {"protocol",
         {{"protocol", name_of(kProtocols, p.protocol)},
          {"b_up", p.b_up},
          {"b_down", p.b_down},
          {"delta_coding", p.delta_coding},
          {"participation_rate", p.participation_rate},
          {"rounds", p.rounds},
          {"local_epochs", p.local_epochs},
          {"distill_epochs", p.distill_epochs},
          {"init_mode", name_of(kInitModes, p.init_mode)},
          {"optimizer", name_of(kOptimizers, p.optimizer)},
          {"learning_rate", p.learning_rate},
          {"momentum", p.momentum},
          {"batch_size", p.batch_size},
          {"sampling_seed", p.sampling_seed},
          {"init_seed", p.init_seed},
          {"tie_seed", p.tie_seed},
          {"workers", p.workers}}},
        {"eval", {{"targets", cfg.eval.targets}}}};
}

void apply_seed_override(RunConfig& cfg, std::uint64_t seed) {
    cfg.data.seed = derive_seed(seed, {1});
    cfg.partition.seed = derive_seed(seed, {2});
    cfg.model.init_seed = derive_seed(seed, {3});
    cfg.protocol.sampling_seed = derive_seed(seed, {4});
    cfg.protocol.init_seed = derive_seed(seed, {5});
    cfg.protocol.tie_seed = derive_seed(seed, {6});
}

}  // namespace cfd
