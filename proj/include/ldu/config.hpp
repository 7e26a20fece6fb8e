#pragma once
// Experiment configuration: a flat, strictly parsed "key = value" format.
// '#' starts a comment, every key has a documented default, unknown or
// duplicate keys are errors naming the key and line. serialize_config()
// writes every key back out, so configs round-trip losslessly.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/format.hpp"
#include "ldu/model.hpp"
#include "ldu/train.hpp"

namespace ldu {

enum class DatasetKind { kTwoMoons, kGaussianBlobs, kSinusoid, kCsv };
enum class OodKind { kNone, kRing, kShiftedBlobs };

struct ExperimentSpec {
    std::string name{"experiment"};

    // model
    Task task{Task::kClassification};
    ModelKind model{ModelKind::kLdu};
    DmVariant dm_variant{DmVariant::kCosine};
    std::vector<std::size_t> widths{2, 17, 17};
    std::size_t prototypes{16};
    std::size_t outputs{2};
    bool unit_norm{true};

    // data
    DatasetKind dataset{DatasetKind::kTwoMoons};
    std::size_t n_train{1000};
    std::size_t n_test{500};
    double noise{0.1};
    std::size_t blob_classes{4};
    std::size_t blob_dim{8};
    double blob_spread{1.0};
    double x_lo{-3.0};
    double x_hi{3.0};
    NoiseMode noise_mode{NoiseMode::kHeteroscedastic};
    double noise_scale{1.0};
    std::string train_csv;
    std::string test_csv;

    // OOD evaluation set
    OodKind ood{OodKind::kNone};
    std::size_t ood_n{500};
    double ring_cx{0.5};
    double ring_cy{0.25};
    double ring_inner{2.2};
    double ring_outer{3.0};
    double blob_shift{10.0};

    // training
    double lambda{0.1};
    bool loss_dis_on{true};
    bool loss_entrop_on{true};
    bool loss_unc_on{true};
    OptimizerKind optimizer{OptimizerKind::kAdam};
    double learning_rate{1e-3};
    double momentum{0.9};
    double weight_decay{0.0};
    double grad_clip{0.0};
    std::size_t epochs{200};
    std::size_t batch_size{64};

    // optional stage-2 outlier training
    bool stage2{false};
    double stage2_noise_scale{2.0};
    std::size_t stage2_steps{5000};
    double stage2_outlier_target{1.0};
    bool stage2_mix_inliers{true};
    double stage2_learning_rate{0.1};
    std::size_t stage2_batch_size{512};

    // evaluation / run control
    std::uint64_t seed{1};
    std::size_t seeds{3};
    EpistemicMode epistemic_mode{EpistemicMode::kUncHead};
    std::size_t ece_bins{15};
    std::size_t ause_steps{100};
    std::string out_dir;
    bool plots{true};
    std::size_t grid_resolution{60};

    // sweep axes
    std::vector<double> lambda_values{0.01, 0.1, 0.5, 1.0, 2.0};
    std::vector<std::size_t> prototype_values{16, 32, 64, 128};

    ModelSpec model_spec(std::uint64_t model_seed) const {
        ModelSpec ms;
        ms.widths = widths;
        ms.prototypes = prototypes;
        ms.outputs = outputs;
        ms.task = task;
        ms.kind = model;
        ms.dm_variant = dm_variant;
        ms.unit_norm = unit_norm;
        ms.seed = model_seed;
        return ms;
    }

    TrainConfig train_config(std::uint64_t train_seed) const {
        TrainConfig tc;
        tc.lambda = lambda;
        tc.epochs = epochs;
        tc.batch_size = batch_size;
        tc.optimizer.kind = optimizer;
        tc.optimizer.learning_rate = learning_rate;
        tc.optimizer.momentum = momentum;
        tc.optimizer.weight_decay = weight_decay;
        tc.optimizer.grad_clip = grad_clip;
        tc.seed = train_seed;
        tc.toggles = {loss_dis_on, loss_entrop_on, loss_unc_on};
        if (stage2)
            tc.stage2 = Stage2Config{stage2_noise_scale, stage2_steps, stage2_outlier_target,
                                     stage2_mix_inliers, stage2_learning_rate,
                                     stage2_batch_size};
        return tc;
    }
};

namespace config_detail {

struct RawEntry {
    std::string value;
    std::size_t line{0};
};

class Reader {
  public:
    Reader(const std::string& path, std::map<std::string, RawEntry> entries)
        : path_(path), entries_(std::move(entries)) {}

    bool has(const std::string& key) { return entries_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const std::string v = it->second.value;
        entries_.erase(it);
        return v;
    }

    double get_double(const std::string& key, double fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const double v = parse_double(it->second.value, context(key, it->second.line));
        entries_.erase(it);
        return v;
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const std::size_t v = parse_size(it->second.value, context(key, it->second.line));
        entries_.erase(it);
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const std::string ctx = context(key, it->second.line);
        const std::string& token = it->second.value;
        if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos)
            throw std::runtime_error(ctx + ": cannot parse '" + token +
                                     "' as an unsigned integer");
        std::uint64_t v = 0;
        try {
            v = std::stoull(token);
        } catch (const std::exception&) {
            throw std::runtime_error(ctx + ": '" + token + "' is out of range");
        }
        entries_.erase(it);
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const std::string& v = it->second.value;
        bool out = false;
        if (v == "true")
            out = true;
        else if (v == "false")
            out = false;
        else
            throw std::runtime_error(context(key, it->second.line) +
                                     ": expected 'true' or 'false', got '" + v + "'");
        entries_.erase(it);
        return out;
    }

    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const std::string ctx = context(key, it->second.line);
        std::vector<double> out;
        for (const auto& tok : split(it->second.value, ','))
            out.push_back(parse_double(trim(tok), ctx));
        if (out.empty()) throw std::runtime_error(ctx + ": empty list");
        entries_.erase(it);
        return out;
    }

    std::vector<std::size_t> get_size_list(const std::string& key,
                                           std::vector<std::size_t> fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const std::string ctx = context(key, it->second.line);
        std::vector<std::size_t> out;
        for (const auto& tok : split(it->second.value, ','))
            out.push_back(parse_size(trim(tok), ctx));
        if (out.empty()) throw std::runtime_error(ctx + ": empty list");
        entries_.erase(it);
        return out;
    }

    template <typename Enum>
    Enum get_enum(const std::string& key, Enum fallback,
                  const std::vector<std::pair<std::string, Enum>>& table) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        for (const auto& [text, value] : table)
            if (it->second.value == text) {
                entries_.erase(it);
                return value;
            }
        std::string allowed;
        for (const auto& [text, value] : table) allowed += (allowed.empty() ? "" : ", ") + text;
        throw std::runtime_error(context(key, it->second.line) + ": got '" + it->second.value +
                                 "', expected one of: " + allowed);
    }

    // every key must have been consumed
    void finish() const {
        if (entries_.empty()) return;
        const auto& [key, entry] = *entries_.begin();
        throw std::runtime_error(path_ + ":" + std::to_string(entry.line) + ": unknown key '" +
                                 key + "'");
    }

  private:
    std::string context(const std::string& key, std::size_t line) const {
        return path_ + ":" + std::to_string(line) + ": key '" + key + "'";
    }

    static std::size_t parse_size(const std::string& token, const std::string& ctx) {
        for (char c : token)
            if (c < '0' || c > '9')
                throw std::runtime_error(ctx + ": cannot parse '" + token +
                                         "' as a nonnegative integer");
        if (token.empty()) throw std::runtime_error(ctx + ": empty integer");
        return static_cast<std::size_t>(std::stoull(token));
    }

    std::string path_;
    std::map<std::string, RawEntry> entries_;
};

inline std::map<std::string, RawEntry> read_entries(std::istream& in, const std::string& path) {
    std::map<std::string, RawEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty key");
        if (!entries.emplace(key, RawEntry{value, line_no}).second)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate key '" +
                                     key + "'");
    }
    return entries;
}

inline const std::vector<std::pair<std::string, Task>>& task_table() {
    static const std::vector<std::pair<std::string, Task>> t{
        {"classification", Task::kClassification}, {"regression", Task::kRegression}};
    return t;
}
inline const std::vector<std::pair<std::string, ModelKind>>& model_table() {
    static const std::vector<std::pair<std::string, ModelKind>> t{{"ldu", ModelKind::kLdu},
                                                                  {"plain", ModelKind::kPlain}};
    return t;
}
inline const std::vector<std::pair<std::string, DmVariant>>& dm_table() {
    static const std::vector<std::pair<std::string, DmVariant>> t{
        {"cosine", DmVariant::kCosine}, {"l2", DmVariant::kL2}};
    return t;
}
inline const std::vector<std::pair<std::string, DatasetKind>>& dataset_table() {
    static const std::vector<std::pair<std::string, DatasetKind>> t{
        {"two_moons", DatasetKind::kTwoMoons},
        {"gaussian_blobs", DatasetKind::kGaussianBlobs},
        {"sinusoid", DatasetKind::kSinusoid},
        {"csv", DatasetKind::kCsv}};
    return t;
}
inline const std::vector<std::pair<std::string, OodKind>>& ood_table() {
    static const std::vector<std::pair<std::string, OodKind>> t{
        {"none", OodKind::kNone},
        {"ring", OodKind::kRing},
        {"shifted_blobs", OodKind::kShiftedBlobs}};
    return t;
}
inline const std::vector<std::pair<std::string, NoiseMode>>& noise_table() {
    static const std::vector<std::pair<std::string, NoiseMode>> t{
        {"constant", NoiseMode::kConstant}, {"heteroscedastic", NoiseMode::kHeteroscedastic}};
    return t;
}
inline const std::vector<std::pair<std::string, OptimizerKind>>& optimizer_table() {
    static const std::vector<std::pair<std::string, OptimizerKind>> t{
        {"adam", OptimizerKind::kAdam}, {"sgd_momentum", OptimizerKind::kSgdMomentum}};
    return t;
}
inline const std::vector<std::pair<std::string, EpistemicMode>>& epistemic_table() {
    static const std::vector<std::pair<std::string, EpistemicMode>> t{
        {"unc_head", EpistemicMode::kUncHead}, {"max_embed", EpistemicMode::kMaxEmbed}};
    return t;
}

template <typename Enum>
std::string enum_name(Enum value, const std::vector<std::pair<std::string, Enum>>& table) {
    for (const auto& [text, v] : table)
        if (v == value) return text;
    throw std::runtime_error("enum_name: unmapped value");
}

}  // namespace config_detail

inline ExperimentSpec parse_config_stream(std::istream& in, const std::string& path) {
    namespace cd = config_detail;
    cd::Reader reader(path, cd::read_entries(in, path));
    ExperimentSpec s;

    s.name = reader.get_string("name", s.name);
    s.task = reader.get_enum("task", s.task, cd::task_table());
    s.model = reader.get_enum("model", s.model, cd::model_table());
    s.dm_variant = reader.get_enum("dm_variant", s.dm_variant, cd::dm_table());
    s.widths = reader.get_size_list("widths", s.widths);
    s.prototypes = reader.get_size("prototypes", s.prototypes);
    s.outputs = reader.get_size("outputs", s.outputs);
    s.unit_norm = reader.get_bool("unit_norm", s.unit_norm);

    s.dataset = reader.get_enum("dataset", s.dataset, cd::dataset_table());
    s.n_train = reader.get_size("n_train", s.n_train);
    s.n_test = reader.get_size("n_test", s.n_test);
    s.noise = reader.get_double("noise", s.noise);
    s.blob_classes = reader.get_size("blob_classes", s.blob_classes);
    s.blob_dim = reader.get_size("blob_dim", s.blob_dim);
    s.blob_spread = reader.get_double("blob_spread", s.blob_spread);
    s.x_lo = reader.get_double("x_lo", s.x_lo);
    s.x_hi = reader.get_double("x_hi", s.x_hi);
    s.noise_mode = reader.get_enum("noise_mode", s.noise_mode, cd::noise_table());
    s.noise_scale = reader.get_double("noise_scale", s.noise_scale);
    s.train_csv = reader.get_string("train_csv", s.train_csv);
    s.test_csv = reader.get_string("test_csv", s.test_csv);

    s.ood = reader.get_enum("ood", s.ood, cd::ood_table());
    s.ood_n = reader.get_size("ood_n", s.ood_n);
    s.ring_cx = reader.get_double("ring_cx", s.ring_cx);
    s.ring_cy = reader.get_double("ring_cy", s.ring_cy);
    s.ring_inner = reader.get_double("ring_inner", s.ring_inner);
    s.ring_outer = reader.get_double("ring_outer", s.ring_outer);
    s.blob_shift = reader.get_double("blob_shift", s.blob_shift);

    s.lambda = reader.get_double("lambda", s.lambda);
    s.loss_dis_on = reader.get_bool("loss_dis", s.loss_dis_on);
    s.loss_entrop_on = reader.get_bool("loss_entrop", s.loss_entrop_on);
    s.loss_unc_on = reader.get_bool("loss_unc", s.loss_unc_on);
    s.optimizer = reader.get_enum("optimizer", s.optimizer, cd::optimizer_table());
    s.learning_rate = reader.get_double("learning_rate", s.learning_rate);
    s.momentum = reader.get_double("momentum", s.momentum);
    s.weight_decay = reader.get_double("weight_decay", s.weight_decay);
    s.grad_clip = reader.get_double("grad_clip", s.grad_clip);
    s.epochs = reader.get_size("epochs", s.epochs);
    s.batch_size = reader.get_size("batch_size", s.batch_size);

    s.stage2 = reader.get_bool("stage2", s.stage2);
    s.stage2_noise_scale = reader.get_double("stage2_noise_scale", s.stage2_noise_scale);
    s.stage2_steps = reader.get_size("stage2_steps", s.stage2_steps);
    s.stage2_outlier_target = reader.get_double("stage2_outlier_target", s.stage2_outlier_target);
    s.stage2_mix_inliers = reader.get_bool("stage2_mix_inliers", s.stage2_mix_inliers);
    s.stage2_learning_rate = reader.get_double("stage2_learning_rate", s.stage2_learning_rate);
    s.stage2_batch_size = reader.get_size("stage2_batch_size", s.stage2_batch_size);

    s.seed = reader.get_u64("seed", s.seed);
    s.seeds = reader.get_size("seeds", s.seeds);
    s.epistemic_mode = reader.get_enum("epistemic_mode", s.epistemic_mode, cd::epistemic_table());
    s.ece_bins = reader.get_size("ece_bins", s.ece_bins);
    s.ause_steps = reader.get_size("ause_steps", s.ause_steps);
    s.out_dir = reader.get_string("out_dir", s.out_dir);
    s.plots = reader.get_bool("plots", s.plots);
    s.grid_resolution = reader.get_size("grid_resolution", s.grid_resolution);

    s.lambda_values = reader.get_double_list("lambda_values", s.lambda_values);
    s.prototype_values = reader.get_size_list("prototype_values", s.prototype_values);

    reader.finish();

    // cross-field validation
    if (s.lambda < 0.0) throw std::runtime_error(path + ": lambda must be nonnegative");
    if (s.learning_rate <= 0.0) throw std::runtime_error(path + ": learning_rate must be positive");
    if (s.batch_size < 1) throw std::runtime_error(path + ": batch_size must be >= 1");
    if (s.seeds < 1) throw std::runtime_error(path + ": seeds must be >= 1");
    if (s.widths.size() < 2) throw std::runtime_error(path + ": widths needs input + one layer");
    if (s.dataset == DatasetKind::kCsv && (s.train_csv.empty() || s.test_csv.empty()))
        throw std::runtime_error(path + ": dataset csv requires train_csv and test_csv");
    if (s.dataset == DatasetKind::kSinusoid && s.task != Task::kRegression)
        throw std::runtime_error(path + ": sinusoid dataset requires task = regression");
    if (s.task == Task::kRegression && s.outputs != 1)
        throw std::runtime_error(path + ": regression requires outputs = 1");
    if (s.stage2 && s.model != ModelKind::kLdu)
        throw std::runtime_error(path + ": stage2 requires model = ldu");
    return s;
}

inline ExperimentSpec parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_config: cannot open " + path);
    return parse_config_stream(in, path);
}

// Writes every key in a fixed order; parse(serialize(s)) == s.
inline std::string serialize_config(const ExperimentSpec& s) {
    namespace cd = config_detail;
    std::ostringstream out;
    auto list_size = [](const std::vector<std::size_t>& v) {
        std::string text;
        for (std::size_t i = 0; i < v.size(); ++i)
            text += (i ? "," : "") + std::to_string(v[i]);
        return text;
    };
    auto list_double = [](const std::vector<double>& v) {
        std::string text;
        for (std::size_t i = 0; i < v.size(); ++i) text += (i ? "," : "") + fmt17(v[i]);
        return text;
    };
    out << "name = " << s.name << '\n';
    out << "task = " << cd::enum_name(s.task, cd::task_table()) << '\n';
    out << "model = " << cd::enum_name(s.model, cd::model_table()) << '\n';
    out << "dm_variant = " << cd::enum_name(s.dm_variant, cd::dm_table()) << '\n';
    out << "widths = " << list_size(s.widths) << '\n';
    out << "prototypes = " << s.prototypes << '\n';
    out << "outputs = " << s.outputs << '\n';
    out << "unit_norm = " << (s.unit_norm ? "true" : "false") << '\n';
    out << "dataset = " << cd::enum_name(s.dataset, cd::dataset_table()) << '\n';
    out << "n_train = " << s.n_train << '\n';
    out << "n_test = " << s.n_test << '\n';
    out << "noise = " << fmt17(s.noise) << '\n';
    out << "blob_classes = " << s.blob_classes << '\n';
    out << "blob_dim = " << s.blob_dim << '\n';
    out << "blob_spread = " << fmt17(s.blob_spread) << '\n';
    out << "x_lo = " << fmt17(s.x_lo) << '\n';
    out << "x_hi = " << fmt17(s.x_hi) << '\n';
    out << "noise_mode = " << cd::enum_name(s.noise_mode, cd::noise_table()) << '\n';
    out << "noise_scale = " << fmt17(s.noise_scale) << '\n';
    if (!s.train_csv.empty()) out << "train_csv = " << s.train_csv << '\n';
    if (!s.test_csv.empty()) out << "test_csv = " << s.test_csv << '\n';
    out << "ood = " << cd::enum_name(s.ood, cd::ood_table()) << '\n';
    out << "ood_n = " << s.ood_n << '\n';
    out << "ring_cx = " << fmt17(s.ring_cx) << '\n';
    out << "ring_cy = " << fmt17(s.ring_cy) << '\n';
    out << "ring_inner = " << fmt17(s.ring_inner) << '\n';
    out << "ring_outer = " << fmt17(s.ring_outer) << '\n';
    out << "blob_shift = " << fmt17(s.blob_shift) << '\n';
    out << "lambda = " << fmt17(s.lambda) << '\n';
    out << "loss_dis = " << (s.loss_dis_on ? "true" : "false") << '\n';
    out << "loss_entrop = " << (s.loss_entrop_on ? "true" : "false") << '\n';
    out << "loss_unc = " << (s.loss_unc_on ? "true" : "false") << '\n';
    out << "optimizer = " << cd::enum_name(s.optimizer, cd::optimizer_table()) << '\n';
    out << "learning_rate = " << fmt17(s.learning_rate) << '\n';
    out << "momentum = " << fmt17(s.momentum) << '\n';
    out << "weight_decay = " << fmt17(s.weight_decay) << '\n';
    out << "grad_clip = " << fmt17(s.grad_clip) << '\n';
    out << "epochs = " << s.epochs << '\n';
    out << "batch_size = " << s.batch_size << '\n';
    out << "stage2 = " << (s.stage2 ? "true" : "false") << '\n';
    out << "stage2_noise_scale = " << fmt17(s.stage2_noise_scale) << '\n';
    out << "stage2_steps = " << s.stage2_steps << '\n';
    out << "stage2_outlier_target = " << fmt17(s.stage2_outlier_target) << '\n';
    out << "stage2_mix_inliers = " << (s.stage2_mix_inliers ? "true" : "false") << '\n';
    out << "stage2_learning_rate = " << fmt17(s.stage2_learning_rate) << '\n';
    out << "stage2_batch_size = " << s.stage2_batch_size << '\n';
    out << "seed = " << s.seed << '\n';
    out << "seeds = " << s.seeds << '\n';
    out << "epistemic_mode = " << cd::enum_name(s.epistemic_mode, cd::epistemic_table()) << '\n';
    out << "ece_bins = " << s.ece_bins << '\n';
    out << "ause_steps = " << s.ause_steps << '\n';
    if (!s.out_dir.empty()) out << "out_dir = " << s.out_dir << '\n';
    out << "plots = " << (s.plots ? "true" : "false") << '\n';
    out << "grid_resolution = " << s.grid_resolution << '\n';
    out << "lambda_values = " << list_double(s.lambda_values) << '\n';
    out << "prototype_values = " << list_size(s.prototype_values) << '\n';
    return out.str();
}

}  // namespace ldu
