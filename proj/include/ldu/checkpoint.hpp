#pragma once
// Versioned textual checkpoints. Layout: a "ldu_checkpoint_v1" magic line,
// the model spec as "key value" lines, then one "tensor <name> <rows>
// <cols>" header per parameter followed by its values on a single line with
// 17 significant digits (exact round trip), and a closing "end".

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/format.hpp"
#include "ldu/model.hpp"

namespace ldu {

namespace checkpoint_detail {

inline constexpr const char* kMagic = "ldu_checkpoint_v1";

struct NamedTensor {
    std::string name;
    Tensor* tensor;
};

inline std::vector<NamedTensor> named_parameters(LduModel& model) {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < model.feature.size(); ++i) {
        out.push_back({"feature." + std::to_string(i) + ".weight", &model.feature[i].weight});
        out.push_back({"feature." + std::to_string(i) + ".bias", &model.feature[i].bias});
    }
    if (model.spec.kind == ModelKind::kLdu)
        out.push_back({"prototypes", &model.bank.prototypes});
    out.push_back({"head.weight", &model.head.weight});
    out.push_back({"head.bias", &model.head.bias});
    if (model.spec.kind == ModelKind::kLdu) {
        out.push_back({"unc_head.weight", &model.unc_head.weight});
        out.push_back({"unc_head.bias", &model.unc_head.bias});
    }
    return out;
}

}  // namespace checkpoint_detail

inline void save_checkpoint(const LduModel& model, const std::string& path) {
    namespace cd = checkpoint_detail;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    const ModelSpec& s = model.spec;
    out << cd::kMagic << '\n';
    out << "kind " << (s.kind == ModelKind::kLdu ? "ldu" : "plain") << '\n';
    out << "task " << (s.task == Task::kClassification ? "classification" : "regression")
        << '\n';
    out << "dm_variant " << (s.dm_variant == DmVariant::kCosine ? "cosine" : "l2") << '\n';
    out << "unit_norm " << (s.unit_norm ? 1 : 0) << '\n';
    out << "widths";
    for (std::size_t w : s.widths) out << ' ' << w;
    out << '\n';
    out << "prototypes " << s.prototypes << '\n';
    out << "outputs " << s.outputs << '\n';
    out << "seed " << s.seed << '\n';
    for (const auto& [name, tensor] : cd::named_parameters(const_cast<LduModel&>(model))) {
        out << "tensor " << name << ' ' << tensor->rows() << ' ' << tensor->cols() << '\n';
        const auto v = tensor->values();
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << fmt17(v[i]);
        out << '\n';
    }
    out << "end\n";
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline LduModel load_checkpoint(const std::string& path) {
    namespace cd = checkpoint_detail;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != cd::kMagic)
        throw std::runtime_error("load_checkpoint: " + path + " is not a " +
                                 std::string(cd::kMagic) + " file");

    ModelSpec spec;
    spec.widths.clear();
    std::string key;
    while (in >> key && key != "tensor" && key != "end") {
        if (key == "kind") {
            std::string v;
            in >> v;
            if (v == "ldu")
                spec.kind = ModelKind::kLdu;
            else if (v == "plain")
                spec.kind = ModelKind::kPlain;
            else
                throw std::runtime_error("load_checkpoint: unknown kind '" + v + "'");
        } else if (key == "task") {
            std::string v;
            in >> v;
            spec.task = v == "regression" ? Task::kRegression : Task::kClassification;
        } else if (key == "dm_variant") {
            std::string v;
            in >> v;
            spec.dm_variant = v == "l2" ? DmVariant::kL2 : DmVariant::kCosine;
        } else if (key == "unit_norm") {
            int v = 0;
            in >> v;
            spec.unit_norm = v != 0;
        } else if (key == "widths") {
            std::getline(in, line);
            std::istringstream ws(line);
            std::size_t w;
            while (ws >> w) spec.widths.push_back(w);
        } else if (key == "prototypes") {
            in >> spec.prototypes;
        } else if (key == "outputs") {
            in >> spec.outputs;
        } else if (key == "seed") {
            in >> spec.seed;
        } else {
            throw std::runtime_error("load_checkpoint: unknown header key '" + key + "'");
        }
    }
    if (spec.widths.size() < 2)
        throw std::runtime_error("load_checkpoint: missing or short widths header");

    LduModel model = build_model(spec);
    auto params = cd::named_parameters(model);
    std::size_t next = 0;
    while (key == "tensor") {
        std::string name;
        std::size_t rows = 0, cols = 0;
        if (!(in >> name >> rows >> cols))
            throw std::runtime_error("load_checkpoint: malformed tensor header");
        if (next >= params.size() || name != params[next].name)
            throw std::runtime_error("load_checkpoint: unexpected tensor '" + name +
                                     "', expected '" +
                                     (next < params.size() ? params[next].name : "end") + "'");
        Tensor& t = *params[next].tensor;
        if (t.rows() != rows || t.cols() != cols)
            throw std::runtime_error("load_checkpoint: tensor '" + name + "' has shape " +
                                     std::to_string(rows) + "x" + std::to_string(cols) +
                                     ", expected " + std::to_string(t.rows()) + "x" +
                                     std::to_string(t.cols()));
        auto& values = t.mutable_values();
        for (double& v : values)
            if (!(in >> v))
                throw std::runtime_error("load_checkpoint: truncated values for '" + name + "'");
        ++next;
        if (!(in >> key)) throw std::runtime_error("load_checkpoint: missing 'end'");
    }
    if (key != "end") throw std::runtime_error("load_checkpoint: missing 'end'");
    if (next != params.size())
        throw std::runtime_error("load_checkpoint: file has " + std::to_string(next) +
                                 " tensors, model expects " + std::to_string(params.size()));
    return model;
}

}  // namespace ldu
