#include "relq/bundle_io.hpp"

#include <filesystem>
#include <fstream>

#include "relq/model_io.hpp"

namespace relq {

namespace {

struct NetEntry {
    const char* file;
    const char* input_kind;
};

constexpr NetEntry kEntries[] = {
    {"qnet.net", "raw_observation"},
    {"target.net", "raw_observation"},
    {"rel_raw_reference.net", "raw_observation"},
    {"rel_raw_evaluator.net", "raw_observation"},
    {"rel_feat_reference.net", "extracted_features"},
    {"rel_feat_evaluator.net", "extracted_features"},
    {"rnd_raw_target.net", "raw_observation"},
    {"rnd_raw_predictor.net", "raw_observation"},
    {"rnd_feat_target.net", "extracted_features"},
    {"rnd_feat_predictor.net", "extracted_features"},
};

std::string join(const std::string& dir, const char* file) {
    return (std::filesystem::path(dir) / file).string();
}

}  // namespace

void save_bundle(const std::string& dir, const ModelBundle& b) {
    std::filesystem::create_directories(dir);
    const ModelMeta meta{b.seed, static_cast<uint64_t>(b.steps_trained)};
    const Network<float>* nets[] = {
        &b.qnet,          &b.target,          &b.rel_raw.reference, &b.rel_raw.evaluator,
        &b.rel_feat.reference, &b.rel_feat.evaluator, &b.rnd_raw.target, &b.rnd_raw.predictor,
        &b.rnd_feat.target, &b.rnd_feat.predictor};
    for (size_t i = 0; i < std::size(kEntries); ++i)
        save_network(join(dir, kEntries[i].file), *nets[i], meta);

    std::ofstream f(join(dir, "bundle.txt"));
    if (!f) throw IoError("cannot write bundle manifest in " + dir);
    f << "relq-bundle 1\n";
    f << "seed " << b.seed << "\n";
    f << "steps " << b.steps_trained << "\n";
    f << "reduction mean-abs\n";
    for (const NetEntry& e : kEntries) f << "net " << e.file << " " << e.input_kind << "\n";
    if (!f.flush()) throw IoError("write failed: bundle.txt in " + dir);
}

ModelBundle load_bundle(const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a bundle directory: " + dir);
    ModelBundle b;
    ModelMeta meta;
    auto load = [&](const char* file) { return load_network<float>(join(dir, file), &meta); };
    b.qnet = load("qnet.net");
    b.target = load("target.net");
    b.rel_raw.reference = load("rel_raw_reference.net");
    b.rel_raw.evaluator = load("rel_raw_evaluator.net");
    b.rel_feat.reference = load("rel_feat_reference.net");
    b.rel_feat.evaluator = load("rel_feat_evaluator.net");
    b.rnd_raw.target = load("rnd_raw_target.net");
    b.rnd_raw.predictor = load("rnd_raw_predictor.net");
    b.rnd_feat.target = load("rnd_feat_target.net");
    b.rnd_feat.predictor = load("rnd_feat_predictor.net");
    b.rel_raw.adam = make_adam(b.rel_raw.evaluator);
    b.rel_feat.adam = make_adam(b.rel_feat.evaluator);
    b.rnd_raw.adam = make_adam(b.rnd_raw.predictor);
    b.rnd_feat.adam = make_adam(b.rnd_feat.predictor);
    b.seed = meta.seed;
    b.steps_trained = static_cast<int64_t>(meta.train_steps);
    if (b.qnet.input_dim() != kObsDim || b.qnet.output_dim() != kNumActions)
        throw IoError("qnet in " + dir + " has unexpected dimensions");
    return b;
}

}  // namespace relq
