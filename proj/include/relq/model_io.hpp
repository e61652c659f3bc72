#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "relq/nn.hpp"

namespace relq {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelMeta {
    uint64_t seed = 0;
    uint64_t train_steps = 0;
};

// Versioned text format:
//   relq-net 1
//   seed <u64>
//   steps <u64>
//   layers <n>
//   layer <in> <out> <activation>
//   <out> rows of <in> weights, then one row of <out> biases
// Floats are printed with max_digits10 so the round trip is value-exact.
template <class S>
void save_network(const std::string& path, const Network<S>& n, const ModelMeta& meta) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f.precision(std::numeric_limits<S>::max_digits10);
    f << "relq-net 1\n";
    f << "seed " << meta.seed << "\n";
    f << "steps " << meta.train_steps << "\n";
    f << "layers " << n.layer_count() << "\n";
    for (size_t k = 0; k < n.layer_count(); ++k) {
        const LayerSpec& l = n.layers[k];
        f << "layer " << l.input_dim << " " << l.output_dim << " "
          << activation_name(l.activation) << "\n";
        for (int r = 0; r < l.output_dim; ++r) {
            for (int c = 0; c < l.input_dim; ++c) {
                if (c) f << " ";
                f << n.weights[k](r, c);
            }
            f << "\n";
        }
        for (int r = 0; r < l.output_dim; ++r) {
            if (r) f << " ";
            f << n.biases[k](r);
        }
        f << "\n";
    }
    if (!f) throw IoError("write failed: " + path);
}

template <class S>
Network<S> load_network(const std::string& path, ModelMeta* meta = nullptr) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    auto fail = [&](const std::string& why) -> IoError {
        return IoError(path + ": " + why);
    };
    std::string tag;
    int version = 0;
    if (!(f >> tag >> version) || tag != "relq-net" || version != 1)
        throw fail("not a relq-net v1 file");
    ModelMeta m;
    size_t n_layers = 0;
    if (!(f >> tag >> m.seed) || tag != "seed") throw fail("missing seed");
    if (!(f >> tag >> m.train_steps) || tag != "steps") throw fail("missing steps");
    if (!(f >> tag >> n_layers) || tag != "layers" || n_layers == 0)
        throw fail("missing layer count");
    Network<S> n;
    for (size_t k = 0; k < n_layers; ++k) {
        LayerSpec l{};
        std::string act;
        if (!(f >> tag >> l.input_dim >> l.output_dim >> act) || tag != "layer")
            throw fail("bad layer header");
        l.activation = activation_from_name(act);
        Mat<S> w(l.output_dim, l.input_dim);
        for (int r = 0; r < l.output_dim; ++r)
            for (int c = 0; c < l.input_dim; ++c)
                if (!(f >> w(r, c))) throw fail("truncated weights");
        Vec<S> b(l.output_dim);
        for (int r = 0; r < l.output_dim; ++r)
            if (!(f >> b(r))) throw fail("truncated biases");
        n.layers.push_back(l);
        n.weights.push_back(std::move(w));
        n.biases.push_back(std::move(b));
    }
    validate_chain(n.layers);
    if (meta) *meta = m;
    return n;
}

}  // namespace relq
