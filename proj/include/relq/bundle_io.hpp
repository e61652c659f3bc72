#pragma once

#include <string>

#include "relq/dqn.hpp"

namespace relq {

// A bundle directory holds one relq-net file per network plus a bundle.txt
// manifest recording each head's input kind and the score reduction rule.
// Optimizer state is not persisted; bundles are evaluation artifacts.
void save_bundle(const std::string& dir, const ModelBundle& b);
ModelBundle load_bundle(const std::string& dir);

}  // namespace relq
