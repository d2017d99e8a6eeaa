#pragma once

#include <filesystem>
#include <string>

#include "mdgan/nn/stack.hpp"

namespace mdgan::nn {

// Parameter checkpoint format (JSON):
//
//   {
//     "magic": "mdgan-params",
//     "version": 1,
//     "input_dim": 10,
//     "widths": [10, 7, 5, 7, 10],
//     "tensors": [
//       {"name": "layer0.weights", "kind": "parameter", "shape": [10, 7], "data": [...]},
//       {"name": "layer1.running_mean", "kind": "buffer", "shape": [1, 7], "data": [...]},
//       ...
//     ]
//   }
//
// Tensors are listed parameters first, then buffers, in stack order. Loading
// requires an identically-shaped stack; names and shapes are checked.

inline constexpr const char* kCheckpointMagic = "mdgan-params";
inline constexpr int kCheckpointVersion = 1;

std::string save_parameters(const LayerStack& stack);
void load_parameters(LayerStack& stack, const std::string& text);

void save_parameters_file(const LayerStack& stack, const std::filesystem::path& path);
void load_parameters_file(LayerStack& stack, const std::filesystem::path& path);

}  // namespace mdgan::nn
