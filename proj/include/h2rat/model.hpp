#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "h2rat/attention.hpp"
#include "h2rat/rng.hpp"
#include "h2rat/textenc.hpp"
#include "h2rat/vision.hpp"

namespace h2rat {

struct ModelDims {
  std::size_t hidden = 32;         // m: embedding, LSTM and region feature size
  std::size_t attention = 24;      // k
  std::size_t feature = 16;        // f: raw region feature size
  GridGeometry grid;               // d = rows * cols
  std::size_t classes = 4;         // C
  std::size_t vocabulary = 2;      // |V|
  std::size_t layers = 2;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Every trainable tensor from word embedding to class head.
struct Model {
  ModelDims dims;
  Parameter embedding;  // m x |V|
  LstmParams lstm;
  ProjectionParams projection;
  H2ratParams attention;

  static Model zeros(const ModelDims& dims);

  // Fixed order used by the optimizer and the checkpoint manifest.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  // Throws ShapeError when a tensor disagrees with dims.
  void validate() const;
};

// Glorot-uniform matrices, zero biases, LSTM forget bias 1.
Model init_model(const ModelDims& dims, RngStream& rng);

// Rounds every parameter to the nearest float32 (the checkpoint precision).
void round_to_float32(Model& model);

struct ModelVars {
  Var reminder;  // R_I
  Var regions;   // V_I
  OutcomeVars outcome;
};

ModelVars run_model(Tape& tape, const Model& model, const Reminder& reminder,
                    const Tensor& features);

AttentionOutcome infer(const Model& model, const Reminder& reminder, const Tensor& features);

}  // namespace h2rat
