#pragma once

#include <memory>
#include <optional>

#include "mmms/nn/model.hpp"
#include "mmms/predictor.hpp"

namespace mmms {

// Adapts nn::Model to the predictor interface. The model is shared and
// read-only, so one instance can back several predictors.
class NeuralPredictor final : public Predictor {
 public:
  explicit NeuralPredictor(std::shared_ptr<const nn::Model> model);

  std::string describe() const override;
  void prepare(const Sample& sample) override;
  PredictResponse predict(const PredictRequest& request) override;

  const nn::Model& model() const noexcept { return *model_; }
  // Present after prepare().
  const nn::PreparedImage* prepared() const noexcept {
    return prepared_ ? &*prepared_ : nullptr;
  }

 private:
  std::shared_ptr<const nn::Model> model_;
  std::optional<nn::PreparedImage> prepared_;
};

}  // namespace mmms
