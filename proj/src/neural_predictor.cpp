#include "mmms/neural_predictor.hpp"

#include <chrono>

#include "mmms/errors.hpp"

namespace mmms {

NeuralPredictor::NeuralPredictor(std::shared_ptr<const nn::Model> model) : model_(std::move(model)) {
  if (!model_) throw ConfigError("neural predictor needs a model");
}

std::string NeuralPredictor::describe() const { return model_->describe(); }

void NeuralPredictor::prepare(const Sample& sample) {
  prepared_.reset();
  prepared_ = model_->prepare(sample);
}

PredictResponse NeuralPredictor::predict(const PredictRequest& request) {
  if (!prepared_ || prepared_->image_id != request.image_id) {
    throw PredictorError("neural: image '" + request.image_id + "' was not prepared");
  }
  const auto start = std::chrono::steady_clock::now();
  const Tensor3 prob = model_->predict(*prepared_, request.clicks, request.prev_mask);
  PredictResponse out;
  out.probabilities = {prob.height(), prob.width(),
                       std::vector<float>(prob.values().begin(), prob.values().end())};
  out.timing.click_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace mmms
