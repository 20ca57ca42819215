#include "socrec/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <unordered_map>

#include "socrec/errors.hpp"

namespace socrec {

double bce_loss(std::span<const double> logits, std::span<const double> labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw ShapeError("bce_loss: " + std::to_string(logits.size()) + " logits vs " +
                     std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    if (!std::isfinite(z)) throw NumericError("bce_loss: non-finite logit");
    total += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(logits.size());
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd, adam)");
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0)) {
    throw ConfigError("adam: betas must lie in [0, 1) and epsilon must be positive");
  }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, AdamConfig adam)
    : kind_(kind), lr_(learning_rate), adam_(adam) {}

void Optimizer::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) throw ShapeError("optimizer: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw ShapeError("optimizer: parameter " + params[i]->shape_string() + " vs gradient " +
                       grads[i].shape_string());
    }
  }
  ++t_;
  if (kind_ == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->data();
      auto g = grads[i].data();
      for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr_ * g[j];
    }
    return;
  }
  if (m_.empty()) {
    for (const Matrix& g : grads) {
      m_.emplace_back(g.rows(), g.cols());
      v_.emplace_back(g.rows(), g.cols());
    }
  }
  const double t = static_cast<double>(t_);
  const double c1 = 1.0 - std::pow(adam_.beta1, t);
  const double c2 = 1.0 - std::pow(adam_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = adam_.beta1 * m[j] + (1.0 - adam_.beta1) * g[j];
      v[j] = adam_.beta2 * v[j] + (1.0 - adam_.beta2) * g[j] * g[j];
      p[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + adam_.epsilon);
    }
  }
}

std::vector<UserGroup> group_by_user(std::span<const Example> examples) {
  std::vector<UserGroup> groups;
  std::unordered_map<std::size_t, std::size_t> slot;
  for (const Example& e : examples) {
    auto [it, inserted] = slot.try_emplace(e.user, groups.size());
    if (inserted) groups.push_back({e.user, {}, {}});
    groups[it->second].items.push_back(e.item);
    groups[it->second].labels.push_back(e.label);
  }
  return groups;
}

double mean_loss(const ScaaModel& model, std::span<const UserHistory> histories,
                 std::span<const Example> examples) {
  if (examples.empty()) throw ContractError("mean_loss: no examples");
  double total = 0.0;
  for (const UserGroup& g : group_by_user(examples)) {
    if (g.user >= histories.size()) throw IndexError("mean_loss: unknown user");
    const auto logits = score_candidates(model, histories[g.user], g.items);
    total += bce_loss(logits, g.labels) * static_cast<double>(g.items.size());
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train(ScaaModel& model, std::span<const UserHistory> histories,
                  std::span<const Example> examples, const TrainConfig& cfg) {
  cfg.validate();
  TrainResult result;
  if (examples.empty()) {
    if (cfg.epochs == 0) return result;
    throw ContractError("train: no training examples");
  }

  const auto diverged = [](std::size_t epoch, const char* what) {
    return NumericError("training diverged in epoch " + std::to_string(epoch) + ": " + what);
  };
  try {
    result.loss_curve.push_back(mean_loss(model, histories, examples));
  } catch (const NumericError& e) {
    throw diverged(0, e.what());
  }
  if (cfg.epochs == 0) return result;

  std::mt19937_64 rng(cfg.seed ^ 0x5eed5eed5eedULL);
  Optimizer opt(cfg.optimizer, cfg.learning_rate, cfg.adam);
  std::vector<Matrix*> params = model.parameters();
  std::vector<Example> order(examples.begin(), examples.end());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const auto groups = group_by_user(std::span(order).subspan(start, stop - start));
      BatchGradients bg;
      try {
        bg = batch_gradients(model, histories, groups);
      } catch (const NumericError& e) {
        throw diverged(epoch, e.what());
      }
      if (!std::isfinite(bg.loss_sum)) throw diverged(epoch, "non-finite loss");
      epoch_loss += bg.loss_sum;
      std::vector<Matrix> grads = std::move(bg.dense);
      if (model.items.trainable) {
        Matrix item_grad(model.items.count(), model.items.dim());
        for (const auto& [id, g] : bg.item_rows) {
          std::copy(g.data().begin(), g.data().end(), item_grad.row(id).begin());
        }
        grads.push_back(std::move(item_grad));
      }
      opt.step(params, grads);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      throw diverged(epoch, "non-finite loss");
    }
    result.loss_curve.push_back(epoch_loss);
  }
  return result;
}

void save_loss_curve(const TrainResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,mean_loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
    out << e << ',' << result.loss_curve[e] << '\n';
  }
}

}  // namespace socrec
