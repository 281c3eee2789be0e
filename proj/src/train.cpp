#include "sgrt/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace sgrt {

template <typename T>
void adam_step(const std::vector<std::span<T>>& params, const std::vector<std::vector<T>>& grads, AdamState& state,
               double lr) {
  if (!(lr > 0.0)) throw PreconditionError("learning rate must be positive");
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("Adam: " + std::to_string(params.size()) + " parameter tensors, " +
                     std::to_string(grads.size()) + " gradients, " + std::to_string(state.m.size()) + " moments");
  for (std::size_t k = 0; k < params.size(); ++k)
    if (grads[k].size() != params[k].size() || state.m[k].size() != params[k].size() ||
        state.v[k].size() != params[k].size())
      throw ShapeError("Adam: size mismatch in parameter tensor " + std::to_string(k));

  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k][i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      params[k][i] = static_cast<T>(params[k][i] - lr * mhat / (std::sqrt(vhat) + state.epsilon));
    }
  }
}

template void adam_step<float>(const std::vector<std::span<float>>&, const std::vector<std::vector<float>>&,
                               AdamState&, double);
template void adam_step<double>(const std::vector<std::span<double>>&, const std::vector<std::vector<double>>&,
                                AdamState&, double);

void TrainConfig::validate() const {
  if (!(initial_lr > 0.0)) throw ConfigError("initial_lr must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0)) throw ConfigError("lr_decay_factor must be in (0, 1)");
  if (plateau_patience < 1) throw ConfigError("plateau_patience must be at least 1");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be at least 1");
  if (improvement_tolerance < 0.0) throw ConfigError("improvement_tolerance must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (input_height < 0 || input_width < 0) throw ConfigError("input size must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

ScheduleDecision schedule_update(const TrainHistory& history, const TrainConfig& config) {
  if (history.empty()) throw PreconditionError("schedule_update needs at least one epoch of history");
  ScheduleDecision d;
  d.lr = config.initial_lr;
  double best = std::numeric_limits<double>::infinity();
  int plateau = 0;
  for (const auto& rec : history) {
    if (rec.val_loss < best - config.improvement_tolerance) {
      best = rec.val_loss;
      d.epochs_since_improvement = 0;
      plateau = 0;
    } else {
      ++d.epochs_since_improvement;
      ++plateau;
    }
    if (plateau >= config.plateau_patience) {
      d.lr *= config.lr_decay_factor;
      ++d.decays;
      plateau = 0;
    }
  }
  d.stop = d.epochs_since_improvement >= config.early_stop_patience;
  return d;
}

namespace {

double batch_loss(const SegModel& model, const TrainingBatch& b) {
  const Batch logits = model.predict(b.inputs);
  return bce_with_logits(logits, b.targets).loss;
}

}  // namespace

double evaluate_loss(const SegModel& model, const SampleSource& source, const std::vector<std::size_t>& indices,
                     int batch_size, int input_height, int input_width) {
  if (indices.empty()) throw PreconditionError("evaluate_loss needs at least one sample");
  BatchOptions opts;
  opts.batch_size = batch_size;
  opts.input_height = input_height;
  opts.input_width = input_width;
  double total = 0.0;
  for (std::size_t first = 0; first < indices.size(); first += static_cast<std::size_t>(batch_size)) {
    const std::size_t last = std::min(indices.size(), first + static_cast<std::size_t>(batch_size));
    const std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(first),
                                         indices.begin() + static_cast<std::ptrdiff_t>(last));
    total += batch_loss(model, prepare_samples(source, chunk, opts, 0)) * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(indices.size());
}

double pixel_accuracy(const SegModel& model, const SampleSource& source, const std::vector<std::size_t>& indices,
                      int input_height, int input_width) {
  std::size_t correct = 0, total = 0;
  for (const std::size_t i : indices) {
    SegmentationSample s = source.load(i);
    s = subsample_sample(s, input_height > 0 ? input_height : s.mask.height,
                         input_width > 0 ? input_width : s.mask.width);
    const Mask predicted = probabilities_to_mask(sigmoid(model.predict(s.image)));
    for (std::size_t p = 0; p < predicted.labels.size(); ++p) correct += predicted.labels[p] == s.mask.labels[p];
    total += predicted.labels.size();
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write training history " + path.string());
  out << "epoch,train_loss,val_loss,lr,seconds\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.3f\n", r.epoch, r.train_loss, r.val_loss, r.lr, r.seconds);
    out << line;
  }
}

FitResult fit(SegModel& model, const SampleSource& source, const std::vector<std::size_t>& train_indices,
              const std::vector<std::size_t>& val_indices, const TrainConfig& config, const FitOptions& options) {
  config.validate();
  if (options.augmentation) options.augmentation->validate();
  FitResult result;
  if (config.max_epochs == 0) return result;
  if (train_indices.empty()) throw PreconditionError("training split is empty");
  if (val_indices.empty()) throw PreconditionError("validation split is empty");
  if (options.checkpoint_dir) std::filesystem::create_directories(*options.checkpoint_dir);

  BatchOptions batch_opts;
  batch_opts.batch_size = config.batch_size;
  batch_opts.input_height = config.input_height;
  batch_opts.input_width = config.input_width;
  batch_opts.augmentation = options.augmentation;
  batch_opts.backgrounds = options.backgrounds;

  model.set_mode(Mode::kTrain);
  AdamState adam = AdamState::for_parameters(model.parameters());
  std::vector<ModelNode<float>> best_nodes = model.nodes();
  double lr = config.initial_lr;
  result.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const EpochBatches batches(source, train_indices, batch_opts, derive_seed(config.seed, epoch));
    model.set_mode(Mode::kTrain);
    double train_total = 0.0;
    for (std::size_t k = 0; k < batches.batch_count(); ++k) {
      try {
        const TrainingBatch b = batches.batch(k);
        const Batch logits = model.forward(b.inputs);
        const auto loss = bce_with_logits(logits, b.targets);
        const auto grads = model.backward(loss.grad);
        adam_step(model.parameters(), grads, adam, lr);
        train_total += static_cast<double>(loss.loss) * static_cast<double>(b.inputs.size());
      } catch (const Error& e) {
        throw std::runtime_error("epoch " + std::to_string(epoch) + ", batch " + std::to_string(k) + ": " +
                                 e.what());
      }
    }
    model.set_mode(Mode::kInfer);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_total / static_cast<double>(train_indices.size());
    rec.val_loss = evaluate_loss(model, source, val_indices, config.batch_size, config.input_height,
                                 config.input_width);
    rec.lr = lr;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);

    if (rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      best_nodes = model.nodes();
      if (options.checkpoint_dir) save_weights(model, *options.checkpoint_dir / "best.sgrt");
    }
    if (options.checkpoint_dir && config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04d.sgrt", epoch + 1);
      save_weights(model, *options.checkpoint_dir / name);
    }
    if (options.history_csv) write_history_csv(result.history, *options.history_csv);
    if (options.on_epoch) options.on_epoch(rec);

    const ScheduleDecision d = schedule_update(result.history, config);
    lr = d.lr;
    if (d.stop) {
      result.stopped_early = true;
      break;
    }
  }
  model = SegModel(model.input_shape().height, model.input_shape().width, model.leaky_slope(), best_nodes);
  model.set_mode(Mode::kInfer);
  return result;
}

}  // namespace sgrt
