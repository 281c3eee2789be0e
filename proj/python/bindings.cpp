#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sgrt/bench.hpp"
#include "sgrt/config.hpp"
#include "sgrt/dataset.hpp"
#include "sgrt/eval.hpp"
#include "sgrt/model.hpp"
#include "sgrt/train.hpp"

namespace py = pybind11;
using namespace sgrt;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  if (a.ndim() != 3) throw ShapeError("expected an array of shape (height, width, channels)");
  const Shape s{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))};
  return Tensor(s, std::vector<float>(a.data(), a.data() + a.size()));
}

Batch to_batch(const FloatArray& a) {
  if (a.ndim() == 3) return {to_tensor(a)};
  if (a.ndim() != 4) throw ShapeError("expected an array of shape (batch, height, width, channels)");
  const Shape s{static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3))};
  Batch b;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const float* p = a.data() + i * static_cast<py::ssize_t>(s.size());
    b.emplace_back(s, std::vector<float>(p, p + s.size()));
  }
  return b;
}

py::array_t<float> to_array(const Tensor& t) {
  py::array_t<float> out({t.height(), t.width(), t.channels()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::array_t<float> to_array(const Batch& b) {
  const Shape s = batch_shape(b);
  py::array_t<float> out({static_cast<int>(b.size()), s.height, s.width, s.channels});
  float* p = out.mutable_data();
  for (const auto& t : b) p = std::copy(t.values().begin(), t.values().end(), p);
  return out;
}

Mask to_mask(const MaskArray& a) {
  if (a.ndim() != 2) throw ShapeError("mask must have shape (height, width)");
  Mask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.labels.begin());
  return m;
}

py::array_t<std::uint8_t> to_array(const Mask& m) {
  py::array_t<std::uint8_t> out({m.height, m.width});
  std::copy(m.labels.begin(), m.labels.end(), out.mutable_data());
  return out;
}

py::dict parameter_dict(const SegModel& model) {
  const ParameterCount pc = count_parameters(model);
  py::list layers;
  for (const auto& l : pc.layers) {
    py::dict d;
    d["node"] = l.node;
    d["in"] = l.in_channels;
    d["out"] = l.out_channels;
    d["stride"] = l.stride;
    d["trainable"] = l.trainable();
    d["running_stats"] = l.running_stats;
    layers.append(d);
  }
  py::dict out;
  out["trainable"] = pc.trainable;
  out["running_stats"] = pc.running_stats;
  out["layers"] = layers;
  return out;
}

SweepMode sweep_mode(const std::string& name) {
  if (name == "auto") return SweepMode::kAuto;
  if (name == "exact") return SweepMode::kExact;
  if (name == "binned") return SweepMode::kBinned;
  throw ConfigError("sweep mode must be auto, exact or binned");
}

py::dict report_dict(const EvalReport& r) {
  py::dict out;
  for (const auto& [label, index] : kSummaryRows) {
    const ClassResult& c = index < 0 ? r.all : r.classes[index];
    out[py::str(std::string(label))] = c.defined ? py::cast(c.ap) : py::none();
  }
  return out;
}

// Adam over a model held by Python; one step per call.
class Trainer {
 public:
  Trainer(SegModel& model, double lr) : model_(model), lr_(lr), state_(AdamState::for_parameters(model.parameters())) {}

  double step(const FloatArray& inputs, const FloatArray& targets) {
    model_.set_mode(Mode::kTrain);
    const Batch logits = model_.forward(to_batch(inputs));
    const auto loss = bce_with_logits(logits, to_batch(targets));
    adam_step(model_.parameters(), model_.backward(loss.grad), state_, lr_);
    model_.set_mode(Mode::kInfer);
    return loss.loss;
  }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::int64_t steps() const { return state_.t; }

 private:
  SegModel& model_;
  double lr_;
  AdamState state_;
};

}  // namespace

PYBIND11_MODULE(_sgrt, m) {
  m.doc() = "Tiny real-time semantic segmentation network, augmentation, evaluation and benchmarks";

  py::register_exception<Error>(m, "SgrtError", PyExc_RuntimeError);

  m.attr("CLASS_NAMES") = py::cast(std::vector<std::string>(kClassNames.begin(), kClassNames.end()));
  m.attr("DEFAULT_LEAKY_SLOPE") = kDefaultLeakySlope;

  py::class_<SegModel>(m, "Model")
      .def(py::init([](int height, int width, std::uint64_t seed, double leaky_slope) {
             ModelOptions o;
             o.leaky_slope = leaky_slope;
             auto model = SegModel::build(height, width, seed, o);
             model.set_mode(Mode::kInfer);
             return model;
           }),
           py::arg("height"), py::arg("width"), py::arg("seed") = 1, py::arg("leaky_slope") = kDefaultLeakySlope)
      .def_static("load", &load_model, py::arg("path"))
      .def("save", [](const SegModel& self, const std::filesystem::path& p) { save_weights(self, p); }, py::arg("path"))
      .def_property_readonly("input_shape",
                             [](const SegModel& self) {
                               const Shape s = self.input_shape();
                               return py::make_tuple(s.height, s.width, s.channels);
                             })
      .def_property_readonly("leaky_slope", [](const SegModel& self) { return self.leaky_slope(); })
      .def("predict",
           [](const SegModel& self, const FloatArray& x) {
             return x.ndim() == 3 ? to_array(self.predict(to_tensor(x))) : to_array(self.predict(to_batch(x)));
           },
           py::arg("image"), "Logits for one (H, W, 3) image or an (N, H, W, 3) batch.")
      .def("probabilities",
           [](const SegModel& self, const FloatArray& x) {
             Batch out = self.predict(to_batch(x));
             for (auto& t : out) t = sigmoid(t);
             return x.ndim() == 3 ? to_array(out.front()) : to_array(out);
           },
           py::arg("image"))
      .def("segment",
           [](const SegModel& self, const FloatArray& x, float threshold) {
             return to_array(probabilities_to_mask(sigmoid(self.predict(to_tensor(x))), threshold));
           },
           py::arg("image"), py::arg("threshold") = 0.5f, "Class-index mask, 0 = background.")
      .def("folded", [](const SegModel& self) { return prepare_inference(self); },
           "Copy with batch norm folded into the convolutions.")
      .def("parameter_count", &parameter_dict);

  py::class_<Trainer>(m, "Trainer")
      .def(py::init<SegModel&, double>(), py::arg("model"), py::arg("lr") = 0.01, py::keep_alive<1, 2>())
      .def("step", &Trainer::step, py::arg("inputs"), py::arg("targets"), "One Adam step; returns the batch BCE.")
      .def_property("lr", &Trainer::lr, &Trainer::set_lr)
      .def_property_readonly("steps", &Trainer::steps);

  m.def("bce_loss",
        [](const FloatArray& logits, const FloatArray& targets) {
          return bce_with_logits(to_batch(logits), to_batch(targets)).loss;
        },
        py::arg("logits"), py::arg("targets"));

  m.def("generate_toy_scene",
        [](std::uint64_t seed, int height, int width) {
          const auto s = generate_toy_scene(seed, height, width);
          return py::make_tuple(to_array(s.image), to_array(s.mask));
        },
        py::arg("seed"), py::arg("height") = 64, py::arg("width") = 80, "Returns (image, mask).");
  m.def("mask_to_targets", [](const MaskArray& mask) { return to_array(mask_to_targets(to_mask(mask))); },
        py::arg("mask"));
  m.def("subsample_image",
        [](const FloatArray& image, int h, int w) { return to_array(subsample_image(to_tensor(image), h, w)); },
        py::arg("image"), py::arg("height"), py::arg("width"));

  m.def("default_augmentation_json", [] { return augmentation_config_to_json(AugmentationConfig{}); });
  m.def("augment",
        [](const FloatArray& image, const MaskArray& mask, const std::string& config_json, std::uint64_t index) {
          const AugmentationConfig cfg =
              config_json.empty() ? AugmentationConfig{} : augmentation_config_from_json(config_json);
          const auto out = apply_pipeline({to_tensor(image), to_mask(mask)}, cfg, index);
          return py::make_tuple(to_array(out.image), to_array(out.mask));
        },
        py::arg("image"), py::arg("mask"), py::arg("config_json") = "", py::arg("index") = 0);

  m.def("average_precision",
        [](const FloatArray& scores, const FloatArray& targets, const std::string& mode) {
          return average_precision(pr_curve({scores.data(), static_cast<std::size_t>(scores.size())},
                                            {targets.data(), static_cast<std::size_t>(targets.size())},
                                            sweep_mode(mode)));
        },
        py::arg("scores"), py::arg("targets"), py::arg("mode") = "auto");
  m.def("evaluate",
        [](const FloatArray& scores, const FloatArray& targets, const std::string& mode) {
          return report_dict(evaluate_scores(to_batch(scores), to_batch(targets), sweep_mode(mode)));
        },
        py::arg("scores"), py::arg("targets"), py::arg("mode") = "auto",
        "Per-class and micro-averaged AP keyed by Ball, Field, Line, Goal, Robot, All.");

  m.def("time_inference",
        [](int width, int height, int iterations, int warmup) {
          const BenchResult b = time_inference({width, height}, iterations, warmup);
          py::dict d;
          d["resolution"] = b.resolution.str();
          d["iterations"] = b.iterations;
          d["median_ms"] = b.median_ms;
          d["mean_ms"] = b.mean_ms;
          d["p95_ms"] = b.p95_ms;
          d["host"] = b.host;
          return d;
        },
        py::arg("width"), py::arg("height"), py::arg("iterations") = 50, py::arg("warmup") = 5);

  m.def("resolve_config", [](const std::string& text) { return config_to_json(config_from_json(text)); },
        py::arg("json_text"), "Defaults filled in; unknown keys raise.");
}
