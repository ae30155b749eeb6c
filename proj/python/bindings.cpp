#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cwat/checkpoint.hpp"
#include "cwat/commands.hpp"
#include "cwat/cost.hpp"
#include "cwat/error.hpp"
#include "cwat/evaluation.hpp"
#include "cwat/preprocess.hpp"
#include "cwat/run_config.hpp"
#include "cwat/synth.hpp"
#include "cwat/training.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

cwat::Tensor to_tensor(const Array& a) {
  cwat::Shape shape(a.shape(), a.shape() + a.ndim());
  return cwat::Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const cwat::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<cwat::Prediction> to_predictions(const std::vector<std::tuple<std::string, int, int>>& rows) {
  std::vector<cwat::Prediction> out;
  for (const auto& [case_id, label, pred] : rows) out.push_back({case_id, label, pred});
  return out;
}

py::dict rates_dict(const cwat::Rates& r) {
  py::dict d;
  auto opt = [](const std::optional<double>& v) -> py::object {
    return v ? py::object(py::float_(*v)) : py::object(py::none());
  };
  d["sensitivity"] = opt(r.sensitivity);
  d["specificity"] = opt(r.specificity);
  d["accuracy"] = opt(r.accuracy);
  return d;
}

class Model {
 public:
  Model(const std::string& config_text, std::uint64_t seed)
      : config_(cwat::parse_run_config(config_text)),
        params_(cwat::init_model(config_.model, seed)) {}

  static Model load(const std::string& path) {
    auto loaded = cwat::load_model(path);
    Model m;
    m.config_ = loaded.config;
    m.params_ = loaded.params;
    return m;
  }

  Array encode(const Array& x) const {
    cwat::NoGradGuard guard;
    return to_array(cwat::encode(to_tensor(x), params_.cae, config_.model.cae));
  }

  Array reconstruct(const Array& x) const {
    cwat::NoGradGuard guard;
    const auto z = cwat::encode(to_tensor(x), params_.cae, config_.model.cae);
    return to_array(cwat::decode(z, params_.cae, config_.model.cae));
  }

  Array logits(const Array& x) const {
    cwat::NoGradGuard guard;
    cwat::Rng unused(0);
    return to_array(cwat::forward(to_tensor(x), params_, config_.model, false, unused).logits);
  }

  std::size_t parameter_count() const {
    return cwat::count_parameters(params_.cae.named()) +
           cwat::count_parameters(params_.classifier.named());
  }

  std::string config_text() const { return config_.to_text(); }

  void save(const std::string& path) const {
    cwat::write_checkpoint(path, cwat::make_checkpoint(config_.to_text(), params_));
  }

 private:
  Model() = default;
  cwat::RunConfig config_;
  cwat::ModelParams params_;
};

}  // namespace

PYBIND11_MODULE(_cwat, m) {
  m.doc() = "Channelwise autoencoder + single-head transformer EEG toolkit.";

  static py::exception<cwat::Error> error(m, "CwatError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cwat::Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("downsample",
        [](const std::vector<double>& series, double from_hz, double to_hz) {
          return cwat::downsample(series, from_hz, to_hz);
        },
        py::arg("series"), py::arg("from_hz"), py::arg("to_hz") = 100.0);

  m.def("znorm", [](std::vector<double> channel) {
    cwat::znorm_channel(channel);
    return channel;
  });

  m.def("count_cost_conv",
        [](std::size_t kernel_size, std::size_t in_channels, std::size_t out_channels,
           std::size_t length, std::size_t groups, bool channelwise) {
          const auto c = cwat::count_cost_conv({kernel_size, in_channels, out_channels, length, groups},
                                               channelwise ? cwat::ConvKind::Channelwise
                                                           : cwat::ConvKind::Standard);
          return std::make_pair(c.flops, c.params);
        },
        py::arg("kernel_size"), py::arg("in_channels"), py::arg("out_channels"), py::arg("length"),
        py::arg("groups"), py::arg("channelwise") = true);

  m.def("cost_report_json", [](const std::string& preset) {
    const auto model = cwat::model_preset(preset);
    return cwat::cost_json(cwat::model_cost(model.cae, model.transformer)).dump();
  });

  m.def("lr_schedule", &cwat::lr_schedule, py::arg("step"), py::arg("base_lr") = 1e-3,
        py::arg("warmup_steps") = 200);

  m.def("confusion", [](const std::vector<std::tuple<std::string, int, int>>& rows) {
    const auto c = cwat::confusion(to_predictions(rows));
    py::dict d;
    d["tp"] = c.tp;
    d["tn"] = c.tn;
    d["fp"] = c.fp;
    d["fn"] = c.fn;
    return d;
  });

  m.def("rates", [](std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
    return rates_dict(cwat::rates({tp, tn, fp, fn}));
  }, py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));

  m.def("per_case_vote", [](const std::vector<std::tuple<std::string, int, int>>& rows) {
    std::vector<std::tuple<std::string, int, int>> out;
    for (const auto& p : cwat::per_case_vote(to_predictions(rows))) out.emplace_back(p.case_id, p.label, p.pred);
    return out;
  });

  m.def("band_power",
        [](const std::vector<double>& x, double rate, double lo, double hi) {
          return cwat::band_power(x, rate, lo, hi);
        });

  m.def("synth_segments",
        [](std::size_t n_cases, std::size_t segments_per_case, std::uint64_t seed, double segment_seconds) {
          cwat::SynthSpec spec;
          spec.n_cases = n_cases;
          spec.segments_per_case = segments_per_case;
          spec.seed = seed;
          spec.segment_seconds = segment_seconds;
          spec.burst_start_seconds = segment_seconds * 95.0 / 120.0;
          spec.burst_end_seconds = segment_seconds * 115.0 / 120.0;
          cwat::PreprocessConfig pp;
          pp.window_seconds = segment_seconds;
          py::list out;
          for (const auto& s : cwat::synth_segments(spec, pp)) {
            py::dict d;
            d["data"] = to_array(s.data);
            d["label"] = static_cast<int>(s.label);
            d["subject_id"] = s.subject_id;
            d["case_id"] = s.case_id;
            d["segment_index"] = s.segment_index;
            out.append(d);
          }
          return out;
        },
        py::arg("n_cases") = 4, py::arg("segments_per_case") = 1, py::arg("seed") = 7,
        py::arg("segment_seconds") = 120.0);

  m.def("synth_edf_bytes", [](std::size_t index, std::uint64_t seed, std::size_t segments_per_case) {
    cwat::SynthSpec spec;
    spec.n_cases = std::max<std::size_t>(index + 1, 2);
    spec.seed = seed;
    spec.segments_per_case = segments_per_case;
    const auto bytes = cwat::write_edf(cwat::to_edf(cwat::generate_case(spec, index)));
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }, py::arg("index") = 0, py::arg("seed") = 7, py::arg("segments_per_case") = 1);

  m.def("parse_edf", [](const py::bytes& raw) {
    const std::string s = raw;
    const auto f = cwat::parse_edf(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    py::dict d;
    d["patient_id"] = f.header.patient_id;
    d["recording_id"] = f.header.recording_id;
    d["n_records"] = f.header.n_records;
    d["record_duration"] = f.header.record_duration;
    py::list labels, rates;
    for (const auto& sh : f.signals) {
      labels.append(sh.label);
      rates.append(sh.sampling_rate(f.header.record_duration));
    }
    d["labels"] = labels;
    d["sampling_rates"] = rates;
    const auto rec = cwat::to_recording(f);
    py::list channels;
    for (const auto& ch : rec.channels) channels.append(py::array_t<double>(ch.samples.size(), ch.samples.data()));
    d["physical"] = channels;
    return d;
  });

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("config_text") = "",
           py::arg("seed") = 0)
      .def_static("load", &Model::load)
      .def("encode", &Model::encode)
      .def("reconstruct", &Model::reconstruct)
      .def("logits", &Model::logits)
      .def("parameter_count", &Model::parameter_count)
      .def("config_text", &Model::config_text)
      .def("save", &Model::save);
}
