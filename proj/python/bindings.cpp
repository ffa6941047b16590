#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "courtformer/binning.hpp"
#include "courtformer/cli/app.hpp"
#include "courtformer/cli/run_config.hpp"
#include "courtformer/errors.hpp"
#include "courtformer/harness/metrics.hpp"
#include "courtformer/masking.hpp"
#include "courtformer/model/checkpoint.hpp"

namespace py = pybind11;
using namespace courtformer;

namespace {

model::ModelConfig preset(const std::string& name) {
  if (name == "desk") return model::ModelConfig::desk();
  if (name == "desk_grnn") return model::ModelConfig::desk_grnn();
  if (name == "tiny") return model::ModelConfig::tiny();
  if (name == "full_p") return model::ModelConfig::full_task_p();
  if (name == "full_b") return model::ModelConfig::full_task_b();
  throw ConfigError("unknown preset '" + name + "'; expected desk, desk_grnn, tiny, full_p or full_b");
}

Settings to_settings(const std::map<std::string, std::string>& values) {
  Settings s;
  for (const auto& [k, v] : values) s.set(k, v);
  return s;
}

py::dict metrics_dict(const harness::Metrics& m) {
  py::dict d;
  d["mean_nll"] = m.mean_nll;
  d["perplexity"] = m.perplexity;
  d["sequences"] = m.sequences;
  d["predictions"] = m.predictions;
  return d;
}

// A loaded checkpoint plus the data it is evaluated on.
class Checkpoint {
 public:
  explicit Checkpoint(const std::filesystem::path& path) : model_(model::load_checkpoint(path)) {}

  std::size_t parameters() const { return model_->count_parameters(); }
  std::map<std::string, std::string> config() const { return model_->config().to_settings().values(); }

  py::dict evaluate(const std::map<std::string, std::string>& settings, const std::string& split) const {
    auto config = cli::RunConfig::resolve(to_settings(settings));
    config.model = model_->config();
    const auto data = cli::prepare_data(config);
    if (split != "val" && split != "test") throw UsageError("split must be val or test");
    const auto& set = split == "val" ? data.validation : data.test;
    harness::Metrics m;
    {
      py::gil_scoped_release release;
      m = harness::evaluate(*model_, std::span<const data::PlaySequence>(set), model_->config().task);
    }
    return metrics_dict(m);
  }

 private:
  std::unique_ptr<model::SequenceModel<float>> model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Entity transformer for multi-agent trajectory modeling";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("player_bin", [](double dx, double dy) { return BinGrid2D::players().bin(dx, dy); }, py::arg("dx"),
        py::arg("dy"));
  m.def("player_bin_center", [](int label) { return BinGrid2D::players().center(label); }, py::arg("label"));
  m.def("ball_bin", [](double dx, double dy, double dz) { return BinGrid3D::ball().bin(dx, dy, dz); },
        py::arg("dx"), py::arg("dy"), py::arg("dz"));
  m.def("ball_bin_center", [](int label) { return BinGrid3D::ball().center(label); }, py::arg("label"));

  m.def(
      "causal_mask",
      [](std::size_t steps, std::size_t entities) {
        const auto mask = build_causal_entity_mask(steps, entities);
        std::vector<std::vector<bool>> rows(mask.side(), std::vector<bool>(mask.side()));
        for (std::size_t t1 = 0; t1 < steps; ++t1)
          for (std::size_t k1 = 0; k1 < entities; ++k1)
            for (std::size_t t2 = 0; t2 < steps; ++t2)
              for (std::size_t k2 = 0; k2 < entities; ++k2)
                rows[index_of(t1, k1, entities)][index_of(t2, k2, entities)] = mask.allowed(t1, k1, t2, k2);
        return rows;
      },
      py::arg("steps"), py::arg("entities"), "Rows and columns in t * K + k order.");

  m.def(
      "parameter_count",
      [](const std::string& name, const std::map<std::string, std::string>& overrides) {
        const auto config = model::ModelConfig::from_settings(to_settings(overrides), preset(name));
        return model::make_model<float>(config)->count_parameters();
      },
      py::arg("preset"), py::arg("overrides") = std::map<std::string, std::string>{});
  m.def(
      "model_config", [](const std::string& name) { return preset(name).to_settings().values(); }, py::arg("preset"));

  m.def(
      "run",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv{"courtformer"};
        argv.insert(argv.end(), args.begin(), args.end());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(argv, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one command-line invocation; returns (exit_code, stdout, stderr).");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def(py::init<std::filesystem::path>(), py::arg("path"))
      .def_property_readonly("parameters", &Checkpoint::parameters)
      .def_property_readonly("config", &Checkpoint::config)
      .def("evaluate", &Checkpoint::evaluate, py::arg("settings"), py::arg("split") = "test");
}
