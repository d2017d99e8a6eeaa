#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mdgan/data.hpp"
#include "mdgan/error.hpp"
#include "mdgan/eval.hpp"
#include "mdgan/experiment/config.hpp"
#include "mdgan/experiment/report.hpp"
#include "mdgan/experiment/runner.hpp"
#include "mdgan/models.hpp"
#include "mdgan/nn/loss.hpp"
#include "mdgan/nn/serialize.hpp"
#include "mdgan/rng.hpp"
#include "mdgan/training.hpp"

namespace py = pybind11;
using namespace mdgan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    return Matrix(1, static_cast<std::size_t>(a.shape(0)), std::vector<double>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 2) throw ConfigError("expected a 1-D or 2-D array");
  return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

nn::Mode parse_mode(const std::string& name) {
  if (name == "train") return nn::Mode::train;
  if (name == "frozen") return nn::Mode::frozen;
  if (name == "eval") return nn::Mode::eval;
  throw ConfigError("mode must be 'train', 'frozen' or 'eval'");
}

py::dict record_to_dict(const training::LossRecord& r) {
  py::dict d;
  d["epoch"] = r.epoch;
  auto put = [&d](const char* key, const std::optional<double>& v) {
    if (v) d[key] = *v;
  };
  put("d1_real", r.d1_real);
  put("d1_generated", r.d1_generated);
  put("g_d1", r.g_d1);
  put("d2_real", r.d2_real);
  put("d2_generated", r.d2_generated);
  put("g_d2", r.g_d2);
  d["validation_score"] = r.validation_score;
  return d;
}

py::dict metrics_to_dict(const eval::MetricsRecord& r) {
  py::dict d;
  d["dataset"] = r.dataset;
  d["config"] = r.config;
  d["seed"] = r.seed;
  d["auc_roc"] = r.auc_roc;
  d["auc_pr"] = r.auc_pr;
  d["eer"] = r.eer;
  return d;
}

eval::ScoredTestSet scored(const std::vector<double>& scores, const std::vector<int>& labels) {
  return {scores, labels};
}

data::DatasetSplit make_split(const data::RawDataset& raw, std::uint64_t seed, std::optional<std::size_t> train_size,
                              double validation_fraction, bool use_predefined, bool normalize) {
  data::PartitionPlan plan;
  plan.train_size = train_size;
  plan.validation_fraction = validation_fraction;
  plan.use_predefined = use_predefined;
  auto split = data::partition(raw, plan, seed);
  return normalize ? data::fit_and_apply_normalization(std::move(split)) : split;
}

}  // namespace

PYBIND11_MODULE(_mdgan, m) {
  m.doc() = "Multi-discriminator GAN anomaly detection (C++ core).";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

  // networks

  py::class_<nn::LayerStack>(m, "LayerStack")
      .def("forward", [](nn::LayerStack& s, const Array& x, const std::string& mode) {
            return to_array(s.forward(to_matrix(x), parse_mode(mode)));
          }, py::arg("x"), py::arg("mode") = "eval")
      .def("backward", [](nn::LayerStack& s, const Array& g) { return to_array(s.backward(to_matrix(g))); })
      .def_property_readonly("input_dim", &nn::LayerStack::input_dim)
      .def_property_readonly("output_dim", &nn::LayerStack::output_dim)
      .def_property_readonly("widths", &nn::LayerStack::widths)
      .def_property_readonly("parameter_count", &nn::LayerStack::parameter_count)
      .def("tensors", [](const nn::LayerStack& s) {
            py::dict d;
            for (const auto& t : s.tensors()) d[py::str(t.name)] = to_array(*t.value);
            return d;
          }, "Parameters and batch-norm running statistics by name (copies).")
      .def("save", [](const nn::LayerStack& s) { return nn::save_parameters(s); })
      .def("load", [](nn::LayerStack& s, const std::string& text) { nn::load_parameters(s, text); })
      .def("__copy__", [](const nn::LayerStack& s) { return nn::LayerStack(s); })
      .def("__deepcopy__", [](const nn::LayerStack& s, py::dict) { return nn::LayerStack(s); });

  m.def("derive_seed", [](std::uint64_t parent, const std::string& label) { return derive_seed(parent, label); },
        py::arg("parent"), py::arg("label"), "Child seed of `parent` for the stream named `label`.");
  m.def("d2_widths", &models::d2_widths, py::arg("input_dim"));
  m.def("build_d2", &models::build_d2, py::arg("input_dim"), py::arg("seed"));
  m.def("build_generator", [](std::size_t feature_dim, std::uint64_t seed, bool batch_norm) {
          auto spec = models::GeneratorSpec::defaults_for(feature_dim);
          spec.batch_norm = batch_norm;
          return models::build_generator(spec, seed);
        }, py::arg("feature_dim"), py::arg("seed"), py::arg("batch_norm") = true);
  m.def("build_d1", [](std::size_t feature_dim, std::uint64_t seed) {
          return models::build_d1(models::D1Spec::defaults_for(feature_dim), seed);
        }, py::arg("feature_dim"), py::arg("seed"));

  m.def("bce_loss", [](const Array& p, const Array& t) {
          auto r = nn::bce_loss(to_matrix(p), to_matrix(t));
          return py::make_tuple(r.value, to_array(r.grad));
        }, py::arg("predictions"), py::arg("targets"), "Returns (loss, gradient w.r.t. predictions).");
  m.def("mse_loss", [](const Array& x, const Array& x_prime) {
          auto r = nn::mse_loss(to_matrix(x), to_matrix(x_prime));
          return py::make_tuple(r.value, to_array(r.grad));
        }, py::arg("x"), py::arg("x_prime"), "Returns (loss, gradient w.r.t. x_prime).");

  // data

  py::class_<data::RawDataset>(m, "RawDataset")
      .def_property_readonly("features", [](const data::RawDataset& d) { return to_array(data::feature_matrix(d)); })
      .def_readonly("labels", &data::RawDataset::labels)
      .def_readonly("rejected_rows", &data::RawDataset::rejected_rows)
      .def_property_readonly("feature_names", &data::RawDataset::feature_names)
      .def("__len__", &data::RawDataset::rows);

  m.def("make_synthetic", [](const std::string& kind, std::size_t n_normal, std::size_t n_anomaly, std::size_t dim,
                             double separation, std::uint64_t seed) {
          return data::make_synthetic({data::parse_synthetic_kind(kind), n_normal, n_anomaly, dim, separation, seed});
        }, py::arg("kind") = "blob", py::arg("n_normal") = 1000, py::arg("n_anomaly") = 100, py::arg("dim") = 8,
        py::arg("separation") = 4.0, py::arg("seed") = 0);
  m.def("load_csv", [](const std::filesystem::path& path, const std::string& label_column,
                       std::optional<std::string> positive_label, std::optional<std::string> partition_column,
                       std::vector<std::string> categorical_columns, std::vector<std::string> ignore_columns,
                       std::size_t max_categorical_values) {
          data::CsvSchema schema{label_column, std::move(positive_label), std::move(partition_column),
                                 std::move(categorical_columns), std::move(ignore_columns)};
          return data::drop_wide_categoricals(data::load_csv(path, schema), max_categorical_values);
        }, py::arg("path"), py::arg("label_column"), py::arg("positive_label") = py::none(),
        py::arg("partition_column") = py::none(), py::arg("categorical_columns") = std::vector<std::string>{},
        py::arg("ignore_columns") = std::vector<std::string>{}, py::arg("max_categorical_values") = 3);

  py::class_<data::DatasetSplit>(m, "DatasetSplit")
      .def_property_readonly("train", [](const data::DatasetSplit& s) { return to_array(s.train); })
      .def_property_readonly("validation", [](const data::DatasetSplit& s) { return to_array(s.validation); })
      .def_property_readonly("test", [](const data::DatasetSplit& s) { return to_array(s.test); })
      .def_readonly("test_labels", &data::DatasetSplit::test_labels)
      .def_readonly("feature_names", &data::DatasetSplit::feature_names)
      .def_property_readonly("feature_dim", &data::DatasetSplit::feature_dim);

  m.def("partition", &make_split, py::arg("data"), py::arg("seed"), py::arg("train_size") = py::none(),
        py::arg("validation_fraction") = 0.1, py::arg("use_predefined") = false, py::arg("normalize") = true,
        "Splits into normal-only train/validation and a mixed test set, min-max scaled to [-1, 1].");

  // training

  py::class_<training::TrainConfig>(m, "TrainConfig")
      .def(py::init([](std::size_t epochs, std::size_t batch_size, std::size_t warm_up, std::uint64_t seed,
                       const std::string& g_loss_mode, const std::string& warm_up_unit) {
             training::TrainConfig c;
             c.epochs = epochs;
             c.batch_size = batch_size;
             c.warm_up = warm_up;
             c.seed = seed;
             c.g_loss_mode = training::parse_g_loss_mode(g_loss_mode);
             c.warm_up_unit = training::parse_warm_up_unit(warm_up_unit);
             c.validate();
             return c;
           }), py::arg("epochs") = 30, py::arg("batch_size") = 64, py::arg("warm_up") = 0, py::arg("seed") = 0,
           py::arg("g_loss_mode") = "non_saturating", py::arg("warm_up_unit") = "epochs")
      .def_readwrite("epochs", &training::TrainConfig::epochs)
      .def_readwrite("batch_size", &training::TrainConfig::batch_size)
      .def_readwrite("warm_up", &training::TrainConfig::warm_up)
      .def_readwrite("seed", &training::TrainConfig::seed);

  py::class_<training::TrainResult>(m, "TrainResult")
      .def_readonly("model", &training::TrainResult::best_model)
      .def_property_readonly("checkpoint_epoch", [](const training::TrainResult& r) { return r.checkpoint.epoch; })
      .def_property_readonly("validation_score",
                             [](const training::TrainResult& r) { return r.checkpoint.validation_score; })
      .def_property_readonly("trace", [](const training::TrainResult& r) {
        py::list out;
        for (const auto& rec : r.trace) out.append(record_to_dict(rec));
        return out;
      })
      .def_property_readonly("trace_csv", [](const training::TrainResult& r) { return training::trace_to_csv(r.trace); });

  m.def("train_mdgan", [](const data::DatasetSplit& d, const training::TrainConfig& c) {
          py::gil_scoped_release release;
          return training::train_mdgan(d, c);
        }, py::arg("data"), py::arg("config"));
  m.def("train_baseline", [](const data::DatasetSplit& d, const training::TrainConfig& c) {
          py::gil_scoped_release release;
          return training::train_baseline(d, c);
        }, py::arg("data"), py::arg("config"));

  // evaluation

  m.def("rmse_scores", [](nn::LayerStack& model, const Array& x) { return eval::rmse_scores(model, to_matrix(x)); },
        py::arg("model"), py::arg("samples"));
  m.def("auc_roc", [](const std::vector<double>& s, const std::vector<int>& l) { return eval::auc_roc(scored(s, l)); },
        py::arg("scores"), py::arg("labels"));
  m.def("auc_pr", [](const std::vector<double>& s, const std::vector<int>& l) { return eval::auc_pr(scored(s, l)); },
        py::arg("scores"), py::arg("labels"));
  m.def("eer", [](const std::vector<double>& s, const std::vector<int>& l) {
          const auto r = eval::eer_detail(scored(s, l));
          return py::make_tuple(r.rate, r.threshold);
        }, py::arg("scores"), py::arg("labels"), "Returns (equal error rate, threshold).");
  m.def("compute_metrics", [](const std::vector<double>& s, const std::vector<int>& l) {
          return metrics_to_dict(eval::compute_metrics(scored(s, l)));
        }, py::arg("scores"), py::arg("labels"));
  m.def("t_critical_95", [](std::size_t df, bool two_tailed) {
          return eval::t_critical_95(df, two_tailed ? eval::Tails::two : eval::Tails::one);
        }, py::arg("df"), py::arg("two_tailed") = true);
  m.def("paired_t_test", [](const std::vector<double>& a, const std::vector<double>& b, bool two_tailed) {
          const auto r = eval::paired_t_test(a, b, two_tailed ? eval::Tails::two : eval::Tails::one);
          py::dict d;
          d["mean_difference"] = r.mean_difference;
          d["t"] = r.t_statistic;
          d["df"] = r.degrees_of_freedom;
          d["significant"] = r.significant_at_95;
          return d;
        }, py::arg("a"), py::arg("b"), py::arg("two_tailed") = true);

  // experiments

  m.def("run_experiment", [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> output_dir,
                             std::optional<std::size_t> jobs) {
          auto cfg = experiment::load_config(config_path);
          if (output_dir) cfg.run.output_dir = *output_dir;
          if (jobs) cfg.run.parallelism = *jobs;
          experiment::RunManifest manifest;
          {
            py::gil_scoped_release release;
            manifest = experiment::run_experiment(cfg);
          }
          py::list runs;
          for (const auto& r : manifest.runs) {
            py::dict d;
            d["dataset"] = r.dataset;
            d["config"] = r.config;
            d["seed"] = r.seed;
            d["status"] = experiment::to_string(r.status);
            d["message"] = r.message;
            if (r.metrics) d["metrics"] = metrics_to_dict(*r.metrics);
            runs.append(d);
          }
          py::dict out;
          out["output_dir"] = manifest.output_dir;
          out["all_ok"] = manifest.all_ok();
          out["runs"] = runs;
          return out;
        }, py::arg("config_path"), py::arg("output_dir") = py::none(), py::arg("jobs") = py::none(),
        "Runs an experiment YAML file and returns a summary of every run.");
  m.def("report_from_manifest", &experiment::report_from_manifest, py::arg("manifest_path"));
}
