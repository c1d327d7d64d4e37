#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "sqlforge/cli.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/executor.hpp"
#include "sqlforge/metrics.hpp"
#include "sqlforge/schema_catalog.hpp"
#include "sqlforge/sql_analysis.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace sqlforge;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json references_json(const SqlReferences& refs) {
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& c : refs.columns) columns.push_back({c.table, c.column});
  return {{"tables", std::vector<std::string>(refs.tables.begin(), refs.tables.end())},
          {"columns", columns},
          {"has_order_by", refs.has_order_by}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of sqlforge";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::exception<Error>(m, "Error")); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& type = error_type.get_stored();
      py::object instance = type(e.kind(), e.what());
      PyErr_SetObject(type.ptr(), instance.ptr());
    }
  });

  m.def(
      "introspect_database",
      [](const fs::path& path, std::string db_id, std::size_t sample_values) {
        return to_python(introspect_database(path, std::move(db_id), sample_values));
      },
      py::arg("path"), py::arg("db_id"), py::arg("sample_values") = 0);

  m.def(
      "render_prompt",
      [](const fs::path& path, const std::string& question) {
        const auto db = introspect_database(path, path.stem().string());
        return render_prompt(db.tables, question);
      },
      py::arg("db_path"), py::arg("question"));

  m.def(
      "extract_references",
      [](const std::string& sql, std::optional<fs::path> db_path) {
        if (!db_path) return to_python(references_json(extract_references(sql)));
        const auto db = introspect_database(*db_path, db_path->stem().string());
        return to_python(references_json(extract_references(sql, db)));
      },
      py::arg("sql"), py::arg("db_path") = py::none());

  m.def(
      "validate",
      [](const std::string& sql, const fs::path& db_path) {
        const auto report = validate(sql, introspect_database(db_path, db_path.stem().string()));
        return py::make_tuple(std::string(to_string(report.status)), report.detail);
      },
      py::arg("sql"), py::arg("db_path"));

  m.def(
      "execute",
      [](const fs::path& db_path, const std::string& sql, double timeout_secs) {
        ExecutionOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = execute(db_path, sql, std::chrono::duration<double>(timeout_secs));
        }
        return to_python(outcome);
      },
      py::arg("db_path"), py::arg("sql"), py::arg("timeout_secs") = 30.0);

  m.def(
      "execution_match",
      [](const fs::path& db_path, const std::string& pred, const std::string& gold) {
        py::gil_scoped_release release;
        return results_match(execute(db_path, pred), execute(db_path, gold), match_options_for(gold));
      },
      py::arg("db_path"), py::arg("pred_sql"), py::arg("gold_sql"));

  m.def(
      "run_cli",
      [](std::vector<std::string> argv) {
        argv.insert(argv.begin(), "sqlforge");
        std::ostringstream out;
        std::ostringstream err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(argv, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("argv"));
}
