#include "sqlforge/config.hpp"

#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sqlforge/error.hpp"
#include "sqlforge/parallel.hpp"

namespace sqlforge {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string> kLogLevels = {"trace", "debug", "info", "warn", "error", "critical", "off"};

template <typename T>
T get_value(const pt::ptree& node, const std::string& where) {
  try {
    return node.get_value<T>();
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError(where + ": cannot parse \"" + node.data() + "\"");
  }
}

std::size_t get_count(const pt::ptree& node, const std::string& where) {
  const auto v = get_value<long long>(node, where);
  if (v < 0) throw ConfigError(where + ": must not be negative");
  return static_cast<std::size_t>(v);
}

void read_endpoint(const pt::ptree& section, const std::string& name, std::string& endpoint, EndpointConfig& config) {
  for (const auto& [key, node] : section) {
    const std::string where = name + "." + key;
    if (key == "endpoint") {
      endpoint = node.data();
    } else if (key == "model") {
      config.model = node.data();
    } else if (key == "api_key_env") {
      config.api_key_env = node.data();
    } else if (key == "max_retries") {
      config.max_retries = get_count(node, where);
    } else if (key == "max_in_flight") {
      config.max_in_flight = get_count(node, where);
    } else if (key == "timeout_secs") {
      config.timeout = std::chrono::seconds(get_count(node, where));
    } else {
      throw ConfigError("unknown config key " + where);
    }
  }
}

}  // namespace

ToolConfig default_config() {
  ToolConfig c;
  c.jobs = default_jobs();
  return c;
}

void check_config(const ToolConfig& c) {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
  };
  require(c.exec_timeout_secs >= 1 && c.exec_timeout_secs <= 86400, "exec_timeout_secs must be in [1, 86400]");
  require(c.n_candidates >= 1 && c.n_candidates <= 1024, "n_candidates must be in [1, 1024]");
  require(c.temperature >= 0.0 && c.temperature <= 2.0, "temperature must be in [0, 2]");
  require(c.max_iters >= 1 && c.max_iters <= 100, "max_iters must be in [1, 100]");
  require(c.jobs >= 1 && c.jobs <= 256, "jobs must be in [1, 256]");
  require(c.inner_db.p_table >= 0.0 && c.inner_db.p_table <= 1.0, "p_table must be in [0, 1]");
  require(c.inner_db.p_col >= 0.0 && c.inner_db.p_col <= 1.0, "p_col must be in [0, 1]");
  require(kLogLevels.contains(c.log_level), "log_level must be one of trace, debug, info, warn, error, critical, off");
  for (const auto* e : {&c.generator, &c.debugger}) {
    require(e->max_in_flight >= 1 && e->max_in_flight <= 1024, "max_in_flight must be in [1, 1024]");
    require(e->max_retries <= 20, "max_retries must be at most 20");
    require(e->timeout.count() >= 1, "timeout_secs must be positive");
    require(!e->api_key_env.empty(), "api_key_env must not be empty");
  }
}

ToolConfig load_config(const std::filesystem::path& path, ToolConfig base) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }

  static const std::set<std::string> sections = {"general", "augment", "mine", "refine", "generator", "debugger"};
  ToolConfig c = std::move(base);
  for (const auto& [section, body] : tree) {
    if (!sections.contains(section)) {
      throw ConfigError(body.empty() ? "key outside a section: " + section : "unknown config section [" + section + "]");
    }
    if (section == "generator") {
      read_endpoint(body, section, c.generator_endpoint, c.generator);
      continue;
    }
    if (section == "debugger") {
      read_endpoint(body, section, c.debugger_endpoint, c.debugger);
      continue;
    }
    for (const auto& [key, node] : body) {
      const std::string where = section + "." + key;
      if (section == "general") {
        if (key == "corpus_root") c.corpus_root = node.data();
        else if (key == "variant_root") c.variant_root = node.data();
        else if (key == "exec_timeout_secs") c.exec_timeout_secs = get_value<std::int64_t>(node, where);
        else if (key == "jobs") c.jobs = get_count(node, where);
        else if (key == "seed") c.seed = get_value<std::uint64_t>(node, where);
        else if (key == "log_level") c.log_level = node.data();
        else throw ConfigError("unknown config key " + where);
      } else if (section == "augment") {
        if (key == "p_table") c.inner_db.p_table = get_value<double>(node, where);
        else if (key == "p_col") c.inner_db.p_col = get_value<double>(node, where);
        else throw ConfigError("unknown config key " + where);
      } else if (section == "mine") {
        if (key == "n_candidates") c.n_candidates = get_count(node, where);
        else if (key == "temperature") c.temperature = get_value<double>(node, where);
        else throw ConfigError("unknown config key " + where);
      } else {
        if (key == "max_iters") c.max_iters = get_count(node, where);
        else throw ConfigError("unknown config key " + where);
      }
    }
  }
  check_config(c);
  return c;
}

}  // namespace sqlforge
