// SPDX-License-Identifier: Apache-2.0

#include "metabf/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace metabf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(std::string_view key, std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config: '" + std::string(key) + "' expects a number, got '" +
                      std::string(text) + "'");
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
  text = trim(text);
  Int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config: '" + std::string(key) + "' expects an integer, got '" +
                      std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config: '" + std::string(key) + "' expects true/false");
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, double>) {
      out += format_real(items[i]);
    } else {
      out += std::string(to_string(items[i]));
    }
  }
  return out;
}

}  // namespace

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  for (auto item : split_list(text)) out.push_back(parse_real("list", item));
  return out;
}

void apply_config_value(std::string_view key, std::string_view value, ExperimentPlan& plan) {
  ScenarioConfig& sc = plan.scenario;
  MlgdConfig& m = plan.mlgd;
  value = trim(value);
  try {
    if (key == "name" || key == "scenario") {
      sc.name = std::string(value);
    } else if (key == "n_tx") {
      sc.n_tx = parse_int<int>(key, value);
    } else if (key == "n_rx") {
      sc.n_rx = parse_int<int>(key, value);
    } else if (key == "n_streams" || key == "d") {
      sc.n_streams = parse_int<int>(key, value);
    } else if (key == "n_users" || key == "k_users") {
      sc.n_users = parse_int<int>(key, value);
    } else if (key == "total_power") {
      sc.total_power = parse_real(key, value);
    } else if (key == "snr_db") {
      sc.snr_db = parse_real(key, value);
      plan.snr_list = {sc.snr_db};
    } else if (key == "user_weights") {
      sc.user_weights = parse_real_list(value);
    } else if (key == "master_seed" || key == "seed") {
      sc.master_seed = parse_int<std::uint64_t>(key, value);
    } else if (key == "total_iters") {
      m.total_iters = parse_int<int>(key, value);
    } else if (key == "window") {
      m.window = parse_int<int>(key, value);
    } else if (key == "meta_lr") {
      m.meta_lr = parse_real(key, value);
    } else if (key == "detach_inputs") {
      m.detach_inputs = parse_bool(key, value);
    } else if (key == "update_order") {
      m.update_order = parse_update_order(value);
    } else if (key == "report") {
      m.report = parse_report_mode(value);
    } else if (key == "activation") {
      m.activation = parse_activation(value);
    } else if (key == "snr_list") {
      plan.snr_list = parse_real_list(value);
    } else if (key == "algorithms") {
      plan.algorithms.clear();
      for (auto item : split_list(value)) plan.algorithms.push_back(parse_algorithm(item));
    } else if (key == "realizations" || key == "n_realizations") {
      plan.n_realizations = parse_int<int>(key, value);
    } else if (key == "restarts" || key == "n_restarts") {
      plan.n_restarts = parse_int<int>(key, value);
    } else if (key == "gd_lr") {
      plan.gd_lr = parse_real(key, value);
    } else if (key == "adam_lr") {
      plan.adam_lr = parse_real(key, value);
    } else if (key == "first_order_iters") {
      plan.first_order_iters = parse_int<int>(key, value);
    } else if (key == "wmmse_max_iters") {
      plan.wmmse_max_iters = parse_int<int>(key, value);
    } else if (key == "workers") {
      plan.workers = parse_int<int>(key, value);
    } else if (key == "out_dir" || key == "out") {
      plan.out_dir = std::string(value);
    } else {
      throw ConfigError("config: unknown key '" + std::string(key) + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void apply_config_text(std::string_view text, ExperimentPlan& plan) {
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_config_value(trim(line.substr(0, eq)), line.substr(eq + 1), plan);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentPlan plan;
  apply_config_text(buf.str(), plan);
  return plan;
}

std::string render_config(const ExperimentPlan& plan) {
  const ScenarioConfig& sc = plan.scenario;
  const MlgdConfig& m = plan.mlgd;
  std::ostringstream out;
  out << "name = " << sc.name << '\n'
      << "n_tx = " << sc.n_tx << '\n'
      << "n_rx = " << sc.n_rx << '\n'
      << "n_streams = " << sc.n_streams << '\n'
      << "n_users = " << sc.n_users << '\n'
      << "total_power = " << format_real(sc.total_power) << '\n'
      << "user_weights = " << join(sc.weights()) << '\n'
      << "master_seed = " << sc.master_seed << '\n'
      << "snr_list = " << join(plan.snr_list) << '\n'
      << "algorithms = " << join(plan.algorithms) << '\n'
      << "realizations = " << plan.n_realizations << '\n'
      << "restarts = " << plan.n_restarts << '\n'
      << "total_iters = " << m.total_iters << '\n'
      << "window = " << m.window << '\n'
      << "meta_lr = " << format_real(m.meta_lr) << '\n'
      << "detach_inputs = " << (m.detach_inputs ? "true" : "false") << '\n'
      << "update_order = " << to_string(m.update_order) << '\n'
      << "report = " << to_string(m.report) << '\n'
      << "activation = " << to_string(m.activation) << '\n'
      << "gd_lr = " << format_real(plan.gd_lr) << '\n'
      << "adam_lr = " << format_real(plan.adam_lr) << '\n'
      << "first_order_iters = " << plan.gradient_iters() << '\n'
      << "wmmse_max_iters = " << plan.wmmse_max_iters << '\n';
  return out.str();
}

}  // namespace metabf
