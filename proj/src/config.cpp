#include "dhrl/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dhrl {

using nlohmann::json;

void TrainConfig::validate(int horizon) const {
  if (lambda < 0.0 || lambda > 1.0)
    throw ConfigError("train.lambda", "train.lambda must lie in [0, 1]");
  if (questions < 1) throw ConfigError("train.questions", "train.questions must be >= 1");
  if (iterations < 1) throw ConfigError("train.iterations", "train.iterations must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size", "train.batch_size must be >= 1");
  if (lr_policy <= 0.0 || lr_critic <= 0.0)
    throw ConfigError("train.lr_policy", "learning rates must be positive");
  if (critic_warmup < 0 || policy_update_delay < 0)
    throw ConfigError("train.critic_warmup", "warmup/delay must be nonnegative");
  if (entropy_bonus < 0.0)
    throw ConfigError("train.entropy_bonus", "train.entropy_bonus must be nonnegative");
  if (fixed_split_t != 0 && (fixed_split_t < 1 || fixed_split_t >= horizon))
    throw ConfigError("train.history_split", "fixed split time must satisfy 1 <= t < H");
  if (checkpoint_every < 1)
    throw ConfigError("train.checkpoint_every", "train.checkpoint_every must be >= 1");
}

void ReprConfig::validate() const {
  if (length < 1 || codebook < 1)
    throw ConfigError("repr.L", "representation dimensions must be positive");
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double as_double(const std::string& key, const std::string& raw) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "config key '" + key + "' expects a number, got '" + raw + "'");
  }
}

long long as_int(const std::string& key, const std::string& raw) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "config key '" + key + "' expects an integer, got '" + raw + "'");
  }
}

json as_json(const std::string& key, const std::string& raw) {
  json parsed = json::parse(raw, nullptr, false);
  if (parsed.is_discarded())
    throw ConfigError(key, "config key '" + key + "' expects a JSON value, got '" + raw + "'");
  return parsed;
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "config line " + std::to_string(line_no) +
                                " is not of the form key = value: '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("", "config line " + std::to_string(line_no) + " has an empty key");
    if (!entries.emplace(key, value).second)
      throw ConfigError(key, "duplicate config key '" + key + "'");
  }
  return entries;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_kv_text(buf.str());
}

FullConfig FullConfig::from_string(const std::string& text) {
  return from_entries(parse_kv_text(text));
}

FullConfig FullConfig::from_file(const std::string& path) {
  return from_entries(parse_kv_file(path));
}

FullConfig FullConfig::from_entries(const std::map<std::string, std::string>& entries) {
  FullConfig cfg;
  json custom_tables = json::object();
  for (const auto& [key, raw] : entries) {
    if (key == "env.kind") {
      if (raw != "signal" && raw != "recsim" && raw != "custom")
        throw ConfigError(key, "env.kind must be one of signal, recsim, custom");
      cfg.env_kind = raw;
    } else if (key == "env.horizon") {
      cfg.horizon = static_cast<int>(as_int(key, raw));
    } else if (key == "env.probe_accuracy") {
      cfg.probe_accuracy = as_double(key, raw);
    } else if (key == "env.probe_reward") {
      cfg.probe_reward = as_double(key, raw);
    } else if (key == "env.user_types") {
      cfg.user_types = static_cast<int>(as_int(key, raw));
    } else if (key == "env.items") {
      cfg.items = static_cast<int>(as_int(key, raw));
    } else if (key == "env.holdout_fraction") {
      cfg.holdout_fraction = as_double(key, raw);
    } else if (key == "env.rating_noise") {
      cfg.rating_noise = as_double(key, raw);
    } else if (key == "env.table_seed") {
      cfg.table_seed = static_cast<std::uint64_t>(as_int(key, raw));
    } else if (key == "env.rating_levels_table") {
      const json table = as_json(key, raw);
      if (!table.is_array() || table.empty() || !table[0].is_array())
        throw ConfigError(key, "env.rating_levels_table expects a nested array");
      Eigen::MatrixXd m(table.size(), table[0].size());
      for (std::size_t u = 0; u < table.size(); ++u) {
        if (table[u].size() != table[0].size())
          throw ConfigError(key, "env.rating_levels_table rows have unequal lengths");
        for (std::size_t i = 0; i < table[u].size(); ++i)
          m(static_cast<int>(u), static_cast<int>(i)) = table[u][i].get<double>();
      }
      cfg.rating_levels_table = m;
    } else if (key == "env.initial_dist" || key == "env.transition" || key == "env.emission" ||
               key == "env.reward" || key == "env.holdout_items") {
      custom_tables[key.substr(4)] = as_json(key, raw);
    } else if (key == "train.lambda") {
      cfg.train.lambda = as_double(key, raw);
    } else if (key == "train.questions") {
      cfg.train.questions = static_cast<int>(as_int(key, raw));
    } else if (key == "train.iterations") {
      cfg.train.iterations = static_cast<int>(as_int(key, raw));
    } else if (key == "train.batch_size") {
      cfg.train.batch_size = static_cast<int>(as_int(key, raw));
    } else if (key == "train.lr_policy") {
      cfg.train.lr_policy = as_double(key, raw);
    } else if (key == "train.lr_critic") {
      cfg.train.lr_critic = as_double(key, raw);
    } else if (key == "train.baseline") {
      if (raw == "batch-mean")
        cfg.train.batch_mean_baseline = true;
      else if (raw == "none")
        cfg.train.batch_mean_baseline = false;
      else
        throw ConfigError(key, "train.baseline must be batch-mean or none");
    } else if (key == "train.critic_warmup") {
      cfg.train.critic_warmup = static_cast<int>(as_int(key, raw));
    } else if (key == "train.policy_update_delay") {
      cfg.train.policy_update_delay = static_cast<int>(as_int(key, raw));
    } else if (key == "train.entropy_bonus") {
      cfg.train.entropy_bonus = as_double(key, raw);
    } else if (key == "train.history_split") {
      if (raw == "all-t") {
        cfg.train.fixed_split_t = 0;
      } else if (raw.rfind("fixed-t:", 0) == 0) {
        cfg.train.fixed_split_t = static_cast<int>(as_int(key, raw.substr(8)));
      } else {
        throw ConfigError(key, "train.history_split must be all-t or fixed-t:<t>");
      }
    } else if (key == "train.checkpoint_every") {
      cfg.train.checkpoint_every = static_cast<int>(as_int(key, raw));
    } else if (key == "train.tie_rule") {
      cfg.train.tie_rule = parse_tie_rule(raw);
    } else if (key == "train.qa_kind") {
      cfg.train.qa_kind = parse_qa_kind(raw);
    } else if (key == "repr.L") {
      cfg.repr.length = static_cast<int>(as_int(key, raw));
    } else if (key == "repr.C") {
      cfg.repr.codebook = static_cast<int>(as_int(key, raw));
    } else if (key == "divergence") {
      cfg.divergence = parse_divergence(raw);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(as_int(key, raw));
    } else if (key == "eval.episodes") {
      cfg.eval_episodes = static_cast<int>(as_int(key, raw));
    } else {
      throw ConfigError(key, "unknown config key '" + key + "'");
    }
  }
  if (!custom_tables.empty()) {
    if (cfg.env_kind != "custom")
      throw ConfigError("env.kind", "explicit env tables require env.kind = custom");
    cfg.custom_tables_json = custom_tables.dump();
  }
  if (cfg.env_kind == "custom" && cfg.custom_tables_json.empty())
    throw ConfigError("env.kind", "env.kind = custom requires explicit tables");
  if (cfg.horizon < 2) throw ConfigError("env.horizon", "env.horizon must be >= 2");
  if (cfg.eval_episodes < 1)
    throw ConfigError("eval.episodes", "eval.episodes must be >= 1");
  cfg.train.validate(cfg.horizon);
  cfg.repr.validate();
  return cfg;
}

EnvSpec FullConfig::build_env() const {
  if (env_kind == "signal") return make_signal_env(horizon, probe_accuracy, probe_reward);
  if (env_kind == "recsim") {
    const Eigen::MatrixXd* table =
        rating_levels_table.has_value() ? &*rating_levels_table : nullptr;
    return make_recsim_env(horizon, user_types, items, holdout_fraction, rating_noise,
                           table_seed, table);
  }
  const json tables = json::parse(custom_tables_json);
  for (const char* need : {"initial_dist", "transition", "emission", "reward"})
    if (!tables.contains(need))
      throw ConfigError(std::string("env.") + need,
                        std::string("custom env is missing env.") + need);
  EnvSpec env;
  env.kind = EnvKind::Custom;
  env.horizon = horizon;
  const auto& init = tables["initial_dist"];
  env.num_states = static_cast<int>(init.size());
  env.initial_dist = Eigen::VectorXd(env.num_states);
  for (int s = 0; s < env.num_states; ++s) env.initial_dist[s] = init[s].get<double>();
  const auto& trans = tables["transition"];
  const auto& emit = tables["emission"];
  const auto& rew = tables["reward"];
  if (static_cast<int>(trans.size()) != env.num_states ||
      static_cast<int>(emit.size()) != env.num_states ||
      static_cast<int>(rew.size()) != env.num_states)
    throw ConfigError("env.transition", "custom table outer dimension mismatch");
  env.num_actions = static_cast<int>(trans[0].size());
  env.num_observations = static_cast<int>(emit[0][0].size());
  auto load_rows = [&](const json& spec_rows, int inner,
                       std::vector<std::vector<Eigen::VectorXd>>& out, const char* what) {
    out.assign(env.num_states, std::vector<Eigen::VectorXd>(env.num_actions));
    for (int s = 0; s < env.num_states; ++s) {
      if (static_cast<int>(spec_rows[s].size()) != env.num_actions)
        throw ConfigError(what, std::string(what) + ": action dimension mismatch");
      for (int a = 0; a < env.num_actions; ++a) {
        const auto& row = spec_rows[s][a];
        if (static_cast<int>(row.size()) != inner)
          throw ConfigError(what, std::string(what) + ": row length mismatch");
        Eigen::VectorXd v(inner);
        for (int i = 0; i < inner; ++i) v[i] = row[i].get<double>();
        out[s][a] = std::move(v);
      }
    }
  };
  load_rows(trans, env.num_states, env.transition, "env.transition");
  load_rows(emit, env.num_observations, env.emission, "env.emission");
  load_rows(rew, env.num_observations, env.reward, "env.reward");
  if (tables.contains("holdout_items"))
    for (const auto& item : tables["holdout_items"])
      env.holdout_items.push_back(item.get<int>());
  env.validate();
  return env;
}

std::string FullConfig::canonical_text() const {
  std::ostringstream out;
  auto put = [&out](const std::string& key, const std::string& value) {
    out << key << " = " << value << "\n";
  };
  put("divergence", divergence_name(divergence));
  put("env.kind", env_kind);
  put("env.horizon", std::to_string(horizon));
  if (env_kind == "signal") {
    put("env.probe_accuracy", format_double(probe_accuracy));
    put("env.probe_reward", format_double(probe_reward));
  } else if (env_kind == "recsim") {
    put("env.user_types", std::to_string(user_types));
    put("env.items", std::to_string(items));
    put("env.holdout_fraction", format_double(holdout_fraction));
    put("env.rating_noise", format_double(rating_noise));
    put("env.table_seed", std::to_string(table_seed));
    if (rating_levels_table.has_value()) {
      json rows = json::array();
      for (int u = 0; u < rating_levels_table->rows(); ++u) {
        json row = json::array();
        for (int m = 0; m < rating_levels_table->cols(); ++m)
          row.push_back((*rating_levels_table)(u, m));
        rows.push_back(row);
      }
      put("env.rating_levels_table", rows.dump());
    }
  } else {
    const json tables = json::parse(custom_tables_json);
    for (const auto& [name, value] : tables.items()) put("env." + name, value.dump());
  }
  put("eval.episodes", std::to_string(eval_episodes));
  put("repr.C", std::to_string(repr.codebook));
  put("repr.L", std::to_string(repr.length));
  put("seed", std::to_string(seed));
  put("train.baseline", train.batch_mean_baseline ? "batch-mean" : "none");
  put("train.batch_size", std::to_string(train.batch_size));
  put("train.checkpoint_every", std::to_string(train.checkpoint_every));
  put("train.critic_warmup", std::to_string(train.critic_warmup));
  put("train.entropy_bonus", format_double(train.entropy_bonus));
  put("train.history_split", train.fixed_split_t == 0
                                 ? std::string("all-t")
                                 : "fixed-t:" + std::to_string(train.fixed_split_t));
  put("train.iterations", std::to_string(train.iterations));
  put("train.lambda", format_double(train.lambda));
  put("train.lr_critic", format_double(train.lr_critic));
  put("train.lr_policy", format_double(train.lr_policy));
  put("train.policy_update_delay", std::to_string(train.policy_update_delay));
  put("train.qa_kind", qa_kind_name(train.qa_kind));
  put("train.questions", std::to_string(train.questions));
  put("train.tie_rule", tie_rule_name(train.tie_rule));
  return out.str();
}

std::uint64_t FullConfig::hash() const { return fnv1a64(canonical_text()); }

}  // namespace dhrl
