#include "dymecu/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

namespace dymecu {

std::string to_string(EnvKind k) { return k == EnvKind::grid ? "grid" : "chain"; }

std::string to_string(ModuleKind k) {
    switch (k) {
        case ModuleKind::dymecu: return "dymecu";
        case ModuleKind::dymecu_one_learner: return "dymecu_one_learner";
        case ModuleKind::dymecu_predictor_heads: return "dymecu_predictor_heads";
        case ModuleKind::rnd: return "rnd";
        case ModuleKind::icm: return "icm";
        case ModuleKind::disagreement: return "disagreement";
        case ModuleKind::none: return "none";
    }
    return "none";
}

std::string to_string(RunMode m) {
    return m == RunMode::joint ? "joint" : "pretrain_then_finetune";
}

ModuleKind module_from_string(const std::string& s) {
    if (s == "dymecu") return ModuleKind::dymecu;
    if (s == "dymecu_one_learner") return ModuleKind::dymecu_one_learner;
    if (s == "dymecu_predictor_heads") return ModuleKind::dymecu_predictor_heads;
    if (s == "rnd") return ModuleKind::rnd;
    if (s == "icm") return ModuleKind::icm;
    if (s == "disagreement") return ModuleKind::disagreement;
    if (s == "none") return ModuleKind::none;
    throw std::invalid_argument("unknown module '" + s + "'");
}

namespace {

using Value = std::variant<bool, long, double, std::string, std::vector<long>>;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

bool parse_long(const std::string& s, long& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

Value parse_value(const std::string& raw, int line) {
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError(line, "missing value");
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw ConfigError(line, "unterminated string");
        const std::string body = v.substr(1, v.size() - 2);
        if (body.find('"') != std::string::npos)
            throw ConfigError(line, "embedded quotes are not supported");
        return body;
    }
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigError(line, "unterminated array");
        std::vector<long> items;
        std::string body = v.substr(1, v.size() - 2);
        std::stringstream ss(body);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) throw ConfigError(line, "empty array element");
            long x;
            if (!parse_long(tok, x))
                throw ConfigError(line, "array element '" + tok + "' is not an integer");
            items.push_back(x);
        }
        return items;
    }
    long l;
    if (parse_long(v, l)) return l;
    double d;
    if (parse_double(v, d)) return d;
    throw ConfigError(line, "cannot parse value '" + v + "'");
}

struct Field {
    std::function<void(RunConfig&, const Value&, int line)> set;
};

void expect(bool ok, int line, const std::string& msg) {
    if (!ok) throw ConfigError(line, msg);
}

template <typename T>
std::vector<T> to_int_vec(const Value& v, int line, const char* key) {
    expect(std::holds_alternative<std::vector<long>>(v), line,
           std::string(key) + " expects an integer array");
    std::vector<T> out;
    for (long x : std::get<std::vector<long>>(v)) out.push_back(static_cast<T>(x));
    return out;
}

double to_f64(const Value& v, int line, const char* key) {
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<long>(v)) return static_cast<double>(std::get<long>(v));
    throw ConfigError(line, std::string(key) + " expects a number");
}

long to_i64(const Value& v, int line, const char* key) {
    expect(std::holds_alternative<long>(v), line, std::string(key) + " expects an integer");
    return std::get<long>(v);
}

int to_i32(const Value& v, int line, const char* key) {
    return static_cast<int>(to_i64(v, line, key));
}

bool to_bool(const Value& v, int line, const char* key) {
    expect(std::holds_alternative<bool>(v), line, std::string(key) + " expects true or false");
    return std::get<bool>(v);
}

std::string to_str(const Value& v, int line, const char* key) {
    expect(std::holds_alternative<std::string>(v), line,
           std::string(key) + " expects a quoted string");
    return std::get<std::string>(v);
}

const std::map<std::string, std::map<std::string, Field>>& schema() {
    static const std::map<std::string, std::map<std::string, Field>> s = {
        {"run",
         {
             {"module", {[](RunConfig& c, const Value& v, int ln) {
                  try {
                      c.run.module = module_from_string(to_str(v, ln, "module"));
                  } catch (const std::invalid_argument& e) {
                      throw ConfigError(ln, e.what());
                  }
              }}},
             {"seeds", {[](RunConfig& c, const Value& v, int ln) {
                  c.run.seeds = to_int_vec<long>(v, ln, "seeds");
              }}},
             {"total_steps", {[](RunConfig& c, const Value& v, int ln) {
                  c.run.total_steps = to_i64(v, ln, "total_steps");
              }}},
             {"mode", {[](RunConfig& c, const Value& v, int ln) {
                  const std::string m = to_str(v, ln, "mode");
                  if (m == "joint") c.run.mode = RunMode::joint;
                  else if (m == "pretrain_then_finetune") c.run.mode = RunMode::pretrain_then_finetune;
                  else throw ConfigError(ln, "mode must be joint or pretrain_then_finetune");
              }}},
             {"pretrain_steps", {[](RunConfig& c, const Value& v, int ln) {
                  c.run.pretrain_steps = to_i64(v, ln, "pretrain_steps");
              }}},
             {"out_dir", {[](RunConfig& c, const Value& v, int ln) {
                  c.run.out_dir = to_str(v, ln, "out_dir");
              }}},
         }},
        {"env",
         {
             {"kind", {[](RunConfig& c, const Value& v, int ln) {
                  const std::string k = to_str(v, ln, "kind");
                  if (k == "grid") c.env.kind = EnvKind::grid;
                  else if (k == "chain") c.env.kind = EnvKind::chain;
                  else throw ConfigError(ln, "env kind must be grid or chain");
              }}},
             {"width", {[](RunConfig& c, const Value& v, int ln) { c.env.width = to_i32(v, ln, "width"); }}},
             {"height", {[](RunConfig& c, const Value& v, int ln) { c.env.height = to_i32(v, ln, "height"); }}},
             {"goal_x", {[](RunConfig& c, const Value& v, int ln) { c.env.goal_x = to_i32(v, ln, "goal_x"); }}},
             {"goal_y", {[](RunConfig& c, const Value& v, int ln) { c.env.goal_y = to_i32(v, ln, "goal_y"); }}},
             {"max_steps", {[](RunConfig& c, const Value& v, int ln) { c.env.max_steps = to_i32(v, ln, "max_steps"); }}},
             {"onehot", {[](RunConfig& c, const Value& v, int ln) { c.env.onehot = to_bool(v, ln, "onehot"); }}},
             {"chain_n", {[](RunConfig& c, const Value& v, int ln) { c.env.chain_n = to_i32(v, ln, "chain_n"); }}},
             {"slip_prob", {[](RunConfig& c, const Value& v, int ln) { c.env.slip_prob = to_f64(v, ln, "slip_prob"); }}},
         }},
        {"curiosity",
         {
             {"alpha", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.alpha = to_f64(v, ln, "alpha"); }}},
             {"latent_dim", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.latent_dim = to_i32(v, ln, "latent_dim"); }}},
             {"hidden", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.hidden = to_int_vec<int>(v, ln, "hidden"); }}},
             {"activation", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.activation = to_str(v, ln, "activation"); }}},
             {"lr", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.lr = to_f64(v, ln, "lr"); }}},
             {"normalize", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.normalize = to_bool(v, ln, "normalize"); }}},
             {"ensemble", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.ensemble = to_i32(v, ln, "ensemble"); }}},
             {"extra_hidden", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.extra_hidden = to_int_vec<int>(v, ln, "extra_hidden"); }}},
             {"minibatch", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.minibatch = to_i32(v, ln, "minibatch"); }}},
             {"omega_init", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.omega_init = to_str(v, ln, "omega_init"); }}},
             {"memory_update", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.memory_update = to_str(v, ln, "memory_update"); }}},
             {"icm_forward_weight", {[](RunConfig& c, const Value& v, int ln) { c.curiosity.icm_forward_weight = to_f64(v, ln, "icm_forward_weight"); }}},
         }},
        {"ppo",
         {
             {"gamma", {[](RunConfig& c, const Value& v, int ln) { c.ppo.gamma = to_f64(v, ln, "gamma"); }}},
             {"lambda_gae", {[](RunConfig& c, const Value& v, int ln) { c.ppo.lambda_gae = to_f64(v, ln, "lambda_gae"); }}},
             {"clip_eps", {[](RunConfig& c, const Value& v, int ln) { c.ppo.clip_eps = to_f64(v, ln, "clip_eps"); }}},
             {"epochs", {[](RunConfig& c, const Value& v, int ln) { c.ppo.epochs = to_i32(v, ln, "epochs"); }}},
             {"minibatch", {[](RunConfig& c, const Value& v, int ln) { c.ppo.minibatch = to_i32(v, ln, "minibatch"); }}},
             {"zeta", {[](RunConfig& c, const Value& v, int ln) { c.ppo.zeta = to_f64(v, ln, "zeta"); }}},
             {"beta", {[](RunConfig& c, const Value& v, int ln) { c.ppo.beta = to_f64(v, ln, "beta"); }}},
             {"entropy_coef", {[](RunConfig& c, const Value& v, int ln) { c.ppo.entropy_coef = to_f64(v, ln, "entropy_coef"); }}},
             {"value_coef", {[](RunConfig& c, const Value& v, int ln) { c.ppo.value_coef = to_f64(v, ln, "value_coef"); }}},
             {"lr", {[](RunConfig& c, const Value& v, int ln) { c.ppo.lr = to_f64(v, ln, "lr"); }}},
             {"rollout_steps", {[](RunConfig& c, const Value& v, int ln) { c.ppo.rollout_steps = to_i32(v, ln, "rollout_steps"); }}},
             {"hidden", {[](RunConfig& c, const Value& v, int ln) { c.ppo.hidden = to_int_vec<int>(v, ln, "hidden"); }}},
         }},
    };
    return s;
}

std::string fmt_f64(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string fmt_int_array(const std::vector<int>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(xs[i]);
    }
    return out + "]";
}

std::string fmt_long_array(const std::vector<long>& xs) {
    std::string out = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(xs[i]);
    }
    return out + "]";
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::string section;
    std::map<std::string, bool> seen;

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(line, "malformed section header");
            section = s.substr(1, s.size() - 2);
            if (schema().find(section) == schema().end())
                throw ConfigError(line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        if (section.empty()) throw ConfigError(line, "key '" + key + "' outside any section");
        const auto& sec = schema().at(section);
        const auto it = sec.find(key);
        if (it == sec.end())
            throw ConfigError(line, "unknown key '" + key + "' in [" + section + "]");
        const std::string id = section + "." + key;
        if (seen[id]) throw ConfigError(line, "duplicate key '" + key + "' in [" + section + "]");
        seen[id] = true;
        it->second.set(cfg, parse_value(s.substr(eq + 1), line), line);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw std::runtime_error(path + ":" + std::to_string(e.line) + ": " + e.message);
    }
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out << "[run]\n";
    out << "module = \"" << to_string(c.run.module) << "\"\n";
    out << "seeds = " << fmt_long_array(c.run.seeds) << "\n";
    out << "total_steps = " << c.run.total_steps << "\n";
    out << "mode = \"" << to_string(c.run.mode) << "\"\n";
    out << "pretrain_steps = " << c.run.pretrain_steps << "\n";
    out << "out_dir = \"" << c.run.out_dir << "\"\n";
    out << "\n[env]\n";
    out << "kind = \"" << to_string(c.env.kind) << "\"\n";
    out << "width = " << c.env.width << "\n";
    out << "height = " << c.env.height << "\n";
    out << "goal_x = " << c.env.goal_x << "\n";
    out << "goal_y = " << c.env.goal_y << "\n";
    out << "max_steps = " << c.env.max_steps << "\n";
    out << "onehot = " << (c.env.onehot ? "true" : "false") << "\n";
    out << "chain_n = " << c.env.chain_n << "\n";
    out << "slip_prob = " << fmt_f64(c.env.slip_prob) << "\n";
    out << "\n[curiosity]\n";
    out << "alpha = " << fmt_f64(c.curiosity.alpha) << "\n";
    out << "latent_dim = " << c.curiosity.latent_dim << "\n";
    out << "hidden = " << fmt_int_array(c.curiosity.hidden) << "\n";
    out << "activation = \"" << c.curiosity.activation << "\"\n";
    out << "lr = " << fmt_f64(c.curiosity.lr) << "\n";
    out << "normalize = " << (c.curiosity.normalize ? "true" : "false") << "\n";
    out << "ensemble = " << c.curiosity.ensemble << "\n";
    out << "extra_hidden = " << fmt_int_array(c.curiosity.extra_hidden) << "\n";
    out << "minibatch = " << c.curiosity.minibatch << "\n";
    out << "omega_init = \"" << c.curiosity.omega_init << "\"\n";
    out << "memory_update = \"" << c.curiosity.memory_update << "\"\n";
    out << "icm_forward_weight = " << fmt_f64(c.curiosity.icm_forward_weight) << "\n";
    out << "\n[ppo]\n";
    out << "gamma = " << fmt_f64(c.ppo.gamma) << "\n";
    out << "lambda_gae = " << fmt_f64(c.ppo.lambda_gae) << "\n";
    out << "clip_eps = " << fmt_f64(c.ppo.clip_eps) << "\n";
    out << "epochs = " << c.ppo.epochs << "\n";
    out << "minibatch = " << c.ppo.minibatch << "\n";
    out << "zeta = " << fmt_f64(c.ppo.zeta) << "\n";
    out << "beta = " << fmt_f64(c.ppo.beta) << "\n";
    out << "entropy_coef = " << fmt_f64(c.ppo.entropy_coef) << "\n";
    out << "value_coef = " << fmt_f64(c.ppo.value_coef) << "\n";
    out << "lr = " << fmt_f64(c.ppo.lr) << "\n";
    out << "rollout_steps = " << c.ppo.rollout_steps << "\n";
    out << "hidden = " << fmt_int_array(c.ppo.hidden) << "\n";
    return out.str();
}

void save_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file " + path);
    out << serialize_config(cfg);
}

void validate(const RunConfig& c) {
    std::vector<std::string> errs;
    auto bad = [&](const std::string& m) { errs.push_back(m); };

    // [run]
    if (c.run.seeds.empty()) bad("run.seeds must list at least one seed");
    if (c.run.total_steps < 1) bad("run.total_steps must be >= 1");
    if (c.run.mode == RunMode::pretrain_then_finetune) {
        if (c.run.pretrain_steps < 1 || c.run.pretrain_steps >= c.run.total_steps)
            bad("run.pretrain_steps must lie in [1, total_steps) for pretrain_then_finetune");
    } else if (c.run.pretrain_steps != 0) {
        bad("run.pretrain_steps must be 0 in joint mode");
    }
    if (c.run.out_dir.empty()) bad("run.out_dir must not be empty");

    // [env]
    if (c.env.kind == EnvKind::grid) {
        if (c.env.width < 1 || c.env.height < 1) bad("env.width and env.height must be >= 1");
        if (c.env.goal_x < 0 || c.env.goal_x >= c.env.width || c.env.goal_y < 0 ||
            c.env.goal_y >= c.env.height)
            bad("env goal must lie inside the grid");
        if (c.env.goal_x == 0 && c.env.goal_y == 0) bad("env goal must differ from the start cell");
    } else {
        if (c.env.chain_n < 2) bad("env.chain_n must be >= 2");
        if (c.env.slip_prob < 0.0 || c.env.slip_prob > 1.0)
            bad("env.slip_prob must lie in [0, 1]");
    }
    if (c.env.max_steps < 1) bad("env.max_steps must be >= 1");

    // [curiosity]
    if (c.curiosity.alpha < 0.0 || c.curiosity.alpha > 1.0)
        bad("curiosity.alpha must lie in [0, 1]");
    if (c.curiosity.latent_dim < 1) bad("curiosity.latent_dim must be >= 1");
    for (int h : c.curiosity.hidden)
        if (h < 1) bad("curiosity.hidden entries must be >= 1");
    if (c.curiosity.lr < 0.0) bad("curiosity.lr must be >= 0");
    if (c.curiosity.ensemble < 2) bad("curiosity.ensemble must be >= 2");
    for (int h : c.curiosity.extra_hidden)
        if (h < 1) bad("curiosity.extra_hidden entries must be >= 1");
    if (c.run.module == ModuleKind::dymecu_predictor_heads && c.curiosity.extra_hidden.empty())
        bad("curiosity.extra_hidden must be non-empty for dymecu_predictor_heads");
    if (c.curiosity.minibatch < 1) bad("curiosity.minibatch must be >= 1");
    if (c.curiosity.activation != "relu" && c.curiosity.activation != "tanh")
        bad("curiosity.activation must be relu or tanh");
    if (c.curiosity.omega_init != "seeded" && c.curiosity.omega_init != "learner_average")
        bad("curiosity.omega_init must be seeded or learner_average");
    if (c.curiosity.memory_update != "both" && c.curiosity.memory_update != "learner1" &&
        c.curiosity.memory_update != "learner2")
        bad("curiosity.memory_update must be both, learner1 or learner2");
    if (c.curiosity.memory_update != "both" && c.run.module != ModuleKind::dymecu)
        bad("curiosity.memory_update selection requires the dual-learner dymecu module");
    if (c.curiosity.icm_forward_weight < 0.0 || c.curiosity.icm_forward_weight > 1.0)
        bad("curiosity.icm_forward_weight must lie in [0, 1]");

    // [ppo]
    if (!(c.ppo.gamma > 0.0 && c.ppo.gamma <= 1.0)) bad("ppo.gamma must lie in (0, 1]");
    if (c.ppo.lambda_gae < 0.0 || c.ppo.lambda_gae > 1.0) bad("ppo.lambda_gae must lie in [0, 1]");
    if (!(c.ppo.clip_eps > 0.0)) bad("ppo.clip_eps must be > 0");
    if (c.ppo.epochs < 1) bad("ppo.epochs must be >= 1");
    if (c.ppo.minibatch < 1) bad("ppo.minibatch must be >= 1");
    if (c.ppo.zeta < 0.0) bad("ppo.zeta must be >= 0");
    if (c.ppo.beta < 0.0) bad("ppo.beta must be >= 0");
    if (c.ppo.entropy_coef < 0.0) bad("ppo.entropy_coef must be >= 0");
    if (c.ppo.value_coef < 0.0) bad("ppo.value_coef must be >= 0");
    if (c.ppo.lr < 0.0) bad("ppo.lr must be >= 0");
    if (c.ppo.rollout_steps < 1) bad("ppo.rollout_steps must be >= 1");
    for (int h : c.ppo.hidden)
        if (h < 1) bad("ppo.hidden entries must be >= 1");

    if (!errs.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errs) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
}

SeedPlan seed_plan(std::uint64_t s) {
    SeedPlan p;
    p.theta1 = s;
    p.theta2 = s + 1;
    p.omega = s + 2;
    p.policy = s + 0x10000;
    p.value = s + 0x10001;
    p.env_base = s + 0x20000;
    p.actions = s + 0x30000;
    p.shuffle = s + 0x30001;
    p.module_rng = s + 0x40000;
    return p;
}

} // namespace dymecu
