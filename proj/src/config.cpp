#include "bvm/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bvm/errors.hpp"
#include "bvm/functionals.hpp"

namespace bvm {
namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct Section {
  std::string kind;   // run, source, schedule, prior, experiment
  std::string title;  // experiment name
  std::string prefix; // used in error keys
  int line = 0;
  std::map<std::string, Entry> entries;

  bool has(const std::string& key) const { return entries.count(key) > 0; }

  Entry* find(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::string key(const std::string& k) const { return prefix + "." + k; }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& text, const std::string& key) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (!text.empty() && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v))
    throw ConfigError(key, "expected a decimal number, got '" + text + "'");
  return v;
}

std::string get_string(Section& s, const std::string& key, const std::string& fallback) {
  Entry* e = s.find(key);
  return e ? e->value : fallback;
}

std::string require_string(Section& s, const std::string& key) {
  Entry* e = s.find(key);
  if (!e) throw ConfigError(s.key(key), "required key missing");
  return e->value;
}

double get_double(Section& s, const std::string& key, double fallback) {
  Entry* e = s.find(key);
  return e ? to_double(e->value, s.key(key)) : fallback;
}

std::int64_t get_count(Section& s, const std::string& key, std::int64_t fallback) {
  Entry* e = s.find(key);
  if (!e) return fallback;
  const double v = to_double(e->value, s.key(key));
  if (v < 0.0 || v != std::floor(v) || v > 9e15)
    throw ConfigError(s.key(key), "expected a non-negative integer, got '" + e->value + "'");
  return static_cast<std::int64_t>(v);
}

std::vector<double> get_list(Section& s, const std::string& key) {
  Entry* e = s.find(key);
  if (!e) throw ConfigError(s.key(key), "required key missing");
  std::vector<double> out;
  for (const auto& part : split(e->value, ',')) out.push_back(to_double(part, s.key(key)));
  if (out.empty()) throw ConfigError(s.key(key), "empty list");
  return out;
}

std::vector<double> get_grid(Section& s) {
  std::vector<double> grid = get_list(s, "n_grid");
  for (double n : grid)
    if (!(n >= 3.0) || n != std::floor(n) || n > 9e15)
      throw ConfigError(s.key("n_grid"), "sample sizes must be integers >= 3");
  return grid;
}

template <class Fn>
auto wrap(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

CountablePmf parse_source(Section& s) {
  const std::string family = require_string(s, "family");
  if (family == "explicit")
    return wrap(s.key("probs"), [&] { return CountablePmf::explicit_pmf(get_list(s, "probs")); });
  if (family == "exponential")
    return wrap(s.key("eta"), [&] {
      return CountablePmf::exponential(to_double(require_string(s, "eta"), s.key("eta")));
    });
  if (family == "polynomial")
    return wrap(s.key("eta"), [&] {
      return CountablePmf::polynomial(to_double(require_string(s, "eta"), s.key("eta")));
    });
  throw ConfigError(s.key("family"), "unknown family '" + family + "'");
}

TruncationSchedule parse_schedule(Section& s, const std::optional<CountablePmf>& source) {
  const std::string kind = require_string(s, "kind");
  const auto default_eta = [&](PmfFamily f) -> std::optional<double> {
    if (source && source->family() == f) return source->eta();
    return std::nullopt;
  };
  const auto eta_for = [&](PmfFamily f) {
    const auto d = default_eta(f);
    if (!s.has("eta") && !d) throw ConfigError(s.key("eta"), "required key missing");
    return get_double(s, "eta", d.value_or(0.0));
  };
  TruncationSchedule out;
  if (kind == "exponential") {
    ExponentialSchedule e;
    e.eta = eta_for(PmfFamily::exponential_envelope);
    e.a = get_double(s, "a", e.a);
    out = e;
  } else if (kind == "polynomial") {
    PolynomialSchedule p;
    p.eta = eta_for(PmfFamily::polynomial_envelope);
    p.u_power = get_double(s, "u_power", p.u_power);
    out = p;
  } else if (kind == "manual") {
    ManualSchedule m;
    for (const auto& step : split(require_string(s, "steps"), ',')) {
      const auto colon = step.find(':');
      if (colon == std::string::npos)
        throw ConfigError(s.key("steps"), "expected N:K pairs, got '" + step + "'");
      const double n = to_double(trim(step.substr(0, colon)), s.key("steps"));
      const double k = to_double(trim(step.substr(colon + 1)), s.key("steps"));
      if (k < 1.0 || k != std::floor(k))
        throw ConfigError(s.key("steps"), "levels must be positive integers");
      m.steps.emplace_back(n, static_cast<std::int64_t>(k));
    }
    out = m;
  } else if (kind == "power") {
    PowerSchedule p;
    p.c = get_double(s, "c", p.c);
    p.p = get_double(s, "p", p.p);
    out = p;
  } else {
    throw ConfigError(s.key("kind"), "unknown schedule kind '" + kind + "'");
  }
  wrap(s.key("kind"), [&] {
    validate(out);
    return 0;
  });
  return out;
}

MRule parse_m_rule(Section& s) {
  MRule r;
  const std::string kind = get_string(s, "m_rule", "k_log_n");
  if (kind == "k_log_n") r.kind = MRule::Kind::k_log_n;
  else if (kind == "constant") r.kind = MRule::Kind::constant;
  else if (kind == "cube_root") r.kind = MRule::Kind::cube_root;
  else if (kind == "multiple_of_k") r.kind = MRule::Kind::multiple_of_k;
  else throw ConfigError(s.key("m_rule"), "unknown M_n rule '" + kind + "'");
  r.c = get_double(s, "m_c", 1.0);
  if (!(r.c > 0.0)) throw ConfigError(s.key("m_c"), "must be positive");
  return r;
}

TailKind parse_tail_kind(Section& s) {
  const std::string b = require_string(s, "bound");
  if (b == "chi-square") return TailKind::chi_square;
  if (b == "pearson-centered") return TailKind::pearson_centered;
  if (b == "pearson-noncentered") return TailKind::pearson_noncentered;
  throw ConfigError(s.key("bound"), "unknown bound '" + b + "'");
}

struct Globals {
  std::optional<CountablePmf> source;
  std::optional<TruncationSchedule> schedule;
  double beta = 1.0;
};

const CountablePmf& need_source(const Globals& g, Section& s) {
  if (!g.source) throw ConfigError(s.prefix, "experiment needs a [source] section");
  return *g.source;
}

const TruncationSchedule& need_schedule(const Globals& g, Section& s) {
  if (!g.schedule) throw ConfigError(s.prefix, "experiment needs a [schedule] section");
  return *g.schedule;
}

double get_beta(Section& s, const Globals& g) {
  const double b = get_double(s, "beta", g.beta);
  if (!(b > 0.0)) throw ConfigError(s.key("beta"), "must be positive");
  return b;
}

double get_alpha(Section& s, bool variance) {
  const double a = get_double(s, "alpha", 1.0);
  if (!(a > 0.0)) throw ConfigError(s.key("alpha"), "must be positive");
  if (variance && !(a > 0.5)) throw ConfigError(s.key("alpha"), "must exceed 1/2");
  return a;
}

ExperimentEntry parse_experiment(Section& s, const Globals& g) {
  ExperimentEntry e;
  e.name = s.title;
  e.kind = require_string(s, "kind");
  if (e.kind == "concentration") {
    ConcentrationConfig c{need_source(g, s), need_schedule(g, s), parse_m_rule(s), get_beta(s, g),
                          get_grid(s)};
    c.m = static_cast<std::size_t>(get_count(s, "m", 2000));
    c.R = get_count(s, "R", 50);
    e.job = std::move(c);
  } else if (e.kind == "tv") {
    TvConfig c{need_source(g, s), need_schedule(g, s), get_beta(s, g), get_grid(s)};
    c.m = static_cast<std::size_t>(get_count(s, "m", 20000));
    e.job = std::move(c);
  } else if (e.kind == "functional-clt") {
    FunctionalCltConfig c{need_source(g, s), need_schedule(g, s), get_beta(s, g),
                          get_alpha(s, true), get_grid(s)};
    c.m = static_cast<std::size_t>(get_count(s, "m", 5000));
    e.job = std::move(c);
  } else if (e.kind == "mle-clt") {
    MleCltConfig c{need_source(g, s), need_schedule(g, s), get_alpha(s, true), get_grid(s)};
    c.R = get_count(s, "R", 1000);
    e.job = std::move(c);
  } else if (e.kind == "coverage") {
    CoverageConfig c{need_source(g, s), need_schedule(g, s), get_beta(s, g), get_alpha(s, true),
                     get_double(s, "delta", 0.1), get_grid(s)};
    c.m = static_cast<std::size_t>(get_count(s, "m", 3000));
    c.R = get_count(s, "R", 500);
    const std::string wald = get_string(s, "wald", "plugin");
    if (wald != "plugin" && wald != "oracle")
      throw ConfigError(s.key("wald"), "expected plugin or oracle");
    c.wald_oracle = wald == "oracle";
    e.job = std::move(c);
  } else if (e.kind == "verify-bounds") {
    BoundsJob b;
    b.kind = parse_tail_kind(s);
    b.k = get_count(s, "k", b.k);
    if (b.k < 1) throw ConfigError(s.key("k"), "must be at least 1");
    const std::string level_key = b.kind == TailKind::pearson_noncentered ? "M" : "x";
    b.level = get_double(s, level_key, b.level);
    if (!(b.level >= 0.0)) throw ConfigError(s.key(level_key), "must be non-negative");
    if (b.kind != TailKind::chi_square) {
      b.n_theta_min = get_double(s, "n_theta_min", b.n_theta_min);
      b.theta_small = get_double(s, "theta_small", b.theta_small);
      if (!(b.n_theta_min > 0.0)) throw ConfigError(s.key("n_theta_min"), "must be positive");
      if (!(b.theta_small > 0.0 && b.theta_small < 1.0 / static_cast<double>(b.k + 1)))
        throw ConfigError(s.key("theta_small"), "must lie in (0, 1/(k+1))");
    }
    b.R = get_count(s, "R", b.R);
    e.job = b;
  } else if (e.kind == "check-conditions") {
    const std::string c = require_string(s, "condition");
    ConditionKind kind;
    if (c == "2.1") kind = ConditionKind::c2_1;
    else if (c == "3.1") kind = ConditionKind::c3_1;
    else if (c == "3.5") kind = ConditionKind::c3_5;
    else if (c == "smoothness") kind = ConditionKind::smoothness;
    else throw ConfigError(s.key("condition"), "expected 2.1, 3.1, 3.5 or smoothness");
    e.job = ConditionsJob{kind, need_source(g, s), need_schedule(g, s), parse_m_rule(s),
                          get_beta(s, g), get_grid(s)};
  } else {
    throw ConfigError(s.key("kind"), "unknown experiment kind '" + e.kind + "'");
  }
  return e;
}

void reject_unused(const Section& s) {
  for (const auto& [k, e] : s.entries)
    if (!e.used) throw ConfigError(s.key(k), "unknown key (line " + std::to_string(e.line) + ")");
}

}  // namespace

std::pair<TailBoundSpec, SamplingConfig> prepare_bounds_job(const BoundsJob& job) {
  SamplingConfig sampling;
  sampling.direction = natural_direction(job.kind);
  if (job.kind == TailKind::chi_square) return {chi_square_bound(job.k, job.level), sampling};
  const TruncatedPmf theta0 = spiked_theta0(job.k, job.theta_small);
  const auto n = static_cast<std::int64_t>(std::llround(job.n_theta_min / job.theta_small));
  sampling.theta0 = theta0;
  if (job.kind == TailKind::pearson_centered)
    return {pearson_centered_bound(job.k, job.level, n, theta0.min_prob()), sampling};
  const TailBoundSpec spec = pearson_noncentered_bound(job.k, job.level, n, theta0.min_prob());
  sampling.theta_alt = noncentered_alternative(spec, theta0, theta0.cells() - 1);
  return {spec, sampling};
}

ConditionReport run_conditions_job(const ConditionsJob& job) {
  switch (job.condition) {
    case ConditionKind::c2_1: return check_condition_2_1(job.pmf, job.schedule, job.n_grid);
    case ConditionKind::c3_1:
      return check_condition_3_1(job.schedule, job.m_rule, job.pmf, job.n_grid);
    case ConditionKind::c3_5:
      return check_condition_3_5(job.beta, job.pmf, job.schedule, job.m_rule, job.n_grid);
    case ConditionKind::smoothness:
      return smoothness_report(job.beta, job.pmf, job.schedule, job.m_rule, job.n_grid);
  }
  throw ParameterError("unknown condition");
}

RunConfig parse_config(const std::string& text) {
  std::vector<Section> sections;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where, "unterminated section header");
      const std::string header = trim(line.substr(1, line.size() - 2));
      Section s;
      s.line = line_no;
      const auto space = header.find_first_of(" \t");
      s.kind = header.substr(0, space);
      if (s.kind == "experiment") {
        s.title = space == std::string::npos ? "" : trim(header.substr(space));
        if (s.title.empty()) throw ConfigError(where, "experiment section needs a name");
        for (char c : s.title)
          if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
            throw ConfigError(where, "experiment names use letters, digits, '_' and '-'");
        s.prefix = "experiment." + s.title;
      } else if (s.kind == "run" || s.kind == "source" || s.kind == "schedule" ||
                 s.kind == "prior") {
        if (space != std::string::npos) throw ConfigError(where, "unexpected section title");
        s.prefix = s.kind;
      } else {
        throw ConfigError(where, "unknown section [" + header + "]");
      }
      if (!seen.insert(s.prefix).second) throw ConfigError(s.prefix, "duplicate section");
      sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected key = value");
    if (sections.empty()) throw ConfigError(where, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where, "empty key");
    Section& s = sections.back();
    if (!s.entries.emplace(key, Entry{value, line_no, false}).second)
      throw ConfigError(s.key(key), "duplicate key (line " + std::to_string(line_no) + ")");
  }

  RunConfig cfg;
  Globals g;
  const auto section = [&](const std::string& kind) -> Section* {
    for (auto& s : sections)
      if (s.kind == kind) return &s;
    return nullptr;
  };
  if (Section* s = section("run")) {
    if (Entry* e = s->find("seed")) {
      const auto res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), cfg.seed);
      if (res.ec != std::errc() || res.ptr != e->value.data() + e->value.size())
        throw ConfigError(s->key("seed"), "expected an unsigned 64-bit integer");
    }
    cfg.out = get_string(*s, "out", cfg.out.string());
    cfg.threads = static_cast<unsigned>(get_count(*s, "threads", 1));
  }
  if (Section* s = section("source")) g.source = parse_source(*s);
  if (Section* s = section("schedule")) g.schedule = parse_schedule(*s, g.source);
  if (Section* s = section("prior")) {
    g.beta = get_double(*s, "beta", 1.0);
    if (!(g.beta > 0.0)) throw ConfigError(s->key("beta"), "must be positive");
  }
  for (auto& s : sections)
    if (s.kind == "experiment") cfg.experiments.push_back(parse_experiment(s, g));
  for (const auto& s : sections) reject_unused(s);
  if (cfg.experiments.empty()) throw ConfigError("experiment", "no [experiment NAME] section");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void preflight(const ExperimentEntry& e) {
  const std::string p = "experiment." + e.name;
  std::visit(
      [&](const auto& job) {
        using T = std::decay_t<decltype(job)>;
        if constexpr (std::is_same_v<T, ConcentrationConfig>) {
          if (job.R < 2) throw GuardRejection(p + ".R: need at least 2 replications");
          if (job.m < 1) throw GuardRejection(p + ".m: need at least 1 draw");
        } else if constexpr (std::is_same_v<T, TvConfig>) {
          if (job.m < 1000) throw GuardRejection(p + ".m: need at least 1000 draws");
        } else if constexpr (std::is_same_v<T, FunctionalCltConfig>) {
          if (job.m < 2) throw GuardRejection(p + ".m: need at least 2 draws");
          for (double n : job.n_grid) {
            const TruncatedPmf t = truncate(job.pmf, truncation_level(job.schedule, n));
            if (!(gamma_variance(t, job.alpha) > 0.0))
              throw GuardRejection(p + ".alpha: gamma(theta0) is zero");
          }
        } else if constexpr (std::is_same_v<T, MleCltConfig>) {
          if (job.R < 10) throw GuardRejection(p + ".R: need at least 10 replications");
        } else if constexpr (std::is_same_v<T, CoverageConfig>) {
          if (!(job.delta >= 0.0 && job.delta < 1.0))
            throw GuardRejection(p + ".delta: must lie in [0, 1)");
          if (job.R < 2) throw GuardRejection(p + ".R: need at least 2 replications");
          if (job.m < 2) throw GuardRejection(p + ".m: need at least 2 draws");
        } else if constexpr (std::is_same_v<T, BoundsJob>) {
          if (job.R < 1000) throw GuardRejection(p + ".R: need at least 1000 replications");
        }
      },
      e.job);
}

}  // namespace bvm
