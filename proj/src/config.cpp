#include "qsuggest/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "qsuggest/error.hpp"
#include "qsuggest/text.hpp"
#include "qsuggest/textio.hpp"

namespace qsuggest {

namespace {

struct Option {
  std::string_view section;
  std::string_view key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(fmt::format("'{}' is not a boolean", v));
}

std::string show(double v) { return format_real(v); }
std::string show(bool v) { return v ? "true" : "false"; }

template <class T>
Option number(std::string_view section, std::string_view key, T& field) {
  return {section, key,
          [&field](const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              field = parse_real(v);
            } else if constexpr (std::is_unsigned_v<T>) {
              field = static_cast<T>(parse_unsigned(v));
            } else {
              field = static_cast<T>(parse_integer(v));
            }
          },
          [&field] {
            if constexpr (std::is_floating_point_v<T>) {
              return show(field);
            } else {
              return std::to_string(field);
            }
          }};
}

Option text(std::string_view section, std::string_view key, std::string& field) {
  return {section, key, [&field](const std::string& v) { field = v; }, [&field] { return field; }};
}

Option flag(std::string_view section, std::string_view key, bool& field) {
  return {section, key, [&field](const std::string& v) { field = parse_bool(v); },
          [&field] { return show(field); }};
}

template <class T>
Option list(std::string_view section, std::string_view key, std::vector<T>& field) {
  return {section, key,
          [&field](const std::string& v) {
            field.clear();
            for (const auto& part : split(v, ',')) {
              const auto item = trim(part);
              if (item.empty()) continue;
              if constexpr (std::is_floating_point_v<T>) {
                field.push_back(parse_real(item));
              } else {
                field.push_back(static_cast<T>(parse_integer(item)));
              }
            }
          },
          [&field] {
            std::vector<std::string> parts;
            for (const auto& x : field) {
              if constexpr (std::is_floating_point_v<T>) {
                parts.push_back(show(x));
              } else {
                parts.push_back(std::to_string(x));
              }
            }
            return join(parts, ",");
          }};
}

std::vector<Option> options(ExperimentConfig& c) {
  auto& s = c.synth;
  return {
      text("paths", "logs", c.logs),
      text("paths", "corpus", c.corpus),
      text("paths", "ground_truth", c.ground_truth),
      text("paths", "model_dir", c.model_dir),
      text("paths", "report_dir", c.report_dir),
      number("run", "seed", c.seed),
      number("lda", "topics", c.lda.num_topics),
      list("lda", "topic_candidates", c.topic_candidates),
      {"lda", "dirichlet_alpha",
       [&c](const std::string& v) {
         if (v == "auto") {
           c.lda.dirichlet_alpha.reset();
         } else {
           c.lda.dirichlet_alpha = parse_real(v);
         }
       },
       [&c] { return c.lda.dirichlet_alpha ? show(*c.lda.dirichlet_alpha) : std::string("auto"); }},
      number("lda", "dirichlet_beta", c.lda.dirichlet_beta),
      number("lda", "iterations", c.lda.gibbs_iterations),
      number("lda", "burn_in", c.lda.burn_in),
      number("lda", "sample_lag", c.lda.sample_lag),
      number("lda", "inference_iterations", c.lda.inference_iterations),
      number("lda", "inference_burn_in", c.lda.inference_burn_in),
      number("lda", "min_df", c.lda.min_df),
      number("hierarchy", "min_freq", c.hierarchy.min_freq),
      number("hierarchy", "subsume_threshold", c.hierarchy.subsume_threshold),
      number("hierarchy", "max_phrase_words", c.hierarchy.max_phrase_words),
      number("hierarchy", "fallback_size", c.hierarchy.fallback_size),
      number("profiles", "decay_alpha", c.decay.decay_alpha),
      number("suggest", "list_size", c.list_size),
      flag("suggest", "refinement_union", c.refinement_union),
      number("ranker", "trees", c.ranker.num_trees),
      number("ranker", "leaves", c.ranker.num_leaves),
      number("ranker", "min_leaf", c.ranker.min_instances_per_leaf),
      number("ranker", "learning_rate", c.ranker.learning_rate),
      number("ranker", "ndcg_truncation", c.ranker.ndcg_truncation),
      number("ranker", "sigmoid", c.ranker.sigmoid),
      number("eval", "start_week", c.start_week),
      number("eval", "end_week", c.end_week),
      number("synth", "seed", s.seed),
      number("synth", "topics", s.topics),
      number("synth", "head_terms", s.head_terms),
      number("synth", "heads_per_topic", s.heads_per_topic),
      number("synth", "anchors_per_topic", s.anchors_per_topic),
      number("synth", "facets_per_head", s.facets_per_head),
      number("synth", "general_per_topic", s.general_per_topic),
      number("synth", "documents", s.documents),
      number("synth", "doc_length", s.doc_length),
      number("synth", "dominant_weight", s.dominant_weight),
      number("synth", "anchor_slot_rate", s.anchor_slot_rate),
      number("synth", "phrase_slot_rate", s.phrase_slot_rate),
      number("synth", "users", s.users),
      number("synth", "interests_per_user", s.interests_per_user),
      number("synth", "sessions", s.sessions),
      number("synth", "weeks", s.weeks),
      text("synth", "start_date", s.start_date),
      number("synth", "abandon_rate", s.abandon_rate),
      list("synth", "needs_distribution", s.needs_distribution),
      number("synth", "anchor_rate", s.anchor_rate),
      number("synth", "wrong_facet_rate", s.wrong_facet_rate),
      number("synth", "head_click_rate", s.head_click_rate),
      number("synth", "intent_switch_rate", s.intent_switch_rate),
      number("synth", "click_noise", s.click_noise),
      number("synth", "max_clicks", s.max_clicks),
      number("synth", "facet_zipf", s.facet_zipf),
  };
}

void assign(Option& opt, const std::string& value, std::string_view origin) {
  try {
    opt.set(value);
  } catch (const Error& e) {
    throw ConfigError(fmt::format("{}: [{}] {}: {}", origin, opt.section, opt.key, e.what()));
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  lda.validate();
  for (int k : topic_candidates) {
    if (k < 2) throw ConfigError("lda: topic candidates must be >= 2");
  }
  hierarchy.validate();
  decay.validate();
  if (list_size == 0) throw ConfigError("suggest: list_size must be positive");
  ranker.validate();
  if (start_week < 1) throw ConfigError("eval: start_week must be >= 1");
  if (end_week != 0 && end_week <= start_week) {
    throw ConfigError("eval: end_week must be 0 or greater than start_week");
  }
  synth.validate();
}

std::string ExperimentConfig::effective_text() const {
  auto copy = *this;
  std::string out;
  std::string_view section;
  for (auto& opt : options(copy)) {
    if (opt.section != section) {
      section = opt.section;
      out += fmt::format("{}[{}]\n", out.empty() ? "" : "\n", section);
    }
    out += fmt::format("{} = {}\n", opt.key, opt.get());
  }
  return out;
}

std::uint64_t ExperimentConfig::fingerprint() const { return stable_hash(effective_text()); }

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

ExperimentConfig parse_config(std::string_view text, const EnvLookup& env) {
  ExperimentConfig config;
  auto opts = options(config);
  auto find = [&](std::string_view section, std::string_view key) -> Option* {
    for (auto& o : opts) {
      if (o.section == section && o.key == key) return &o;
    }
    return nullptr;
  };

  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    auto cut = raw.find_first_of("#;");
    auto line = trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: unterminated section header", line_no));
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    auto* opt = find(section, key);
    if (opt == nullptr) throw ConfigError(fmt::format("line {}: unknown key [{}] {}", line_no, section, key));
    assign(*opt, value, fmt::format("line {}", line_no));
  }
  for (auto& o : opts) {
    const auto name = fmt::format("SUGGEST_{}_{}", upper(o.section), upper(o.key));
    if (auto v = env(name)) assign(o, trim(*v), name);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
  if (!path) return parse_config("", env);
  std::ifstream in(*path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path->string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), env);
}

}  // namespace qsuggest
