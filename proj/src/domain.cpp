#include "tunerisk/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "tunerisk/error.hpp"
#include "tunerisk/rng.hpp"

namespace tunerisk {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::optional<double> parse_double(std::string_view text) {
  double out = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || !std::isfinite(out)) return std::nullopt;
  return out;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  std::int64_t out = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec == std::errc{} && ptr == last) return out;
  // Accept integral decimals such as "5.0" as written by some exporters.
  if (auto d = parse_double(text); d && std::floor(*d) == *d && std::fabs(*d) < 9.0e15) {
    return static_cast<std::int64_t>(*d);
  }
  return std::nullopt;
}

}  // namespace

std::string format_value(const Value& v) {
  return std::visit(Overloaded{
                        [](double d) {
                          char buf[32];
                          auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
                          return std::string(buf, ptr);
                        },
                        [](std::int64_t i) { return std::to_string(i); },
                        [](bool b) { return std::string(b ? "true" : "false"); },
                        [](const std::string& s) { return s; },
                    },
                    v);
}

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::kContinuous: return "continuous";
    case ParamKind::kInteger: return "integer";
    case ParamKind::kBoolean: return "boolean";
    case ParamKind::kNominal: return "nominal";
  }
  return "?";
}

std::string_view to_string(Scale scale) {
  return scale == Scale::kLog ? "log" : "linear";
}

// --- HyperparameterDomain ---------------------------------------------------

HyperparameterDomain HyperparameterDomain::continuous(std::string name, double lo, double hi,
                                                      Scale scale) {
  HyperparameterDomain d;
  d.name_ = std::move(name);
  d.kind_ = ParamKind::kContinuous;
  d.scale_ = scale;
  d.lo_ = lo;
  d.hi_ = hi;
  d.validate();
  return d;
}

HyperparameterDomain HyperparameterDomain::integer(std::string name, std::int64_t lo,
                                                   std::int64_t hi) {
  HyperparameterDomain d;
  d.name_ = std::move(name);
  d.kind_ = ParamKind::kInteger;
  d.lo_ = static_cast<double>(lo);
  d.hi_ = static_cast<double>(hi);
  d.validate();
  return d;
}

HyperparameterDomain HyperparameterDomain::boolean(std::string name) {
  HyperparameterDomain d;
  d.name_ = std::move(name);
  d.kind_ = ParamKind::kBoolean;
  d.choices_ = {Value{true}, Value{false}};
  d.validate();
  return d;
}

HyperparameterDomain HyperparameterDomain::nominal(std::string name,
                                                   std::vector<std::string> values) {
  HyperparameterDomain d;
  d.name_ = std::move(name);
  d.kind_ = ParamKind::kNominal;
  for (auto& v : values) d.choices_.emplace_back(std::move(v));
  d.validate();
  return d;
}

HyperparameterDomain HyperparameterDomain::with_fixed_value(Value v) && {
  if (!contains(v)) {
    throw ConfigError("parameter '" + name_ + "': fixed value " + format_value(v) +
                      " lies outside its domain");
  }
  fixed_ = std::move(v);
  return std::move(*this);
}

void HyperparameterDomain::validate() const {
  if (name_.empty()) throw ConfigError("hyperparameter with empty name");
  const std::string where = "parameter '" + name_ + "': ";
  if (is_numeric()) {
    if (!std::isfinite(lo_) || !std::isfinite(hi_)) throw ConfigError(where + "non-finite range");
    if (!(lo_ < hi_)) {
      throw ConfigError(where + "range requires lo < hi (got [" + format_value(lo_) + ", " +
                        format_value(hi_) + "])");
    }
    if (scale_ == Scale::kLog) {
      if (kind_ == ParamKind::kInteger) {
        throw ConfigError(where + "integer domains are sampled on a linear scale only");
      }
      if (lo_ <= 0.0) throw ConfigError(where + "log scale requires lo > 0");
    }
  } else {
    if (scale_ == Scale::kLog) throw ConfigError(where + "log scale on a categorical domain");
    if (choices_.empty()) throw ConfigError(where + "value list is empty");
    std::set<std::string> seen;
    for (const auto& c : choices_) {
      if (!seen.insert(format_value(c)).second) {
        throw ConfigError(where + "duplicate value '" + format_value(c) + "'");
      }
    }
  }
}

std::int64_t HyperparameterDomain::integer_cardinality() const noexcept {
  return static_cast<std::int64_t>(hi_) - static_cast<std::int64_t>(lo_) + 1;
}

bool HyperparameterDomain::contains(const Value& v) const {
  switch (kind_) {
    case ParamKind::kContinuous: {
      const auto* d = std::get_if<double>(&v);
      return d != nullptr && *d >= lo_ && *d <= hi_;
    }
    case ParamKind::kInteger: {
      const auto* i = std::get_if<std::int64_t>(&v);
      return i != nullptr && static_cast<double>(*i) >= lo_ && static_cast<double>(*i) <= hi_;
    }
    case ParamKind::kBoolean:
    case ParamKind::kNominal:
      return std::find(choices_.begin(), choices_.end(), v) != choices_.end();
  }
  return false;
}

Value HyperparameterDomain::parse(std::string_view text) const {
  auto fail = [&](std::string_view why) -> ValidationError {
    return ValidationError("parameter '" + name_ + "': value '" + std::string(text) + "' " +
                           std::string(why));
  };
  Value v;
  switch (kind_) {
    case ParamKind::kContinuous: {
      auto d = parse_double(text);
      if (!d) throw fail("is not a finite number");
      v = *d;
      break;
    }
    case ParamKind::kInteger: {
      auto i = parse_int(text);
      if (!i) throw fail("is not an integer");
      v = *i;
      break;
    }
    case ParamKind::kBoolean: {
      if (text == "true" || text == "True" || text == "TRUE" || text == "1") {
        v = true;
      } else if (text == "false" || text == "False" || text == "FALSE" || text == "0") {
        v = false;
      } else {
        throw fail("is not a boolean");
      }
      break;
    }
    case ParamKind::kNominal:
      v = std::string(text);
      break;
  }
  if (!contains(v)) {
    if (is_numeric()) {
      throw fail("is outside the range [" + format_value(lo_) + ", " + format_value(hi_) + "]");
    }
    throw fail("is not one of the declared values");
  }
  return v;
}

double HyperparameterDomain::to_number(const Value& v) const {
  return std::visit(Overloaded{
                        [](double d) { return d; },
                        [](std::int64_t i) { return static_cast<double>(i); },
                        [](bool b) { return b ? 1.0 : 0.0; },
                        [this](const std::string& s) {
                          auto it = std::find(choices_.begin(), choices_.end(), Value{s});
                          return static_cast<double>(it - choices_.begin());
                        },
                    },
                    v);
}

// --- Configuration ------------------------------------------------------------

const Value* Configuration::find(std::string_view name) const noexcept {
  for (const auto& [n, v] : entries_) {
    if (n == name) return &v;
  }
  return nullptr;
}

const Value& Configuration::at(std::string_view name) const {
  if (const auto* v = find(name)) return *v;
  throw DataError("configuration has no parameter '" + std::string(name) + "'");
}

std::string Configuration::serialize() const {
  std::string out;
  for (const auto& [n, v] : entries_) {
    if (!out.empty()) out += ';';
    out += n;
    out += '=';
    out += format_value(v);
  }
  return out;
}

// --- ConfigurationSpace -------------------------------------------------------

ConfigurationSpace::ConfigurationSpace(std::string algorithm,
                                       std::vector<HyperparameterDomain> domains)
    : algorithm_(std::move(algorithm)), domains_(std::move(domains)) {
  std::set<std::string> names;
  for (const auto& d : domains_) {
    if (!names.insert(d.name()).second) {
      throw ConfigError("duplicate parameter name '" + d.name() + "' in space '" + algorithm_ +
                        "'");
    }
  }
}

const HyperparameterDomain* ConfigurationSpace::find(std::string_view name) const noexcept {
  for (const auto& d : domains_) {
    if (d.name() == name) return &d;
  }
  return nullptr;
}

const HyperparameterDomain& ConfigurationSpace::at(std::string_view name) const {
  if (const auto* d = find(name)) return *d;
  throw ConfigError("unknown parameter '" + std::string(name) + "' for space '" + algorithm_ +
                    "'");
}

void ConfigurationSpace::validate(const Configuration& config) const {
  if (config.size() != domains_.size()) {
    throw ValidationError("configuration has " + std::to_string(config.size()) +
                          " values, space '" + algorithm_ + "' has " +
                          std::to_string(domains_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    const auto& [name, value] = config.entries()[i];
    const auto& d = domains_[i];
    if (name != d.name()) {
      throw ValidationError("configuration parameter '" + name + "' out of canonical order (expected '" +
                            d.name() + "')");
    }
    if (!d.contains(value)) {
      throw ValidationError("parameter '" + name + "': value " + format_value(value) +
                            " lies outside its domain");
    }
  }
}

// --- Sampling -----------------------------------------------------------------

std::uint64_t SeedKey::stream_key() const {
  return rng::KeyBuilder(0x5eed)
      .add(root_seed)
      .add(std::string_view(dataset_id))
      .add(seed_index)
      .add(std::string_view(param_name))
      .add(iteration)
      .key();
}

Value sample_value(const HyperparameterDomain& domain, const SeedKey& key) {
  if (domain.scale() == Scale::kLog && domain.lo() <= 0.0) {
    throw ConfigError("parameter '" + domain.name() + "': log scale requires lo > 0");
  }
  rng::CounterStream stream(key.stream_key());
  switch (domain.kind()) {
    case ParamKind::kContinuous: {
      const double u = stream.uniform();
      double v = 0.0;
      if (domain.scale() == Scale::kLog) {
        const double a = std::log(domain.lo());
        const double b = std::log(domain.hi());
        v = std::exp(a + u * (b - a));
      } else {
        v = domain.lo() + u * (domain.hi() - domain.lo());
      }
      return std::clamp(v, domain.lo(), domain.hi());
    }
    case ParamKind::kInteger: {
      const auto offset = stream.below(static_cast<std::uint64_t>(domain.integer_cardinality()));
      return static_cast<std::int64_t>(domain.lo()) + static_cast<std::int64_t>(offset);
    }
    case ParamKind::kBoolean:
    case ParamKind::kNominal:
      return domain.choices()[stream.below(domain.choices().size())];
  }
  return {};
}

Configuration sample_configuration(const ConfigurationSpace& space, std::string_view dataset_id,
                                   std::int64_t seed_index, std::int64_t iteration,
                                   const std::optional<FixedParam>& fixed,
                                   std::uint64_t root_seed) {
  if (fixed) {
    const auto& d = space.at(fixed->name);
    if (!d.contains(fixed->value)) {
      throw ConfigError("pinned value " + format_value(fixed->value) + " for parameter '" +
                        fixed->name + "' lies outside its domain");
    }
  }
  std::vector<std::pair<std::string, Value>> entries;
  entries.reserve(space.domains().size());
  SeedKey key{std::string(dataset_id), seed_index, {}, iteration, root_seed};
  for (const auto& d : space.domains()) {
    if (fixed && fixed->name == d.name()) {
      entries.emplace_back(d.name(), fixed->value);
    } else if (d.fixed_value()) {
      entries.emplace_back(d.name(), *d.fixed_value());
    } else {
      key.param_name = d.name();
      entries.emplace_back(d.name(), sample_value(d, key));
    }
  }
  return Configuration(std::move(entries));
}

// --- JSON ---------------------------------------------------------------------

Value value_from_json(const HyperparameterDomain& domain, const nlohmann::json& j) {
  Value v;
  switch (domain.kind()) {
    case ParamKind::kContinuous:
      if (!j.is_number()) throw ConfigError("parameter '" + domain.name() + "': expected a number");
      v = j.get<double>();
      break;
    case ParamKind::kInteger:
      if (j.is_number_integer()) {
        v = j.get<std::int64_t>();
      } else if (j.is_number() && std::floor(j.get<double>()) == j.get<double>()) {
        v = static_cast<std::int64_t>(j.get<double>());
      } else {
        throw ConfigError("parameter '" + domain.name() + "': expected an integer");
      }
      break;
    case ParamKind::kBoolean:
      if (j.is_boolean()) {
        v = j.get<bool>();
      } else if (j.is_string()) {
        return domain.parse(j.get<std::string>());
      } else {
        throw ConfigError("parameter '" + domain.name() + "': expected a boolean");
      }
      break;
    case ParamKind::kNominal:
      if (!j.is_string()) throw ConfigError("parameter '" + domain.name() + "': expected a string");
      v = j.get<std::string>();
      break;
  }
  if (!domain.contains(v)) {
    throw ConfigError("parameter '" + domain.name() + "': value " + format_value(v) +
                      " lies outside its domain");
  }
  return v;
}

nlohmann::json value_to_json(const Value& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

ConfigurationSpace space_from_json(const nlohmann::json& j) {
  try {
    const auto algorithm = j.at("algorithm").get<std::string>();
    std::vector<HyperparameterDomain> domains;
    for (const auto& p : j.at("params")) {
      const auto name = p.at("name").get<std::string>();
      const auto kind = p.at("kind").get<std::string>();
      const auto scale_text = p.value("scale", std::string("linear"));
      Scale scale = Scale::kLinear;
      if (scale_text == "log") {
        scale = Scale::kLog;
      } else if (scale_text != "linear") {
        throw ConfigError("parameter '" + name + "': unknown scale '" + scale_text + "'");
      }
      std::optional<HyperparameterDomain> d;
      if (kind == "continuous") {
        const auto& r = p.at("range");
        d = HyperparameterDomain::continuous(name, r.at(0).get<double>(), r.at(1).get<double>(),
                                             scale);
      } else if (kind == "integer") {
        if (scale == Scale::kLog) {
          throw ConfigError("parameter '" + name +
                            "': integer domains are sampled on a linear scale only");
        }
        const auto& r = p.at("range");
        d = HyperparameterDomain::integer(name, r.at(0).get<std::int64_t>(),
                                          r.at(1).get<std::int64_t>());
      } else if (kind == "boolean") {
        if (scale == Scale::kLog) throw ConfigError("parameter '" + name + "': log scale on boolean");
        d = HyperparameterDomain::boolean(name);
      } else if (kind == "nominal") {
        if (scale == Scale::kLog) throw ConfigError("parameter '" + name + "': log scale on nominal");
        d = HyperparameterDomain::nominal(name, p.at("values").get<std::vector<std::string>>());
      } else {
        throw ConfigError("parameter '" + name + "': unknown kind '" + kind + "'");
      }
      if (p.contains("fixed_value") && !p.at("fixed_value").is_null()) {
        auto fixed = value_from_json(*d, p.at("fixed_value"));
        d = std::move(*d).with_fixed_value(std::move(fixed));
      }
      domains.push_back(std::move(*d));
    }
    return ConfigurationSpace(algorithm, std::move(domains));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration space: ") + e.what());
  }
}

nlohmann::json space_to_json(const ConfigurationSpace& space) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& d : space.domains()) {
    nlohmann::json p;
    p["name"] = d.name();
    p["kind"] = std::string(to_string(d.kind()));
    switch (d.kind()) {
      case ParamKind::kContinuous:
        p["range"] = {d.lo(), d.hi()};
        p["scale"] = std::string(to_string(d.scale()));
        break;
      case ParamKind::kInteger:
        p["range"] = {static_cast<std::int64_t>(d.lo()), static_cast<std::int64_t>(d.hi())};
        break;
      case ParamKind::kBoolean:
        break;
      case ParamKind::kNominal: {
        std::vector<std::string> values;
        for (const auto& c : d.choices()) values.push_back(std::get<std::string>(c));
        p["values"] = values;
        break;
      }
    }
    if (d.fixed_value()) p["fixed_value"] = value_to_json(*d.fixed_value());
    params.push_back(std::move(p));
  }
  return {{"algorithm", space.algorithm()}, {"params", params}};
}

ConfigurationSpace load_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration space file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
  return space_from_json(j);
}

}  // namespace tunerisk
