#include "lcx/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lcx/error.hpp"

namespace lcx {

namespace {

nlohmann::ordered_json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? number_or_null(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string csv_cell(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

bool is_graph(const LayerConvexityReport& r) { return r.metric == "graph"; }

}  // namespace

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

nlohmann::ordered_json to_json(const LayerConvexityReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  j["layer_id"] = r.layer_id;
  if (!r.layer_name.empty()) j["layer_name"] = r.layer_name;
  j["params"] = r.params;
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : r.classes) {
    nlohmann::ordered_json cj;
    cj["class"] = c.class_id;
    cj["n_class"] = c.n_class;
    if (c.absent) {
      cj["absent"] = true;
      classes.push_back(std::move(cj));
      continue;
    }
    const bool scored = c.n_pairs > 0;
    cj["mean"] = scored ? number_or_null(c.mean) : nlohmann::ordered_json(nullptr);
    cj["sem"] = scored ? number_or_null(c.sem) : nlohmann::ordered_json(nullptr);
    cj["n_pairs"] = c.n_pairs;
    if (is_graph(r)) {
      cj["n_disconnected"] = c.n_disconnected;
      cj["existing_only_mean"] = optional_number(c.existing_only_mean);
    }
    if (!c.pair_scores.empty()) {
      auto& ps = cj["pair_scores"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < c.pair_scores.size(); ++i) {
        ps.push_back({c.pairs[i].first, c.pairs[i].second, c.pair_scores[i]});
      }
    }
    classes.push_back(std::move(cj));
  }
  j["overall_mean"] = optional_number(r.overall_mean);
  if (is_graph(r)) j["overall_existing_only_mean"] = optional_number(r.overall_existing_only_mean);
  j["warnings"] = r.warnings;
  j["truncated"] = r.truncated;
  if (r.truncated) j["error"] = r.error;
  return j;
}

LayerConvexityReport report_from_json(const nlohmann::json& j) {
  LayerConvexityReport r;
  try {
    r.metric = j.at("metric").get<std::string>();
    r.layer_id = j.at("layer_id").get<std::uint32_t>();
    r.layer_name = j.value("layer_name", "");
    r.params = nlohmann::ordered_json::parse(j.at("params").dump());
    for (const auto& cj : j.at("classes")) {
      ClassConvexity c;
      c.class_id = cj.at("class").get<ClassId>();
      c.n_class = cj.at("n_class").get<std::size_t>();
      c.absent = cj.value("absent", false);
      if (!c.absent) {
        c.n_pairs = cj.at("n_pairs").get<std::size_t>();
        c.mean = read_optional(cj, "mean").value_or(0.0);
        c.sem = read_optional(cj, "sem").value_or(0.0);
        c.n_disconnected = cj.value("n_disconnected", std::size_t{0});
        c.existing_only_mean = read_optional(cj, "existing_only_mean");
      }
      r.classes.push_back(std::move(c));
    }
    r.overall_mean = read_optional(j, "overall_mean");
    r.overall_existing_only_mean = read_optional(j, "overall_existing_only_mean");
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.truncated = j.value("truncated", false);
    r.error = j.value("error", "");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("not a convexity report: ") + e.what());
  }
  return r;
}

std::string reports_csv(std::span<const LayerConvexityReport> reports) {
  std::ostringstream out;
  out << "metric,layer_id,class,n_class,n_pairs,mean,sem,n_disconnected,existing_only_mean\n";
  for (const auto& r : reports) {
    for (const auto& c : r.classes) {
      out << r.metric << ',' << r.layer_id << ',' << c.class_id << ',' << c.n_class << ',';
      if (c.absent) {
        out << "0,,,,\n";
        continue;
      }
      const bool scored = c.n_pairs > 0;
      out << c.n_pairs << ',' << (scored ? format_number(c.mean) : "") << ','
          << (scored ? format_number(c.sem) : "") << ',';
      if (is_graph(r)) {
        out << c.n_disconnected << ',' << csv_cell(c.existing_only_mean);
      } else {
        out << ',';
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string reports_markdown(std::span<const LayerConvexityReport> reports) {
  std::set<ClassId> class_ids;
  for (const auto& r : reports) {
    for (const auto& c : r.classes) class_ids.insert(c.class_id);
  }
  auto fixed = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "| metric | layer | overall |";
  for (ClassId c : class_ids) out << " class " << c << " |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < class_ids.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& r : reports) {
    out << "| " << r.metric << (r.truncated ? " (truncated)" : "") << " | " << r.layer_id << " | "
        << (r.overall_mean ? fixed(*r.overall_mean) : "n/a") << " |";
    std::map<ClassId, const ClassConvexity*> by_id;
    for (const auto& c : r.classes) by_id[c.class_id] = &c;
    for (ClassId id : class_ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end() || it->second->absent || it->second->n_pairs == 0) {
        out << " n/a |";
      } else {
        out << ' ' << fixed(it->second->mean) << " ± " << fixed(it->second->sem) << " |";
      }
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json to_json(const BaselineResult& b) {
  nlohmann::ordered_json j;
  j["n_repeats"] = b.n_repeats;
  j["repeat_means"] = nlohmann::ordered_json::array();
  for (double m : b.repeat_means) j["repeat_means"].push_back(number_or_null(m));
  j["grand_mean"] = number_or_null(b.grand_mean);
  j["grand_sem"] = number_or_null(b.grand_sem);
  j["reference"] = b.reference;
  return j;
}

nlohmann::ordered_json to_json(const HubnessReport& h, bool full) {
  nlohmann::ordered_json j;
  j["k"] = h.k;
  j["n_points"] = h.k_occurrence.size();
  j["k_skewness"] = number_or_null(h.k_skewness);
  j["robinhood"] = number_or_null(h.robinhood);
  if (!h.k_occurrence.empty()) {
    std::uint32_t lo = h.k_occurrence.front();
    std::uint32_t hi = lo;
    std::uint64_t total = 0;
    for (std::uint32_t o : h.k_occurrence) {
      lo = std::min(lo, o);
      hi = std::max(hi, o);
      total += o;
    }
    j["k_occurrence_min"] = lo;
    j["k_occurrence_max"] = hi;
    j["k_occurrence_total"] = total;
  }
  if (full) j["k_occurrence"] = h.k_occurrence;
  return j;
}

nlohmann::ordered_json to_json(const CorrelationResult& c) {
  nlohmann::ordered_json j;
  j["n"] = c.n;
  j["r"] = number_or_null(c.r);
  j["ci_low"] = number_or_null(c.ci_low);
  j["ci_high"] = number_or_null(c.ci_high);
  j["alpha"] = c.alpha;
  return j;
}

nlohmann::ordered_json to_json(std::span<const SweepRow> rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    arr.push_back({{"n", row.n},
                   {"k", row.k},
                   {"convexity", row.convexity},
                   {"existing_only", row.existing_only},
                   {"path_exists", row.path_exists},
                   {"n_components", row.n_components}});
  }
  return arr;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "n,k,convexity,existing_only,path_exists,n_components\n";
  for (const auto& row : rows) {
    out << row.n << ',' << row.k << ',' << format_number(row.convexity) << ',' << format_number(row.existing_only)
        << ',' << format_number(row.path_exists) << ',' << row.n_components << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lcx
