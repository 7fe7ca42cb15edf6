#include "compbench/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>

#include "compbench/coat.hpp"
#include "compbench/error.hpp"
#include "compbench/svg.hpp"

namespace compbench {

namespace {

using ojson = nlohmann::ordered_json;

const char* kMetrics[] = {"coat", "tre"};

const std::optional<MetricScores>& metric_of(const EncoderScores& e, const std::string& metric) {
  return metric == "coat" ? e.coat : e.tre;
}

std::string two_dec(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  if (std::string_view(buf) == "-0.00") return "0.00";
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

MetricScores read_scores_csv(const std::filesystem::path& path, std::size_t expected_cols) {
  std::ifstream in(path);
  if (!in) throw MissingDependency("cannot open " + path.string());
  MetricScores m;
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != expected_cols) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(expected_cols) + " fields");
    }
    if (f[1].empty()) {
      ++m.n_degenerate;
      continue;
    }
    try {
      m.ids.push_back(f[0]);
      m.scores.push_back(std::stod(f[1]));
      m.entropy.push_back(std::stod(f[2]));
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return m;
}

std::map<std::string, std::string> read_provenance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingDependency("cannot open " + path.string());
  try {
    const auto j = ojson::parse(in);
    return j.at("provenance").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

}  // namespace

std::vector<std::string> report_order(std::vector<std::string> names) {
  auto rank = [](const std::string& n) { return n == "downsample" ? 0 : n == "random" ? 1 : 2; };
  std::sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
    if (rank(a) != rank(b)) return rank(a) < rank(b);
    return a < b;
  });
  return names;
}

RunReport build_report(const std::vector<EncoderScores>& encoders,
                       const std::map<std::string, std::string>& run_provenance) {
  if (encoders.empty()) throw ArgumentError("build_report: no encoders");
  RunReport r;
  r.provenance = run_provenance;

  // Encoders scored on the same metric must share that metric's pool provenance.
  std::ostringstream diff;
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    for (std::size_t j = i + 1; j < encoders.size(); ++j) {
      for (const auto& [k, va] : encoders[i].provenance) {
        const auto it = encoders[j].provenance.find(k);
        if (it != encoders[j].provenance.end() && it->second != va) {
          diff << "\n  " << k << ": " << encoders[i].name << "=" << va << " vs " << encoders[j].name << "="
               << it->second;
        }
      }
    }
  }
  if (!diff.str().empty()) throw IntegrityError("score files come from different pools:" + diff.str());

  std::vector<std::string> names;
  std::unordered_map<std::string, const EncoderScores*> by_name;
  for (const auto& e : encoders) {
    if (!by_name.emplace(e.name, &e).second) throw ArgumentError("duplicate encoder " + e.name);
    names.push_back(e.name);
  }
  names = report_order(names);

  for (const auto& n : names) {
    const auto& e = *by_name.at(n);
    EncoderRow row{n, {}, {}, {}, {}, 0, 0};
    if (e.coat) {
      const auto [mean, sd] = mean_std(e.coat->scores);
      row.coat_mean = mean;
      row.coat_std = sd;
      row.coat_n = e.coat->scores.size();
    }
    if (e.tre) {
      const auto [mean, sd] = mean_std(e.tre->scores);
      row.tre_mean = mean;
      row.tre_std = sd;
      row.tre_n = e.tre->scores.size();
    }
    r.rows.push_back(row);

    for (const char* metric : kMetrics) {
      const auto& m = metric_of(e, metric);
      if (!m || m->scores.empty()) continue;
      r.boxes.push_back({n, metric, stats::box_summary(m->scores)});
      RegressionRow reg{n, metric, std::nullopt};
      try {
        if (m->scores.size() >= 3) reg.fit = stats::ols_fit(m->entropy, m->scores);
      } catch (const DegenerateError&) {
        // Constant diversity: no fit.
      }
      r.regressions.push_back(reg);
    }
  }

  for (const char* metric : kMetrics) {
    std::vector<PairwiseRow> rows;
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = i + 1; j < names.size(); ++j) {
        const auto& ma = metric_of(*by_name.at(names[i]), metric);
        const auto& mb = metric_of(*by_name.at(names[j]), metric);
        if (!ma || !mb) continue;
        std::unordered_map<std::string, double> lookup;
        for (std::size_t k = 0; k < mb->ids.size(); ++k) lookup.emplace(mb->ids[k], mb->scores[k]);
        std::vector<double> a, b;
        for (std::size_t k = 0; k < ma->ids.size(); ++k) {
          const auto it = lookup.find(ma->ids[k]);
          if (it == lookup.end()) continue;
          a.push_back(ma->scores[k]);
          b.push_back(it->second);
        }
        if (a.size() < 2) continue;
        const auto t = stats::paired_t(a, b);
        rows.push_back({metric, {names[i], names[j], t.t, t.df, t.p_two_sided, t.p_two_sided, false, t.degenerate}, a.size()});
      }
    }
    std::vector<double> raw;
    for (const auto& row : rows) raw.push_back(row.test.p_two_sided);
    const auto adj = stats::bh_correct(raw);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k].test.p_bh_adjusted = adj[k];
      rows[k].test.significant = adj[k] <= 0.05;
      r.pairwise.push_back(rows[k]);
    }
  }
  return r;
}

void write_report(const std::filesystem::path& dir, const RunReport& report,
                  const std::vector<EncoderScores>& encoders) {
  std::filesystem::create_directories(dir);
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };

  {
    std::ostringstream csv, md;
    csv << "model,coat_mean,coat_std,coat_n,tre_mean,tre_std,tre_n\n";
    md << "| Model | A-COAT | A-TRE |\n|---|---|---|\n";
    for (const auto& row : report.rows) {
      csv << row.name << ',' << opt(row.coat_mean) << ',' << opt(row.coat_std) << ',' << row.coat_n << ','
          << opt(row.tre_mean) << ',' << opt(row.tre_std) << ',' << row.tre_n << '\n';
      auto cell = [&](const std::optional<double>& m, const std::optional<double>& s) {
        return m ? two_dec(*m) + " ± " + two_dec(*s) : std::string("–");
      };
      md << "| " << row.name << " | " << cell(row.coat_mean, row.coat_std) << " | "
         << cell(row.tre_mean, row.tre_std) << " |\n";
    }
    write_text(dir / "table.csv", csv.str());
    write_text(dir / "table.md", md.str());
  }
  {
    std::ostringstream csv;
    csv << "metric,model_a,model_b,n,t,df,p_two_sided,p_bh_adjusted,significant,degenerate\n";
    for (const auto& p : report.pairwise) {
      csv << p.metric << ',' << p.test.model_a << ',' << p.test.model_b << ',' << p.n << ','
          << format_double(p.test.t) << ',' << p.test.df << ',' << format_double(p.test.p_two_sided) << ','
          << format_double(p.test.p_bh_adjusted) << ',' << (p.test.significant ? 1 : 0) << ','
          << (p.test.degenerate ? 1 : 0) << '\n';
    }
    write_text(dir / "pairwise_tests.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "model,metric,n,slope,intercept,slope_ci_low,slope_ci_high,r2\n";
    for (const auto& g : report.regressions) {
      csv << g.model << ',' << g.metric << ',';
      if (g.fit) {
        csv << g.fit->n << ',' << format_double(g.fit->slope) << ',' << format_double(g.fit->intercept) << ','
            << format_double(g.fit->slope_ci_low) << ',' << format_double(g.fit->slope_ci_high) << ','
            << format_double(g.fit->r2) << '\n';
      } else {
        csv << ",,,,,\n";
      }
    }
    write_text(dir / "regressions.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "model,metric,n,median,q1,q3,notch_low,notch_high,whisker_low,whisker_high\n";
    for (const auto& b : report.boxes) {
      csv << b.model << ',' << b.metric << ',' << b.box.n << ',' << format_double(b.box.median) << ','
          << format_double(b.box.q1) << ',' << format_double(b.box.q3) << ',' << format_double(b.box.notch_low)
          << ',' << format_double(b.box.notch_high) << ',' << format_double(b.box.whisker_low) << ','
          << format_double(b.box.whisker_high) << '\n';
    }
    write_text(dir / "box_summaries.csv", csv.str());
  }

  std::unordered_map<std::string, const EncoderScores*> by_name;
  for (const auto& e : encoders) by_name.emplace(e.name, &e);
  for (const char* metric : kMetrics) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> scores;
    for (const auto& row : report.rows) {
      const auto& m = metric_of(*by_name.at(row.name), metric);
      if (!m || m->scores.empty()) continue;
      names.push_back(row.name);
      scores.push_back(m->scores);
    }
    if (names.empty()) continue;
    const std::string title = std::string(metric) == "coat" ? "A-COAT score distribution" : "A-TRE score distribution";
    write_text(dir / ("fig_box_" + std::string(metric) + ".svg"), svg::plot_box(names, scores, title));
  }
  for (const auto& g : report.regressions) {
    if (!g.fit) continue;
    const auto& m = *metric_of(*by_name.at(g.model), g.metric);
    const bool coat = g.metric == "coat";
    write_text(dir / ("fig_reg_" + safe_name(g.model) + "_" + g.metric + ".svg"),
               svg::plot_scatter_fit(m.entropy, m.scores, *g.fit,
                                     g.model + (coat ? ": A-COAT vs H_quad" : ": A-TRE vs H"),
                                     coat ? "H_quad" : "H", coat ? "A-COAT" : "A-TRE"));
  }

  ojson j;
  j["encoders"] = ojson::array();
  for (const auto& row : report.rows) {
    ojson e;
    e["name"] = row.name;
    auto put = [&](const char* key, const std::optional<double>& v) { e[key] = v ? ojson(*v) : ojson(nullptr); };
    put("coat_mean", row.coat_mean);
    put("coat_std", row.coat_std);
    e["coat_n"] = row.coat_n;
    put("tre_mean", row.tre_mean);
    put("tre_std", row.tre_std);
    e["tre_n"] = row.tre_n;
    j["encoders"].push_back(e);
  }
  j["pairwise"] = ojson::array();
  for (const auto& p : report.pairwise) {
    j["pairwise"].push_back({{"metric", p.metric}, {"model_a", p.test.model_a}, {"model_b", p.test.model_b},
                             {"n", p.n}, {"t", p.test.t}, {"df", p.test.df}, {"p_two_sided", p.test.p_two_sided},
                             {"p_bh_adjusted", p.test.p_bh_adjusted}, {"significant", p.test.significant}});
  }
  j["regressions"] = ojson::array();
  for (const auto& g : report.regressions) {
    ojson e = {{"model", g.model}, {"metric", g.metric}};
    if (g.fit) {
      e["n"] = g.fit->n;
      e["slope"] = g.fit->slope;
      e["intercept"] = g.fit->intercept;
      e["slope_ci"] = {g.fit->slope_ci_low, g.fit->slope_ci_high};
      e["r2"] = g.fit->r2;
    }
    j["regressions"].push_back(e);
  }
  j["provenance"] = report.provenance;
  // Infinite t (exact-difference pairs) is not representable in JSON; nlohmann writes null.
  write_text(dir / "report.json", j.dump(2) + "\n");
}

EncoderScores load_encoder_scores(const std::filesystem::path& dir, const std::string& name) {
  EncoderScores e;
  e.name = name;
  bool any = false;
  if (std::filesystem::exists(dir / "coat_scores.csv")) {
    e.coat = read_scores_csv(dir / "coat_scores.csv", 7);
    e.provenance = read_provenance(dir / "coat_summary.json");
    any = true;
  }
  if (std::filesystem::exists(dir / "tre_scores.csv")) {
    e.tre = read_scores_csv(dir / "tre_scores.csv", 7);
    auto prov = read_provenance(dir / "tre_summary.json");
    e.provenance.insert(prov.begin(), prov.end());
    any = true;
  }
  if (!any) throw MissingDependency("no score files for encoder " + name + " in " + dir.string());
  return e;
}

}  // namespace compbench
