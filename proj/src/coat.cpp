#include "compbench/coat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

namespace compbench {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

std::vector<double> CoatResult::valid_scores() const {
  std::vector<double> out;
  for (const auto& it : items) {
    if (it.score) out.push_back(*it.score);
  }
  return out;
}

std::vector<double> CoatResult::valid_entropies() const {
  std::vector<double> out;
  for (const auto& it : items) {
    if (it.score) out.push_back(it.entropy.aggregate);
  }
  return out;
}

CoatResult evaluate_coat(const EmbeddingSet& embeddings, const std::vector<Quadruple>& quads,
                         const std::vector<EntropyProfile>& profiles) {
  if (quads.size() != profiles.size()) throw ArgumentError("evaluate_coat: quads/profiles size mismatch");

  std::vector<std::string> missing;
  for (const auto& q : quads) {
    for (const auto* id : {&q.a_id, &q.b_id, &q.c_id, &q.d_id}) {
      if (!embeddings.contains(*id)) missing.push_back(*id);
    }
  }
  if (!missing.empty()) {
    std::string msg = "encoder " + embeddings.encoder_name + " is missing " +
                      std::to_string(missing.size()) + " embeddings:";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += " " + missing[i];
    if (missing.size() > 10) msg += " ...";
    throw IntegrityError(msg);
  }

  std::vector<std::size_t> order(quads.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return quads[a].id < quads[b].id; });

  CoatResult r;
  r.items.reserve(quads.size());
  for (std::size_t i : order) {
    const auto& q = quads[i];
    r.items.push_back({q.id,
                       coat_score(embeddings.at(q.a_id), embeddings.at(q.b_id), embeddings.at(q.c_id),
                                  embeddings.at(q.d_id)),
                       profiles[i]});
  }
  const auto scores = r.valid_scores();
  r.n_valid = scores.size();
  r.n_degenerate = r.items.size() - r.n_valid;
  std::tie(r.mean, r.std) = mean_std(scores);
  return r;
}

void write_coat_csv(const std::filesystem::path& path, const CoatResult& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "quad_id,score,H_quad,H_timbre_quad,H_pitch_quad,H_rate_quad,H_amp_quad\n";
  for (const auto& it : r.items) {
    out << it.quad_id << ',' << (it.score ? format_double(*it.score) : "") << ','
        << format_double(it.entropy.aggregate);
    for (double h : it.entropy.per_attribute) out << ',' << format_double(h);
    out << '\n';
  }
}

}  // namespace compbench
