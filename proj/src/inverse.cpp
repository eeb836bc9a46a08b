#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cryomap/capacity_map.hpp"
#include "cryomap/error.hpp"

namespace cryomap {

namespace {

struct Term {
  std::size_t field;
  double observed;
  double weight;
};

double halton(std::size_t i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

class Search {
 public:
  Search(const CapacityMap& m, std::vector<Term> terms) : m_(m), terms_(std::move(terms)) {
    for (StageId s : m.grid().active_stages()) dims_.push_back(index(s));
    for (StageId s : kStages) base_q_[index(s)] = m.grid().axis(s).front();
  }

  std::size_t dims() const { return dims_.size(); }

  std::array<double, kStageCount> to_load(const std::vector<double>& x) const {
    auto q = base_q_;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      const auto& axis = m_.grid().axis(static_cast<StageId>(dims_[k]));
      q[dims_[k]] = axis.front() + x[k] * (axis.back() - axis.front());
    }
    return q;
  }

  double objective(const std::vector<double>& x) {
    ++evaluations;
    PlatformState st;
    if (m_.try_query(to_load(x), st) != QueryStatus::Ok) return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (const auto& t : terms_) {
      double r = t.weight * (st.values[t.field] - t.observed);
      acc += r * r;
    }
    return acc;
  }

  // Hooke-Jeeves pattern search in normalized coordinates.
  struct Outcome {
    std::vector<double> x;
    double f;
    bool improved;
  };

  Outcome run(std::vector<double> base, std::vector<double> steps, double tol, std::size_t budget) {
    const std::size_t start_evals = evaluations;
    double f_base = objective(base);
    bool improved = false;
    auto explore = [&](std::vector<double> x, double fx) {
      for (std::size_t k = 0; k < x.size(); ++k) {
        for (double dir : {1.0, -1.0}) {
          double v = std::clamp(x[k] + dir * steps[k], 0.0, 1.0);
          if (v == x[k]) continue;
          double old = x[k];
          x[k] = v;
          double f = objective(x);
          if (f < fx) {
            fx = f;
            break;
          }
          x[k] = old;
        }
      }
      return std::make_pair(x, fx);
    };
    auto max_step = [&] { return *std::max_element(steps.begin(), steps.end()); };

    while (max_step() > tol && evaluations - start_evals < budget) {
      auto [x_new, f_new] = explore(base, f_base);
      if (!(f_new < f_base)) {
        for (double& s : steps) s *= 0.5;
        continue;
      }
      improved = true;
      while (evaluations - start_evals < budget) {
        std::vector<double> pattern(base.size());
        for (std::size_t k = 0; k < base.size(); ++k) {
          pattern[k] = std::clamp(2.0 * x_new[k] - base[k], 0.0, 1.0);
        }
        base = x_new;
        f_base = f_new;
        double f_pattern = objective(pattern);
        auto [x_e, f_e] = explore(pattern, f_pattern);
        if (!(f_e < f_base)) break;
        x_new = x_e;
        f_new = f_e;
      }
    }
    return {base, f_base, improved};
  }

  std::size_t evaluations = 0;

 private:
  const CapacityMap& m_;
  std::vector<Term> terms_;
  std::vector<std::size_t> dims_;
  std::array<double, kStageCount> base_q_{};
};

bool lex_less(const LoadVector& a, const LoadVector& b) {
  return std::lexicographical_compare(a.values().begin(), a.values().end(), b.values().begin(),
                                      b.values().end());
}

}  // namespace

InferResult infer_load(const CapacityMap& m, const std::map<Field, double>& observed,
                       const std::map<Field, double>& weights, const InferOptions& opts) {
  if (observed.empty()) throw Error(ErrorCode::InvalidArgument, "no observed fields given");
  if (opts.starts == 0) throw Error(ErrorCode::InvalidArgument, "at least one start is required");
  std::vector<Term> terms;
  for (const auto& [f, v] : observed) {
    if (!m.has_field(f)) {
      throw Error(ErrorCode::InvalidArgument,
                  "observed field " + std::string(field_name(f)) + " is absent from the map");
    }
    auto [lo, hi] = m.field_range(f);
    if (!(v >= lo && v <= hi)) {
      throw Error(ErrorCode::InvalidArgument,
                  "observed " + std::string(field_name(f)) + " = " + std::to_string(v) +
                      " lies outside the map range [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
    }
    double w;
    if (auto it = weights.find(f); it != weights.end()) {
      w = it->second;
    } else {
      w = is_temperature(f) ? 1.0 / v : 0.0;
    }
    if (!(std::isfinite(w) && w >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "weights must be finite and non-negative");
    }
    terms.push_back({index(f), v, w});
  }

  Search search(m, terms);
  const auto& g = m.grid();
  const std::size_t k = search.dims();

  InferResult out;
  if (k == 0) {
    std::vector<double> none;
    double f = search.objective(none);
    out.q = LoadVector(search.to_load(none));
    out.residual = std::sqrt(f / static_cast<double>(terms.size()));
    out.evaluations = search.evaluations;
    return out;
  }

  // Starting points: centers of distinct valid cells picked by a Halton walk.
  static constexpr unsigned kPrimes[kStageCount] = {2, 3, 5, 7, 11};
  const auto& active = g.active_stages();
  std::vector<std::vector<double>> starts;
  std::set<NodeIndex> used;
  for (std::size_t i = 1; starts.size() < opts.starts && i <= 256 * opts.starts; ++i) {
    NodeIndex lower{};
    std::vector<double> x(k);
    for (std::size_t d = 0; d < k; ++d) {
      const auto& axis = g.axis(active[d]);
      const std::size_t cells = axis.size() - 1;
      auto c = std::min(cells - 1, static_cast<std::size_t>(halton(i, kPrimes[d]) * cells));
      lower[index(active[d])] = static_cast<std::uint32_t>(c);
      double mid = 0.5 * (axis[c] + axis[c + 1]);
      x[d] = (mid - axis.front()) / (axis.back() - axis.front());
    }
    if (!g.cell_valid(lower) || !used.insert(lower).second) continue;
    starts.push_back(std::move(x));
  }
  if (starts.empty()) {
    throw Error(ErrorCode::NoValidStart, "the map has no valid cell to start the search from");
  }

  std::vector<double> steps(k);
  for (std::size_t d = 0; d < k; ++d) steps[d] = 0.5 / static_cast<double>(g.axis(active[d]).size() - 1);

  struct Candidate {
    LoadVector q;
    std::vector<double> x;
    double f;
  };
  std::vector<Candidate> found;
  bool any_improved = false;
  for (const auto& x0 : starts) {
    auto r = search.run(x0, steps, opts.step_tolerance, opts.max_evaluations_per_start);
    any_improved = any_improved || r.improved;
    found.push_back({LoadVector(search.to_load(r.x)), r.x, r.f});
  }
  std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
    if (a.f != b.f) return a.f < b.f;
    return lex_less(a.q, b.q);
  });
  const Candidate& best = found.front();
  if (!any_improved && best.f > 0.0) {
    throw Error(ErrorCode::NoImprovement, "no start improved on its initial objective");
  }

  const double n = static_cast<double>(terms.size());
  out.q = best.q;
  out.residual = std::sqrt(best.f / n);
  out.evaluations = search.evaluations;

  const double cutoff = std::max(2.0 * best.f, 1e-9);
  auto distinct = [](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t d = 0; d < a.size(); ++d) {
      if (std::abs(a[d] - b[d]) > 1e-3) return true;
    }
    return false;
  };
  std::vector<const Candidate*> kept{&best};
  for (std::size_t i = 1; i < found.size(); ++i) {
    const auto& c = found[i];
    if (c.f > cutoff) break;
    if (std::all_of(kept.begin(), kept.end(), [&](const Candidate* p) { return distinct(p->x, c.x); })) {
      kept.push_back(&c);
      out.alternatives.push_back({c.q, std::sqrt(c.f / n)});
    }
  }
  out.non_unique = !out.alternatives.empty();
  return out;
}

InferResult infer_load(const CapacityMap& m, const std::map<StageId, double>& observed_K,
                       const std::map<StageId, double>& weights, std::size_t starts) {
  std::map<Field, double> obs, w;
  for (const auto& [s, v] : observed_K) obs[temperature_field(s)] = v;
  for (const auto& [s, v] : weights) w[temperature_field(s)] = v;
  InferOptions opts;
  opts.starts = starts;
  return infer_load(m, obs, w, opts);
}

}  // namespace cryomap
