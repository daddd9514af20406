#include "plab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "plab/ops.hpp"
#include "plab/parallel.hpp"

namespace plab {

InstabilityReport grad_norms_per_class(const Model& m, const Tensor& x, const Tensor& confidences) {
  Rng unused(0);
  const ForwardTrace trace = forward_trace(m, x, NoiseConfig{}, unused, Mode::eval);
  const Tensor probs = softmax(trace.logits);
  const Tensor& conf = confidences.empty() ? probs : confidences;
  if (conf.size() != m.num_classes) throw DimensionError("confidences must have one entry per class");

  InstabilityReport r;
  r.m1_per_class.resize(m.num_classes);
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    Tensor g = probs;
    g[c] -= 1.0;
    r.m1_per_class[c] = l2_norm(backward(m, trace, g, false).grad_x);
  }
  r.min_class = static_cast<std::size_t>(std::min_element(r.m1_per_class.begin(), r.m1_per_class.end()) -
                                         r.m1_per_class.begin());
  r.confident_class = argmax(conf);
  r.anomaly = r.min_class != r.confident_class;
  return r;
}

HessianResult power_iteration_hvp(const GradientFn& grad, const Tensor& x, const HessianConfig& cfg) {
  if (cfg.iters < 1) throw ParameterError("power iteration needs iters >= 1");
  if (!(cfg.fd_step > 0.0)) throw ParameterError("fd_step must be positive");
  const double h = cfg.fd_step * (1.0 + linf_norm(x));

  Rng rng(cfg.seed, 0x4e55);
  Tensor v = sample(rng, Distribution{NoiseKind::gauss, 1.0}, x.shape());
  v = (1.0 / l2_norm(v)) * v;

  HessianResult r;
  double previous = 0.0;
  for (std::size_t k = 0; k < cfg.iters; ++k) {
    Tensor plus = x, minus = x;
    axpy(h, v, plus);
    axpy(-h, v, minus);
    Tensor hv = (1.0 / (2.0 * h)) * (grad(plus) - grad(minus));
    if (!all_finite(hv)) {
      std::ostringstream os;
      os << "non-finite Hessian-vector product at iteration " << k << " (h = " << h << ", ||x||_inf = "
         << linf_norm(x) << ")";
      throw NumericalError(os.str());
    }
    const double lambda = dot(v, hv);
    r.eigenvalue = lambda;
    r.iterations = k + 1;
    r.vector = v;
    const double norm = l2_norm(hv);
    if (norm == 0.0) {
      r.converged = true;
      break;
    }
    if (k > 0 && std::abs(lambda - previous) <= cfg.tol * std::abs(lambda)) {
      r.converged = true;
      break;
    }
    previous = lambda;
    v = (1.0 / norm) * hv;
  }
  return r;
}

double top_hessian_eig(const Model& m, const Tensor& x, std::size_t cls, const HessianConfig& cfg) {
  if (cls >= m.num_classes) throw ArgumentError("class index out of range");
  const GradientFn grad = [&](const Tensor& z) {
    Rng unused(0);
    return loss_and_grads(m, z, cls, NoiseConfig{}, unused, Mode::eval, false).grad_x;
  };
  return power_iteration_hvp(grad, x, cfg).eigenvalue;
}

InstabilityRow instability_row(const Model& m, const Tensor& x, std::size_t orig_label, std::size_t example_id,
                               bool adversarial, const HessianConfig& cfg) {
  const InstabilityReport rep = grad_norms_per_class(m, x);
  InstabilityRow row;
  row.example_id = example_id;
  row.adversarial = adversarial;
  row.m1_orig = rep.m1_per_class.at(orig_label);
  row.m1_adv_class = rep.m1_per_class[rep.confident_class];
  row.m1_min_class = rep.min_class;
  row.m2 = top_hessian_eig(m, x, orig_label, cfg);
  row.anomaly = rep.anomaly;
  return row;
}

double anomaly_rate(const std::vector<InstabilityRow>& rows) {
  if (rows.empty()) throw ArgumentError("anomaly rate of an empty set");
  const auto n = std::count_if(rows.begin(), rows.end(), [](const InstabilityRow& r) { return r.anomaly; });
  return 100.0 * static_cast<double>(n) / static_cast<double>(rows.size());
}

bool RecoveryCurve::has_window() const {
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    if (freq_original[i] > freq_adversarial[i]) return true;
  return false;
}

RecoveryCurve recovery_window(const Model& m, const Tensor& x_orig, const Tensor& x_adv, std::size_t orig_label,
                              std::size_t adv_label, const std::vector<double>& sigmas, std::size_t trials,
                              const Rng& rng) {
  if (trials < 1) throw ArgumentError("recovery window needs trials >= 1");
  require_same_shape(x_orig, x_adv, "recovery_window");
  if (argmax(forward(m, x_adv)) == orig_label) {
    throw ArgumentError("recovery window: x_adv is classified as the original label");
  }
  RecoveryCurve curve;
  curve.sigmas = sigmas;
  curve.trials = trials;
  for (std::size_t s = 0; s < sigmas.size(); ++s) {
    const Distribution dist{NoiseKind::gauss, sigmas[s]};
    std::vector<std::size_t> pred(trials);
    parallel_for(trials, [&](std::size_t t) {
      Rng r = rng.derive(s, t);
      pred[t] = argmax(forward(m, clamp(x_adv + sample(r, dist, x_adv.shape()), 0.0, 1.0)));
    });
    const auto orig = static_cast<std::size_t>(std::count(pred.begin(), pred.end(), orig_label));
    const auto adv = static_cast<std::size_t>(std::count(pred.begin(), pred.end(), adv_label));
    curve.freq_original.push_back(orig);
    curve.freq_adversarial.push_back(adv);
    curve.freq_other.push_back(trials - orig - adv);
  }
  return curve;
}

std::vector<SweepRow> channel_sweep(const Model& m, const Channel& family, const std::vector<double>& strengths,
                                    const std::vector<Tensor>& adv_set, const std::vector<Tensor>& clean_set,
                                    const std::vector<int>& labels, const Rng& rng, std::size_t trials) {
  if (adv_set.empty() || clean_set.empty()) throw ArgumentError("channel sweep needs non-empty example sets");
  if (adv_set.size() != labels.size() || clean_set.size() != labels.size()) {
    throw ArgumentError("channel sweep: sets and labels differ in count");
  }
  if (trials < 1) throw ArgumentError("channel sweep needs trials >= 1");
  std::vector<SweepRow> rows;
  for (std::size_t j = 0; j < strengths.size(); ++j) {
    const Channel c = family.with_strength(strengths[j]);
    c.validate();
    const DefenseConfig d{c, NoiseConfig{}, 1};
    SweepRow row;
    row.family = c.family();
    row.strength = strengths[j];
    row.delta_c = channel_distortion(c, clean_set, rng.derive(j, 0), trials);
    const std::size_t draws = c.stochastic() ? trials : 1;
    for (std::size_t t = 0; t < draws; ++t) {
      row.clean_acc += evaluate_defense(m, d, clean_set, labels, rng.derive(j, 1).derive(t));
      row.adv_acc += evaluate_defense(m, d, adv_set, labels, rng.derive(j, 2).derive(t));
    }
    row.clean_acc /= static_cast<double>(draws);
    row.adv_acc /= static_cast<double>(draws);
    rows.push_back(row);
  }
  return rows;
}

std::size_t sweep_peak(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw ArgumentError("sweep_peak of an empty sweep");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].adv_acc > rows[best].adv_acc) best = i;
  return best;
}

double TransferMatrix::row_mean(std::size_t r) const {
  const auto& row = cells.at(r);
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

TransferMatrix transfer_matrix(const Model& m, const std::vector<TransferRow>& rows,
                               const std::vector<std::pair<std::string, DefenseConfig>>& cols,
                               const std::vector<Tensor>& xs, const std::vector<int>& labels, const Rng& rng) {
  if (xs.empty() || xs.size() != labels.size()) throw ArgumentError("transfer matrix needs a labelled example set");
  TransferMatrix tm;
  for (const auto& c : cols) tm.cols.push_back(c.first);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    tm.rows.push_back(rows[r].name);
    std::vector<Tensor> set = xs;
    if (rows[r].attack) {
      const AttackConfig& cfg = *rows[r].attack;
      parallel_for(xs.size(), [&](std::size_t i) {
        Rng ar = rng.derive(1, r).derive(i);
        set[i] = run_attack(m, xs[i], static_cast<std::size_t>(labels[i]), cfg, NoiseConfig{}, ar).x_adv;
      });
    }
    std::vector<double> cells;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      cells.push_back(evaluate_defense(m, cols[c].second, set, labels, rng.derive(2, c)));
    }
    tm.cells.push_back(std::move(cells));
  }
  return tm;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ArgumentError("spearman needs two equal-length samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace plab
