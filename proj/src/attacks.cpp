#include "plab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "plab/defenses.hpp"
#include "plab/ops.hpp"

namespace plab {

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::pgd: return "pgd";
    case AttackKind::cw_l2: return "cw";
    case AttackKind::boundary: return "boundary";
    case AttackKind::contrast: return "contrast";
    case AttackKind::pixel: return "pixel";
    case AttackKind::translate: return "translate";
  }
  return "?";
}

AttackConfig AttackConfig::defaults(AttackKind kind) {
  AttackConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case AttackKind::fgsm:
      cfg.steps = 1;
      cfg.random_start = false;
      cfg.step_size = cfg.eps;
      break;
    case AttackKind::pgd: break;
    case AttackKind::cw_l2:
      cfg.steps = 1000;
      cfg.binary_steps = 5;
      break;
    case AttackKind::boundary: cfg.steps = 2000; break;
    case AttackKind::contrast: cfg.steps = 100; break;
    case AttackKind::pixel: cfg.steps = 50; break;
    case AttackKind::translate:
      cfg.eps = 3;
      cfg.steps = 0;
      break;
  }
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value, const std::string& descriptor) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("attack descriptor '" + descriptor + "': key '" + key + "' has non-numeric value '" + value +
                      "'");
  }
}

std::size_t parse_count(const std::string& key, const std::string& value, const std::string& descriptor) {
  const double v = parse_number(key, value, descriptor);
  if (v < 0 || v != std::floor(v)) {
    throw ConfigError("attack descriptor '" + descriptor + "': key '" + key + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

AttackConfig AttackConfig::parse(const std::string& descriptor) {
  std::vector<std::string> parts;
  {
    std::string cur;
    for (char ch : descriptor) {
      if (ch == '+') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    parts.push_back(cur);
  }
  const std::string head = trim(parts[0]);
  const auto colon = head.find(':');
  const std::string name = head.substr(0, colon);
  static const std::map<std::string, AttackKind> kinds{
      {"fgsm", AttackKind::fgsm},         {"pgd", AttackKind::pgd},           {"cw", AttackKind::cw_l2},
      {"cw_l2", AttackKind::cw_l2},       {"boundary", AttackKind::boundary}, {"contrast", AttackKind::contrast},
      {"pixel", AttackKind::pixel},       {"translate", AttackKind::translate}};
  const auto it = kinds.find(name);
  if (it == kinds.end()) {
    throw ConfigError("unknown attack '" + name + "' (expected fgsm, pgd, cw, boundary, contrast, pixel or translate)");
  }
  AttackConfig cfg = defaults(it->second);

  if (colon != std::string::npos) {
    std::stringstream ss(head.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("attack descriptor '" + descriptor + "': expected key=value");
      const std::string key = trim(item.substr(0, eq));
      const std::string value = trim(item.substr(eq + 1));
      if (key == "eps") {
        cfg.eps = parse_number(key, value, descriptor);
      } else if (key == "steps" || key == "iters") {
        cfg.steps = parse_count(key, value, descriptor);
      } else if (key == "step" || key == "step_size") {
        cfg.step_size = parse_number(key, value, descriptor);
      } else if (key == "rs" || key == "random_start") {
        cfg.random_start = parse_count(key, value, descriptor) != 0;
      } else if (key == "c") {
        cfg.c_init = parse_number(key, value, descriptor);
      } else if (key == "bs") {
        cfg.binary_steps = parse_count(key, value, descriptor);
      } else if (key == "lr") {
        cfg.lr = parse_number(key, value, descriptor);
      } else if (key == "kappa") {
        cfg.kappa = parse_number(key, value, descriptor);
      } else if (key == "votes") {
        cfg.vote_count = parse_count(key, value, descriptor);
      } else if (key == "init") {
        cfg.init_trials = parse_count(key, value, descriptor);
      } else if (key == "target") {
        cfg.contrast_target = parse_number(key, value, descriptor);
      } else {
        throw ConfigError("attack descriptor '" + descriptor + "': unknown key '" + key + "'");
      }
    }
  }
  if (cfg.kind == AttackKind::fgsm) {
    cfg.steps = 1;
    cfg.step_size = cfg.eps;
    cfg.random_start = false;
  }
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const std::string p = trim(parts[i]);
    const auto eq = p.find('=');
    const std::string key = p.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : p.substr(eq + 1);
    if (key == "eot") {
      cfg.eot_samples = parse_count(key, value, descriptor);
    } else if (key == "channel") {
      cfg.channel_in_loop = Channel::parse(value);
    } else {
      throw ConfigError("attack descriptor '" + descriptor + "': unknown suffix '+" + key + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("attack descriptor '" + descriptor + "': " + e.what());
  }
  return cfg;
}

std::string AttackConfig::descriptor() const {
  std::string d = to_string(kind);
  switch (kind) {
    case AttackKind::fgsm: d += ":eps=" + num(eps); break;
    case AttackKind::pgd:
      d += ":eps=" + num(eps) + ",steps=" + std::to_string(steps) + ",step=" + num(step_size) +
           ",rs=" + (random_start ? "1" : "0");
      break;
    case AttackKind::cw_l2:
      d += ":c=" + num(c_init) + ",steps=" + std::to_string(steps) + ",bs=" + std::to_string(binary_steps) +
           ",kappa=" + num(kappa) + ",lr=" + num(lr);
      break;
    case AttackKind::boundary:
      d += ":iters=" + std::to_string(steps) + ",init=" + std::to_string(init_trials);
      break;
    case AttackKind::contrast: d += ":steps=" + std::to_string(steps) + ",target=" + num(contrast_target); break;
    case AttackKind::pixel: d += ":steps=" + std::to_string(steps); break;
    case AttackKind::translate: d += ":eps=" + num(eps); break;
  }
  if (vote_count != 11) d += ",votes=" + std::to_string(vote_count);
  if (eot_samples != 1) d += "+eot=" + std::to_string(eot_samples);
  if (channel_in_loop) d += "+channel=" + channel_in_loop->descriptor();
  return d;
}

void AttackConfig::validate() const {
  if (!(eps >= 0.0) || !(step_size >= 0.0) || !(lr >= 0.0)) {
    throw ParameterError("eps, step_size and lr must be non-negative");
  }
  if (eot_samples < 1) throw ParameterError("eot_samples must be >= 1");
  if (vote_count < 1) throw ParameterError("vote_count must be >= 1");
  if (!(c_init >= 0.0)) throw ParameterError("c_init must be non-negative");
  if (channel_in_loop) channel_in_loop->validate();
}

bool randomized_target(const NoiseConfig& noise, const std::optional<Channel>& channel) {
  return noise.any() || (channel && channel->stochastic());
}

std::size_t target_prediction(const Model& m, const Tensor& x, const NoiseConfig& noise,
                              const std::optional<Channel>& channel, std::size_t votes, Rng& rng,
                              std::size_t* queries) {
  const bool randomized = randomized_target(noise, channel);
  DefenseConfig d{channel, noise, randomized ? std::max<std::size_t>(votes, 1) : 1};
  if (queries) *queries += d.trials;
  const Rng stream = rng.derive(rng.next());
  return defend_predict(m, d, x, stream).label;
}

AveragedGradient averaged_gradient(const Model& m, const Tensor& x, const NoiseConfig& noise,
                                   const std::optional<Channel>& channel, std::size_t samples, Rng& rng,
                                   const LogitObjective& objective) {
  if (samples < 1) throw ParameterError("gradient averaging needs samples >= 1");
  if (!randomized_target(noise, channel)) samples = 1;
  AveragedGradient out;
  out.grad_x = Tensor(x.shape());
  for (std::size_t s = 0; s < samples; ++s) {
    const Tensor input = channel ? apply_channel(*channel, x, rng) : x;
    const ForwardTrace trace = forward_trace(m, input, noise, rng, Mode::eval);
    Tensor grad_logits(trace.logits.shape());
    out.value += objective(trace.logits, grad_logits);
    Backprop bp = backward(m, trace, grad_logits, false);
    const Tensor g = channel ? channel_backward(*channel, x, bp.grad_x) : bp.grad_x;
    if (samples == 1) {
      out.grad_x = g;
      out.logits = trace.logits;
    } else {
      axpy(1.0, g, out.grad_x);
      if (out.logits.empty()) out.logits = Tensor(trace.logits.shape());
      axpy(1.0, trace.logits, out.logits);
    }
  }
  if (samples > 1) {
    const double inv = 1.0 / static_cast<double>(samples);
    out.value *= inv;
    out.grad_x = inv * out.grad_x;
    out.logits = inv * out.logits;
  }
  return out;
}

Tensor eot_grad(const Model& m, const Tensor& x, std::size_t label, const NoiseConfig& noise, Rng& rng,
                std::size_t samples, const std::optional<Channel>& channel) {
  if (samples < 1) throw ParameterError("eot_grad needs samples >= 1");
  const LogitObjective ce = [label](const Tensor& logits, Tensor& grad) {
    CrossEntropy r = cross_entropy(logits, label);
    grad = std::move(r.grad_logits);
    return r.loss;
  };
  return averaged_gradient(m, x, noise, channel, samples, rng, ce).grad_x;
}

namespace {

AttackResult finish(const Tensor& x, Tensor x_adv, bool success, std::size_t queries) {
  AttackResult r;
  r.delta_adv = l2_distance(x, x_adv);
  r.linf = linf_distance(x, x_adv);
  r.x_adv = std::move(x_adv);
  r.success = success;
  r.queries = queries;
  return r;
}

AttackResult failure(const Tensor& x, std::size_t queries) { return finish(x, x, false, queries); }

}  // namespace

AttackResult pgd(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg_in,
                 const NoiseConfig& noise, Rng& rng) {
  AttackConfig cfg = cfg_in;
  if (cfg.kind == AttackKind::fgsm) {
    cfg.steps = 1;
    cfg.step_size = cfg.eps;
    cfg.random_start = false;
  } else if (cfg.kind != AttackKind::pgd) {
    throw ArgumentError("pgd called with a non-gradient attack config");
  }
  cfg.validate();
  const double eps = cfg.eps;
  std::size_t queries = 0;

  Tensor adv = x;
  if (cfg.random_start && eps > 0.0) {
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = std::clamp(x[i] + rng.uniform(-eps, eps), 0.0, 1.0);
  }
  const std::size_t samples = randomized_target(noise, cfg.channel_in_loop) ? cfg.eot_samples : 1;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Tensor g = eot_grad(m, adv, label, noise, rng, cfg.eot_samples, cfg.channel_in_loop);
    queries += 2 * samples;
    for (std::size_t i = 0; i < adv.size(); ++i) {
      const double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
      const double v = std::clamp(adv[i] + cfg.step_size * s, x[i] - eps, x[i] + eps);
      adv[i] = std::clamp(v, 0.0, 1.0);
    }
  }
  const bool success =
      target_prediction(m, adv, noise, cfg.channel_in_loop, cfg.vote_count, rng, &queries) != label;
  return finish(x, std::move(adv), success, queries);
}

AttackResult cw_l2(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                   const NoiseConfig& noise, Rng& rng) {
  if (cfg.kind != AttackKind::cw_l2) throw ArgumentError("cw_l2 called with a non-CW attack config");
  cfg.validate();
  std::size_t queries = 0;
  if (target_prediction(m, x, noise, cfg.channel_in_loop, cfg.vote_count, rng, &queries) != label) {
    return finish(x, x, true, queries);
  }
  const bool randomized = randomized_target(noise, cfg.channel_in_loop);
  const std::size_t samples = randomized ? cfg.eot_samples : 1;
  const double kappa = cfg.kappa;

  // Margin objective max(Z_label - max_{i != label} Z_i, -kappa).
  const LogitObjective margin = [label, kappa](const Tensor& z, Tensor& grad) {
    std::size_t best = label == 0 ? 1 : 0;
    for (std::size_t i = 0; i < z.size(); ++i)
      if (i != label && z[i] > z[best]) best = i;
    const double mgn = z[label] - z[best];
    std::fill(grad.data().begin(), grad.data().end(), 0.0);
    if (mgn > -kappa) {
      grad[label] = 1.0;
      grad[best] = -1.0;
      return mgn;
    }
    return -kappa;
  };
  auto margin_of = [label](const Tensor& z) {
    double other = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < z.size(); ++i)
      if (i != label) other = std::max(other, z[i]);
    return z[label] - other;
  };

  const std::size_t n = x.size();
  std::vector<double> w0(n);
  for (std::size_t i = 0; i < n; ++i) w0[i] = std::atanh((2.0 * x[i] - 1.0) * (1.0 - 1e-6));

  double c = cfg.c_init;
  double lower = 0.0;
  double upper = 1e10;
  double best_l2 = std::numeric_limits<double>::infinity();
  Tensor best_x;
  const std::size_t rounds = std::max<std::size_t>(1, cfg.binary_steps);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

  for (std::size_t round = 0; round < rounds; ++round) {
    std::vector<double> w = w0, mom(n, 0.0), vel(n, 0.0);
    double b1 = 1.0, b2 = 1.0;
    bool found = false;
    Tensor xt(x.shape());
    for (std::size_t it = 0; it <= cfg.steps; ++it) {
      for (std::size_t i = 0; i < n; ++i) xt[i] = (std::tanh(w[i]) + 1.0) / 2.0;
      const AveragedGradient avg = averaged_gradient(m, xt, noise, cfg.channel_in_loop, samples, rng, margin);
      queries += 2 * samples;
      const double l2 = l2_distance(xt, x);
      // Randomized targets also need the vote: the averaged logits alone
      // over-credit iterates that sit on the boundary, the vote alone picks
      // up lucky draws.
      bool success_now = margin_of(avg.logits) <= -kappa && argmax(avg.logits) != label;
      if (randomized && success_now && l2 < best_l2) {
        success_now = target_prediction(m, xt, noise, cfg.channel_in_loop, cfg.vote_count, rng, &queries) != label;
      }
      if (success_now) {
        found = true;
        if (l2 < best_l2) {
          best_l2 = l2;
          best_x = xt;
        }
      }
      if (it == cfg.steps) break;
      b1 *= kBeta1;
      b2 *= kBeta2;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = std::tanh(w[i]);
        const double gx = 2.0 * (xt[i] - x[i]) + c * avg.grad_x[i];
        const double gw = gx * (1.0 - t * t) / 2.0;
        mom[i] = kBeta1 * mom[i] + (1.0 - kBeta1) * gw;
        vel[i] = kBeta2 * vel[i] + (1.0 - kBeta2) * gw * gw;
        const double mhat = mom[i] / (1.0 - b1);
        const double vhat = vel[i] / (1.0 - b2);
        w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + kAdamEps);
      }
    }
    if (cfg.binary_steps == 0) break;
    if (found) {
      upper = std::min(upper, c);
      c = (lower + upper) / 2.0;
    } else {
      lower = std::max(lower, c);
      c = upper < 1e9 ? (lower + upper) / 2.0 : c * 10.0;
    }
  }
  if (best_x.empty()) return failure(x, queries);
  return finish(x, std::move(best_x), true, queries);
}

AttackResult boundary_attack(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                             const NoiseConfig& noise, Rng& rng) {
  cfg.validate();
  std::size_t queries = 0;
  auto is_adv = [&](const Tensor& z) {
    return target_prediction(m, z, noise, cfg.channel_in_loop, cfg.vote_count, rng, &queries) != label;
  };
  if (is_adv(x)) return finish(x, x, true, queries);

  Tensor start;
  for (std::size_t t = 0; t < cfg.init_trials; ++t) {
    Tensor cand(x.shape());
    for (double& v : cand.data()) v = rng.uniform();
    if (is_adv(cand)) {
      start = std::move(cand);
      break;
    }
  }
  if (start.empty()) return failure(x, queries);

  auto blend = [&](double t) {
    Tensor b = x;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = (1.0 - t) * x[i] + t * start[i];
    return b;
  };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 25; ++i) {
    const double mid = (lo + hi) / 2.0;
    if (is_adv(blend(mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  Tensor adv = blend(hi);

  double spherical = cfg.spherical_step;
  double source = cfg.source_step;
  std::size_t sph_trials = 0, sph_hits = 0, src_trials = 0, src_hits = 0;
  for (std::size_t it = 0; it < cfg.steps; ++it) {
    const Tensor diff = x - adv;
    const double d = l2_norm(diff);
    if (d == 0.0) break;

    Tensor eta(x.shape());
    for (double& v : eta.data()) v = rng.gauss();
    axpy(-dot(eta, diff) / (d * d), diff, eta);
    const double en = l2_norm(eta);
    if (en == 0.0) continue;
    Tensor cand = adv;
    axpy(spherical * d / en, eta, cand);
    // Back onto the sphere of radius d around x.
    Tensor offset = cand - x;
    const double on = l2_norm(offset);
    cand = clamp(x + (d / on) * offset, 0.0, 1.0);

    ++sph_trials;
    if (is_adv(cand)) {
      ++sph_hits;
      Tensor step = cand;
      axpy(source, x - cand, step);
      step = clamp(step, 0.0, 1.0);
      ++src_trials;
      if (is_adv(step)) {
        ++src_hits;
        if (l2_distance(step, x) < d) adv = std::move(step);
      }
    }
    if (sph_trials == 10) {
      const double rate = static_cast<double>(sph_hits) / static_cast<double>(sph_trials);
      if (rate > 0.75) spherical *= 1.5;
      if (rate < 0.25) spherical /= 1.5;
      sph_trials = sph_hits = 0;
    }
    if (src_trials == 10) {
      const double rate = static_cast<double>(src_hits) / static_cast<double>(src_trials);
      if (rate > 0.75) source *= 1.5;
      if (rate < 0.25) source /= 1.5;
      src_trials = src_hits = 0;
    }
  }
  return finish(x, std::move(adv), true, queries);
}

Tensor contrast_reduce(const Tensor& x, double eps, double target) {
  Tensor out = x;
  for (double& v : out.data()) v = (1.0 - eps) * v + eps * target;
  return out;
}

Tensor translate_image(const Tensor& x, int dy, int dx) {
  if (x.rank() != 3) throw DimensionError("translate expects [C, H, W]");
  const auto h = static_cast<long>(x.dim(1));
  const auto w = static_cast<long>(x.dim(2));
  Tensor out(x.shape());
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (long i = 0; i < h; ++i)
      for (long j = 0; j < w; ++j) {
        const long si = i - dy, sj = j - dx;
        if (si >= 0 && si < h && sj >= 0 && sj < w) {
          out.at(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
              x.at(c, static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
        }
      }
  return out;
}

AttackResult simple_blackbox(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                             const NoiseConfig& noise, Rng& rng) {
  cfg.validate();
  std::size_t queries = 0;
  auto is_adv = [&](const Tensor& z) {
    return target_prediction(m, z, noise, cfg.channel_in_loop, cfg.vote_count, rng, &queries) != label;
  };
  switch (cfg.kind) {
    case AttackKind::contrast: {
      const std::size_t grid = std::max<std::size_t>(cfg.steps, 1);
      for (std::size_t i = 0; i <= grid; ++i) {
        const double eps = static_cast<double>(i) / static_cast<double>(grid);
        Tensor cand = contrast_reduce(x, eps, cfg.contrast_target);
        if (is_adv(cand)) return finish(x, std::move(cand), true, queries);
      }
      return failure(x, queries);
    }
    case AttackKind::pixel: {
      if (x.rank() != 3) throw DimensionError("pixel attack expects [C, H, W]");
      const std::size_t channels = x.dim(0), plane = x.dim(1) * x.dim(2);
      auto set_pixel = [&](Tensor& t, std::size_t p, double v) {
        for (std::size_t c = 0; c < channels; ++c) t[c * plane + p] = v;
      };
      auto confidence = [&](const Tensor& z) {
        ++queries;
        return softmax(forward(m, z))[label];
      };
      const double base = confidence(x);
      std::vector<double> drop(plane);
      std::vector<double> extreme(plane);
      for (std::size_t p = 0; p < plane; ++p) {
        double best_drop = -std::numeric_limits<double>::infinity();
        for (double v : {0.0, 1.0}) {
          Tensor cand = x;
          set_pixel(cand, p, v);
          const double dr = base - confidence(cand);
          if (dr > best_drop) {
            best_drop = dr;
            extreme[p] = v;
          }
        }
        drop[p] = best_drop;
      }
      std::vector<std::size_t> order(plane);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return drop[a] > drop[b]; });
      Tensor cand = x;
      for (std::size_t k = 0; k < std::min(cfg.steps, plane); ++k) {
        set_pixel(cand, order[k], extreme[order[k]]);
        if (is_adv(cand)) return finish(x, std::move(cand), true, queries);
      }
      return failure(x, queries);
    }
    case AttackKind::translate: {
      const int limit = static_cast<int>(cfg.eps);
      std::vector<std::pair<int, int>> shifts;
      for (int dy = -limit; dy <= limit; ++dy)
        for (int dx = -limit; dx <= limit; ++dx)
          if (dy != 0 || dx != 0) shifts.emplace_back(dy, dx);
      std::stable_sort(shifts.begin(), shifts.end(), [](const auto& a, const auto& b) {
        return std::abs(a.first) + std::abs(a.second) < std::abs(b.first) + std::abs(b.second);
      });
      for (const auto& [dy, dx] : shifts) {
        Tensor cand = translate_image(x, dy, dx);
        if (is_adv(cand)) return finish(x, std::move(cand), true, queries);
      }
      return failure(x, queries);
    }
    default: throw ArgumentError("simple_blackbox needs a contrast, pixel or translate config");
  }
}

AttackResult run_attack(const Model& m, const Tensor& x, std::size_t label, const AttackConfig& cfg,
                        const NoiseConfig& noise, Rng& rng) {
  switch (cfg.kind) {
    case AttackKind::fgsm:
    case AttackKind::pgd: return pgd(m, x, label, cfg, noise, rng);
    case AttackKind::cw_l2: return cw_l2(m, x, label, cfg, noise, rng);
    case AttackKind::boundary: return boundary_attack(m, x, label, cfg, noise, rng);
    case AttackKind::contrast:
    case AttackKind::pixel:
    case AttackKind::translate: return simple_blackbox(m, x, label, cfg, noise, rng);
  }
  throw ArgumentError("unknown attack kind");
}

}  // namespace plab
