#include "plab/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plab/ops.hpp"
#include "plab/parallel.hpp"

namespace plab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_number(const std::string& what, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("defense descriptor: '" + what + "' has non-numeric value '" + value + "'");
  }
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

bool DefenseConfig::randomized() const { return noise.any() || (channel && channel->stochastic()); }

void DefenseConfig::validate() const {
  if (trials < 1) throw ParameterError("defense trials must be >= 1");
  if (channel) channel->validate();
  noise.validate();
}

std::string DefenseConfig::descriptor() const {
  std::string d = "channel:" + (channel ? channel->descriptor() : std::string("empty"));
  d += ";noise:" + std::string(to_string(noise.dist)) + "," + num(noise.sigma_init) + "," + num(noise.sigma_inner) +
       "," + num(noise.sigma_param);
  d += ";trials:" + std::to_string(trials);
  return d;
}

DefenseConfig DefenseConfig::parse(const std::string& descriptor) {
  DefenseConfig d;
  for (const std::string& part : split(descriptor, ';')) {
    if (part.empty()) continue;
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("defense descriptor '" + descriptor + "': expected <key>:<value> in '" + part + "'");
    }
    const std::string key = trim(part.substr(0, colon));
    const std::string value = trim(part.substr(colon + 1));
    if (key == "channel") {
      const Channel c = Channel::parse(value);
      if (c.kind == Channel::Kind::empty) {
        d.channel.reset();
      } else {
        d.channel = c;
      }
    } else if (key == "noise") {
      const auto fields = split(value, ',');
      if (fields.size() != 4) {
        throw ConfigError("defense descriptor '" + descriptor +
                          "': noise expects <dist>,<sigma_init>,<sigma_inner>,<sigma_param>");
      }
      try {
        d.noise.dist = parse_noise_kind(fields[0]);
      } catch (const Error& e) {
        throw ConfigError("defense descriptor '" + descriptor + "': " + e.what());
      }
      d.noise.sigma_init = to_number("noise.sigma_init", fields[1]);
      d.noise.sigma_inner = to_number("noise.sigma_inner", fields[2]);
      d.noise.sigma_param = to_number("noise.sigma_param", fields[3]);
    } else if (key == "trials") {
      const double t = to_number("trials", value);
      if (t < 1 || t != std::floor(t)) {
        throw ConfigError("defense descriptor '" + descriptor + "': trials must be a positive integer");
      }
      d.trials = static_cast<std::size_t>(t);
    } else {
      throw ConfigError("defense descriptor '" + descriptor + "': unknown key '" + key +
                        "' (expected channel, noise or trials)");
    }
  }
  try {
    d.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("defense descriptor '" + descriptor + "': " + e.what());
  }
  return d;
}

Prediction defend_predict(const Model& m, const DefenseConfig& d, const Tensor& x, const Rng& rng) {
  if (d.trials < 1) throw ParameterError("defense trials must be >= 1");
  Prediction p;
  p.histogram.assign(m.num_classes, 0);
  for (std::size_t t = 0; t < d.trials; ++t) {
    Rng r = rng.derive(t);
    const Tensor input = d.channel ? apply_channel(*d.channel, x, r) : x;
    const Tensor logits = d.noise.any() ? forward(m, input, d.noise, r, Mode::eval) : forward(m, input);
    ++p.histogram[argmax(logits)];
  }
  // max_element returns the first maximum, i.e. the lowest class on ties.
  p.label = static_cast<std::size_t>(std::max_element(p.histogram.begin(), p.histogram.end()) - p.histogram.begin());
  return p;
}

double evaluate_defense(const Model& m, const DefenseConfig& d, const std::vector<Tensor>& xs,
                        const std::vector<int>& labels, const Rng& rng) {
  if (xs.empty()) throw ArgumentError("evaluate_defense needs a non-empty example set");
  if (xs.size() != labels.size()) throw ArgumentError("evaluate_defense: images and labels differ in count");
  std::vector<char> hit(xs.size(), 0);
  parallel_for(xs.size(), [&](std::size_t i) {
    hit[i] = defend_predict(m, d, xs[i], rng.derive(i)).label == static_cast<std::size_t>(labels[i]);
  });
  const auto correct = static_cast<double>(std::count(hit.begin(), hit.end(), 1));
  return 100.0 * correct / static_cast<double>(xs.size());
}

double evaluate_defense(const Model& m, const DefenseConfig& d, const Dataset& data, const Rng& rng) {
  return evaluate_defense(m, d, data.images, data.labels, rng);
}

void AdvTrainConfig::validate() const {
  if (!(eps >= 0.0) || !(step_size >= 0.0)) throw ParameterError("adversarial training eps and step must be >= 0");
  if (clean_weight < 0.0 || adv_weight < 0.0 || std::abs(clean_weight + adv_weight - 1.0) > 1e-9) {
    throw ParameterError("clean_weight and adv_weight must be non-negative and sum to 1");
  }
}

SampleObjective adversarial_objective(const AdvTrainConfig& atc, const NoiseConfig& noise,
                                      AdvExampleObserver observer) {
  atc.validate();
  const SampleObjective clean = clean_objective(noise);
  return [atc, noise, clean, observer](const Model& m, const Tensor& x, int label, Rng& rng) {
    const auto y = static_cast<std::size_t>(label);
    Tensor adv = x;
    if (atc.eps > 0.0 && atc.adv_weight > 0.0) {
      if (atc.random_start) {
        for (std::size_t i = 0; i < adv.size(); ++i) {
          adv[i] = std::clamp(x[i] + rng.uniform(-atc.eps, atc.eps), 0.0, 1.0);
        }
      }
      for (std::size_t step = 0; step < atc.pgd_steps; ++step) {
        const LossAndGrads lg = loss_and_grads(m, adv, y, noise, rng, Mode::train, false);
        for (std::size_t i = 0; i < adv.size(); ++i) {
          const double g = lg.grad_x[i];
          const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
          adv[i] = std::clamp(std::clamp(adv[i] + atc.step_size * s, x[i] - atc.eps, x[i] + atc.eps), 0.0, 1.0);
        }
      }
    }
    if (observer) observer(x, adv);
    // An identity inner attack leaves plain training.
    if (atc.adv_weight == 0.0 || adv == x) return clean(m, x, label, rng);

    SampleOutcome out;
    const LossAndGrads la = loss_and_grads(m, adv, y, noise, rng, Mode::train, true);
    out.loss = atc.adv_weight * la.loss;
    out.correct = argmax(la.logits) == y;
    out.grads = la.grad_params;
    for (Tensor& g : out.grads) g = atc.adv_weight * g;
    if (atc.clean_weight > 0.0) {
      const LossAndGrads lc = loss_and_grads(m, x, y, noise, rng, Mode::train, true);
      out.loss += atc.clean_weight * lc.loss;
      for (std::size_t p = 0; p < out.grads.size(); ++p) axpy(atc.clean_weight, lc.grad_params[p], out.grads[p]);
    }
    return out;
  };
}

TrainResult train_adversarial(Model m, const Dataset& data, const AdvTrainConfig& atc, const TrainConfig& cfg) {
  atc.validate();
  return train_scheduled(std::move(m), data, cfg, [&](std::size_t epoch) {
    const double f = warmup_factor(cfg, epoch);
    AdvTrainConfig scaled = atc;
    scaled.eps *= f;
    scaled.step_size *= f;
    return adversarial_objective(scaled, cfg.noise.scaled(f));
  });
}

}  // namespace plab
