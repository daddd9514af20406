#include "plab/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "plab/ops.hpp"
#include "plab/parallel.hpp"

namespace plab {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::dense: return "dense";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value.size();
  return n;
}

const Tensor& Model::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p.value;
  throw ArgumentError("model has no parameter '" + name + "'");
}

Tensor& Model::param(const std::string& name) {
  return const_cast<Tensor&>(static_cast<const Model&>(*this).param(name));
}

const std::vector<std::string>& known_architectures() {
  static const std::vector<std::string> ids{"smallconv", "mlp", "linear"};
  return ids;
}

namespace {

bool has_params(LayerKind kind) { return kind == LayerKind::conv || kind == LayerKind::dense; }

LayerSpec conv(std::size_t filters) { return {LayerKind::conv, filters, 3, 1, NoiseSite::pre_activation}; }
LayerSpec dense(std::size_t units) { return {LayerKind::dense, units, 0, 0, NoiseSite::pre_activation}; }
LayerSpec plain(LayerKind kind) { return {kind, 0, 0, 0, NoiseSite::none}; }

Shape output_shape(const LayerSpec& layer, const Shape& in) {
  switch (layer.kind) {
    case LayerKind::conv:
      if (in.size() != 3) throw DimensionError("conv layer needs a [C, H, W] input, got " + shape_string(in));
      return {layer.units, conv_out_size(in[1], layer.kernel, 1, layer.pad),
              conv_out_size(in[2], layer.kernel, 1, layer.pad)};
    case LayerKind::relu: return in;
    case LayerKind::maxpool2:
      if (in.size() != 3 || in[1] < 2 || in[2] < 2) {
        throw DimensionError("maxpool2 needs a [C, H>=2, W>=2] input, got " + shape_string(in));
      }
      return {in[0], in[1] / 2, in[2] / 2};
    case LayerKind::flatten: return {shape_size(in)};
    case LayerKind::dense:
      if (in.size() != 1) throw DimensionError("dense layer needs a flat input, got " + shape_string(in));
      return {layer.units};
  }
  return in;
}

// Shapes of every layer input, plus the final output shape at the end.
std::vector<Shape> layer_shapes(const std::vector<LayerSpec>& layers, const Shape& input) {
  std::vector<Shape> shapes{input};
  for (const auto& layer : layers) shapes.push_back(output_shape(layer, shapes.back()));
  return shapes;
}

double site_sigma(const NoiseConfig& noise, std::size_t site_index) {
  return site_index == 0 ? noise.sigma_init : noise.sigma_inner;
}

void add_noise(Tensor& t, Rng& rng, NoiseKind kind, double sigma) {
  if (sigma <= 0.0) return;
  const Distribution d = Distribution::with_stddev(kind, sigma);
  for (double& v : t.data()) v += draw(rng, d);
}

Tensor maxpool2_forward(const Tensor& x) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, h / 2, w / 2});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h / 2; ++i)
      for (std::size_t j = 0; j < w / 2; ++j) {
        double m = x.at(ch, 2 * i, 2 * j);
        m = std::max(m, x.at(ch, 2 * i, 2 * j + 1));
        m = std::max(m, x.at(ch, 2 * i + 1, 2 * j));
        m = std::max(m, x.at(ch, 2 * i + 1, 2 * j + 1));
        y.at(ch, i, j) = m;
      }
  return y;
}

Tensor maxpool2_backward(const Tensor& x, const Tensor& dy) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor dx(x.shape());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h / 2; ++i)
      for (std::size_t j = 0; j < w / 2; ++j) {
        // The first maximal entry in row-major window order takes the gradient.
        std::size_t bi = 2 * i, bj = 2 * j;
        double best = x.at(ch, bi, bj);
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b)
            if (x.at(ch, 2 * i + a, 2 * j + b) > best) {
              best = x.at(ch, 2 * i + a, 2 * j + b);
              bi = 2 * i + a;
              bj = 2 * j + b;
            }
        dx.at(ch, bi, bj) += dy.at(ch, i, j);
      }
  return dx;
}

Tensor layer_forward(const LayerSpec& layer, const Tensor& x, const Tensor* weight, const Tensor* bias) {
  switch (layer.kind) {
    case LayerKind::conv: {
      Tensor y = conv2d(x, *weight, 1, layer.pad);
      const std::size_t plane = y.dim(1) * y.dim(2);
      for (std::size_t f = 0; f < y.dim(0); ++f) {
        double* row = y.data().data() + f * plane;
        for (std::size_t i = 0; i < plane; ++i) row[i] += (*bias)[f];
      }
      return y;
    }
    case LayerKind::relu: {
      Tensor y = x;
      for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
      return y;
    }
    case LayerKind::maxpool2: return maxpool2_forward(x);
    case LayerKind::flatten: return x.reshaped({x.size()});
    case LayerKind::dense: {
      const std::size_t out = weight->dim(0), in = weight->dim(1);
      if (x.size() != in) throw DimensionError("dense layer input size mismatch");
      Tensor y({out});
      const double* w = weight->data().data();
      const double* xv = x.data().data();
      for (std::size_t o = 0; o < out; ++o) {
        double acc = (*bias)[o];
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * xv[i];
        y[o] = acc;
      }
      return y;
    }
  }
  return x;
}

}  // namespace

std::vector<LayerSpec> architecture(const std::string& arch_id, const Shape& input_shape, std::size_t num_classes) {
  if (num_classes < 2) throw ConfigError("a classifier needs at least 2 classes");
  std::vector<LayerSpec> layers;
  if (arch_id == "smallconv") {
    layers = {conv(8),  plain(LayerKind::relu),     plain(LayerKind::maxpool2), conv(16),
              plain(LayerKind::relu), plain(LayerKind::maxpool2), plain(LayerKind::flatten), dense(num_classes)};
  } else if (arch_id == "mlp") {
    layers = {plain(LayerKind::flatten), dense(64), plain(LayerKind::relu), dense(num_classes)};
  } else if (arch_id == "linear") {
    layers = {plain(LayerKind::flatten), dense(num_classes)};
  } else {
    std::string valid;
    for (const auto& id : known_architectures()) valid += (valid.empty() ? "" : ", ") + id;
    throw ConfigError("unknown arch_id '" + arch_id + "' (expected one of: " + valid + ")");
  }
  layer_shapes(layers, input_shape);  // validates composition
  return layers;
}

NoiseConfig NoiseConfig::scaled(double f) const {
  NoiseConfig n = *this;
  n.sigma_init *= f;
  n.sigma_inner *= f;
  n.sigma_param *= f;
  return n;
}

void NoiseConfig::validate() const {
  if (!(sigma_init >= 0.0) || !(sigma_inner >= 0.0) || !(sigma_param >= 0.0)) {
    throw ParameterError("noise scales must be non-negative");
  }
  if (param_noise() && feature_noise()) {
    throw ParameterError("parameter noise and feature noise cannot be combined in one configuration");
  }
}

Model build_model(const std::string& arch_id, const Shape& input_shape, std::size_t num_classes,
                  std::uint64_t seed) {
  Model m;
  m.arch_id = arch_id;
  m.input_shape = input_shape;
  m.num_classes = num_classes;
  m.layers = architecture(arch_id, input_shape, num_classes);
  m.seed = seed;
  const auto shapes = layer_shapes(m.layers, input_shape);
  Rng rng(seed, 0x1417);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const LayerSpec& layer = m.layers[l];
    if (!has_params(layer.kind)) continue;
    Shape wshape;
    std::size_t fan_in = 0;
    if (layer.kind == LayerKind::conv) {
      wshape = {layer.units, shapes[l][0], layer.kernel, layer.kernel};
      fan_in = shapes[l][0] * layer.kernel * layer.kernel;
    } else {
      wshape = {layer.units, shapes[l][0]};
      fan_in = shapes[l][0];
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor w(wshape);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    round_to_float(w);
    const std::string prefix = "layer" + std::to_string(l);
    m.params.push_back({prefix + ".weight", std::move(w)});
    m.params.push_back({prefix + ".bias", Tensor({layer.units})});
  }
  return m;
}

ForwardTrace forward_trace(const Model& m, const Tensor& x, const NoiseConfig& noise, Rng& rng, Mode mode) {
  if (x.shape() != m.input_shape) {
    throw DimensionError("model '" + m.arch_id + "' expects input " + shape_string(m.input_shape) + ", got " +
                         shape_string(x.shape()));
  }
  const bool active = mode == Mode::eval || noise.apply_in_training;
  ForwardTrace trace;
  if (active && noise.param_noise()) {
    const Distribution d = Distribution::with_stddev(noise.dist, noise.sigma_param);
    trace.noisy_params.reserve(m.params.size());
    for (const auto& p : m.params) {
      Tensor t = p.value;
      for (double& v : t.data()) v += draw(rng, d);
      trace.noisy_params.push_back(std::move(t));
    }
  }
  trace.layer_inputs.reserve(m.layers.size());
  Tensor h = x;
  std::size_t site = 0;
  std::size_t slot = 0;
  for (const LayerSpec& layer : m.layers) {
    if (layer.noise_site == NoiseSite::pre_activation) {
      if (active) add_noise(h, rng, noise.dist, site_sigma(noise, site));
      ++site;
    }
    const Tensor* w = nullptr;
    const Tensor* b = nullptr;
    if (has_params(layer.kind)) {
      const bool noisy = !trace.noisy_params.empty();
      w = noisy ? &trace.noisy_params[slot] : &m.params[slot].value;
      b = noisy ? &trace.noisy_params[slot + 1] : &m.params[slot + 1].value;
      slot += 2;
    }
    Tensor next = layer_forward(layer, h, w, b);
    trace.layer_inputs.push_back(std::move(h));
    h = std::move(next);
  }
  trace.logits = std::move(h);
  return trace;
}

Tensor forward(const Model& m, const Tensor& x, const NoiseConfig& noise, Rng& rng, Mode mode) {
  return forward_trace(m, x, noise, rng, mode).logits;
}

Tensor forward(const Model& m, const Tensor& x) {
  Rng rng(0);
  return forward_trace(m, x, NoiseConfig{}, rng, Mode::eval).logits;
}

Backprop backward(const Model& m, const ForwardTrace& trace, const Tensor& grad_logits, bool param_grads) {
  if (grad_logits.shape() != trace.logits.shape()) throw DimensionError("upstream gradient shape mismatch");
  Backprop out;
  if (param_grads) {
    out.grad_params.reserve(m.params.size());
    for (const auto& p : m.params) out.grad_params.emplace_back(p.value.shape());
  }
  std::size_t slot = m.params.size();
  Tensor g = grad_logits;
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const LayerSpec& layer = m.layers[l];
    const Tensor& x = trace.layer_inputs[l];
    const Tensor* weight = nullptr;
    if (has_params(layer.kind)) {
      slot -= 2;
      weight = trace.noisy_params.empty() ? &m.params[slot].value : &trace.noisy_params[slot];
    }
    switch (layer.kind) {
      case LayerKind::conv: {
        if (param_grads) {
          out.grad_params[slot] = conv2d_backward_kernel(g, x, weight->shape(), 1, layer.pad);
          Tensor& db = out.grad_params[slot + 1];
          const std::size_t plane = g.dim(1) * g.dim(2);
          for (std::size_t f = 0; f < g.dim(0); ++f) {
            double acc = 0.0;
            const double* row = g.data().data() + f * plane;
            for (std::size_t i = 0; i < plane; ++i) acc += row[i];
            db[f] = acc;
          }
        }
        g = conv2d_backward_input(g, *weight, x.shape(), 1, layer.pad);
        break;
      }
      case LayerKind::relu:
        for (std::size_t i = 0; i < g.size(); ++i)
          if (!(x[i] > 0.0)) g[i] = 0.0;
        break;
      case LayerKind::maxpool2: g = maxpool2_backward(x, g); break;
      case LayerKind::flatten: g = g.reshaped(x.shape()); break;
      case LayerKind::dense: {
        const std::size_t outn = weight->dim(0), in = weight->dim(1);
        if (param_grads) {
          Tensor& dw = out.grad_params[slot];
          for (std::size_t o = 0; o < outn; ++o) {
            double* row = dw.data().data() + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] = g[o] * x[i];
          }
          out.grad_params[slot + 1] = g;
        }
        Tensor dx({in});
        const double* w = weight->data().data();
        for (std::size_t o = 0; o < outn; ++o) {
          const double go = g[o];
          if (go == 0.0) continue;
          const double* row = w + o * in;
          for (std::size_t i = 0; i < in; ++i) dx[i] += go * row[i];
        }
        g = std::move(dx);
        break;
      }
    }
  }
  out.grad_x = std::move(g);
  return out;
}

CrossEntropy cross_entropy(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ArgumentError("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) +
                        " classes");
  }
  const double m = max_value(logits);
  double z = 0.0;
  for (double v : logits.data()) z += std::exp(v - m);
  CrossEntropy ce;
  ce.loss = std::log(z) + m - logits[label];
  ce.grad_logits = softmax(logits);
  ce.grad_logits[label] -= 1.0;
  return ce;
}

LossAndGrads loss_and_grads(const Model& m, const Tensor& x, std::size_t label, const NoiseConfig& noise, Rng& rng,
                            Mode mode, bool param_grads) {
  if (label >= m.num_classes) {
    throw ArgumentError("label " + std::to_string(label) + " out of range [0, " + std::to_string(m.num_classes) +
                        ")");
  }
  ForwardTrace trace = forward_trace(m, x, noise, rng, mode);
  CrossEntropy ce = cross_entropy(trace.logits, label);
  Backprop bp = backward(m, trace, ce.grad_logits, param_grads);
  return {ce.loss, std::move(trace.logits), std::move(bp.grad_x), std::move(bp.grad_params)};
}

SampleObjective clean_objective(const NoiseConfig& noise) {
  return [noise](const Model& m, const Tensor& x, int label, Rng& rng) {
    LossAndGrads lg = loss_and_grads(m, x, static_cast<std::size_t>(label), noise, rng, Mode::train, true);
    return SampleOutcome{lg.loss, argmax(lg.logits) == static_cast<std::size_t>(label), std::move(lg.grad_params)};
  };
}

double warmup_factor(const TrainConfig& cfg, std::size_t epoch) {
  if (cfg.warmup == 0) return 1.0;
  return std::min(1.0, static_cast<double>(epoch + 1) / static_cast<double>(cfg.warmup));
}

TrainResult train(Model m, const Dataset& data, const TrainConfig& cfg, const SampleObjective& objective) {
  if (objective) {
    return train_scheduled(std::move(m), data, cfg, [&](std::size_t) { return objective; });
  }
  return train_scheduled(std::move(m), data, cfg, [&](std::size_t epoch) {
    return clean_objective(cfg.noise.scaled(warmup_factor(cfg, epoch)));
  });
}

TrainResult train_scheduled(Model m, const Dataset& data, const TrainConfig& cfg, const ObjectiveSchedule& schedule) {
  if (data.empty()) throw ArgumentError("cannot train on an empty dataset");
  if (!(cfg.lr >= 0.0)) throw ParameterError("learning rate must be non-negative");
  if (cfg.batch == 0) throw ParameterError("batch size must be >= 1");
  cfg.noise.validate();

  std::vector<Tensor> velocity;
  for (const auto& p : m.params) velocity.emplace_back(p.value.shape());

  TrainResult result;
  std::vector<std::size_t> order(data.size());
  const Rng base(cfg.seed, 0x7261696e);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = base.derive(epoch);
    shuffle(order, shuffle_rng);
    const SampleObjective obj = schedule(epoch);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t count = std::min(cfg.batch, order.size() - start);
      std::vector<SampleOutcome> outcomes(count);
      parallel_for(count, [&](std::size_t i) {
        Rng rng = base.derive(epoch, start + i + 1);
        const std::size_t idx = order[start + i];
        outcomes[i] = obj(m, data.images[idx], data.labels[idx], rng);
      });
      const double inv = 1.0 / static_cast<double>(count);
      for (std::size_t p = 0; p < m.params.size(); ++p) {
        Tensor& v = velocity[p];
        for (double& e : v.data()) e *= cfg.momentum;
        for (const auto& o : outcomes) axpy(inv, o.grads[p], v);
        axpy(-cfg.lr, v, m.params[p].value);
        round_to_float(m.params[p].value);
      }
      for (const auto& o : outcomes) {
        loss_sum += o.loss;
        correct += o.correct ? 1 : 0;
      }
    }
    const double n = static_cast<double>(data.size());
    result.history.push_back({epoch + 1, loss_sum / n, 100.0 * static_cast<double>(correct) / n});
  }
  m.epochs_trained += static_cast<std::uint32_t>(cfg.epochs);
  m.seed = cfg.seed;
  result.model = std::move(m);
  return result;
}

double accuracy(const Model& m, const Dataset& data) {
  if (data.empty()) throw ArgumentError("accuracy of an empty dataset");
  std::vector<char> hit(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    hit[i] = argmax(forward(m, data.images[i])) == static_cast<std::size_t>(data.labels[i]);
  });
  std::size_t correct = 0;
  for (char h : hit) correct += h ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

double param_stddev(const Model& m) {
  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (const auto& p : m.params) {
    for (double v : p.value.data()) {
      s += v;
      s2 += v * v;
    }
    n += p.value.size();
  }
  if (n == 0) return 0.0;
  const double mu = s / static_cast<double>(n);
  return std::sqrt(std::max(0.0, s2 / static_cast<double>(n) - mu * mu));
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'P', 'L', 'A', 'B'};
const std::string kMetaInput = "meta.input_shape";
const std::string kMetaTrain = "meta.train";

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  void raw(const std::string& s) { bytes_.append(s); }
  void name(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("name too long: " + s);
    u16(static_cast<std::uint16_t>(s.size()));
    raw(s);
  }
  void tensor(const std::string& n, const Tensor& t) {
    name(n);
    u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) f32(static_cast<float>(v));
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint16_t u16() {
    std::uint16_t v = u8();
    v |= static_cast<std::uint16_t>(u8()) << 8;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string name() { return raw(u16()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
  Writer w;
  w.raw(std::string(kMagic, 4));
  w.u32(kCheckpointVersion);
  w.name(m.arch_id);
  w.u32(static_cast<std::uint32_t>(m.params.size() + 2));
  for (const auto& p : m.params) w.tensor(p.name, p.value);

  Tensor input({m.input_shape.size()});
  for (std::size_t i = 0; i < m.input_shape.size(); ++i) input[i] = static_cast<double>(m.input_shape[i]);
  w.tensor(kMetaInput, input);
  // Epoch count, then the seed as four 16-bit words so every value is exact in float32.
  Tensor meta({5});
  meta[0] = static_cast<double>(m.epochs_trained);
  for (int i = 0; i < 4; ++i) meta[1 + i] = static_cast<double>((m.seed >> (16 * i)) & 0xffff);
  w.tensor(kMetaTrain, meta);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw ArgumentError("failed writing '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ArgumentError("cannot move checkpoint into '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));

  if (r.raw(4) != std::string(kMagic, 4)) throw FormatError("'" + path + "' is not a PLAB checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (this build reads version " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Model m;
  m.arch_id = r.name();
  const std::uint32_t count = r.u32();
  std::vector<Param> tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    Param p;
    p.name = r.name();
    const std::uint8_t rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = shape_size(shape);
    r.need(4 * n);
    std::vector<double> values(n);
    for (auto& v : values) v = static_cast<double>(r.f32());
    p.value = Tensor(std::move(shape), std::move(values));
    tensors.push_back(std::move(p));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint tensors");

  for (auto it = tensors.begin(); it != tensors.end();) {
    if (it->name == kMetaInput) {
      for (double v : it->value.data()) m.input_shape.push_back(static_cast<std::size_t>(v));
      it = tensors.erase(it);
    } else if (it->name == kMetaTrain) {
      if (it->value.size() != 5) throw FormatError("malformed training metadata");
      m.epochs_trained = static_cast<std::uint32_t>(it->value[0]);
      for (int i = 0; i < 4; ++i) m.seed |= static_cast<std::uint64_t>(it->value[1 + i]) << (16 * i);
      it = tensors.erase(it);
    } else {
      ++it;
    }
  }
  if (m.input_shape.empty() || tensors.empty()) throw FormatError("checkpoint lacks input shape or parameters");
  m.num_classes = tensors.back().value.size();
  try {
    m.layers = architecture(m.arch_id, m.input_shape, m.num_classes);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint architecture: ") + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(std::string("checkpoint architecture: ") + e.what());
  }
  const Model reference = build_model(m.arch_id, m.input_shape, m.num_classes, 0);
  if (reference.params.size() != tensors.size()) throw FormatError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name != reference.params[i].name || tensors[i].value.shape() != reference.params[i].value.shape()) {
      throw FormatError("checkpoint parameter '" + tensors[i].name + "' does not match architecture " + m.arch_id);
    }
  }
  m.params = std::move(tensors);
  return m;
}

}  // namespace plab
