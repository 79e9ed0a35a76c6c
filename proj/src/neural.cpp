#include "calm/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "calm/error.hpp"
#include "calm/io.hpp"

namespace calm {

namespace {

constexpr double kLeak = 0.01;
constexpr std::string_view kCheckpointFormat = "calm-mlp";

nlohmann::json interval_json(Interval iv) { return nlohmann::json::array({iv.lo, iv.hi}); }

Interval interval_from(const nlohmann::json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

Eigen::MatrixXd leaky(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? v : kLeak * v; });
}

Eigen::MatrixXd leaky_grad(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeak; });
}

// Columns of one minibatch, already encoded.
struct Batch {
  Eigen::MatrixXd x;  // input_dim x B
  std::vector<int> head;
  std::vector<int> count;
  std::vector<int> chosen;
};

struct Gradients {
  std::vector<DenseLayer> layers;
  double loss = 0.0;  // mean over the batch
};

// Forward + backward for mean cross-entropy over `b`.
Gradients backprop(const std::vector<DenseLayer>& layers, int k, const Batch& b, bool want_grad) {
  const Eigen::Index n = b.x.cols();
  std::vector<Eigen::MatrixXd> z(layers.size());
  std::vector<Eigen::MatrixXd> a(layers.size() + 1);
  a[0] = b.x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    z[l] = (layers[l].weight * a[l]).colwise() + layers[l].bias;
    a[l + 1] = l + 1 < layers.size() ? leaky(z[l]) : z[l];
  }
  const Eigen::MatrixXd& logits = z.back();
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(logits.rows(), n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Eigen::Index off = static_cast<Eigen::Index>(b.head[ju]) * k;
    const Eigen::Index m = b.count[ju];
    auto seg = logits.col(j).segment(off, m);
    const double mx = seg.maxCoeff();
    const Eigen::VectorXd e = (seg.array() - mx).exp();
    const double s = e.sum();
    total += std::log(s) + mx - seg(b.chosen[ju]);
    if (want_grad) {
      Eigen::VectorXd p = e / s;
      p(b.chosen[ju]) -= 1.0;
      delta.col(j).segment(off, m) = p / static_cast<double>(n);
    }
  }
  Gradients g;
  g.loss = total / static_cast<double>(n);
  if (!want_grad) return g;
  g.layers.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    g.layers[l].weight = delta * a[l].transpose();
    g.layers[l].bias = delta.rowwise().sum();
    if (l > 0) delta = (layers[l].weight.transpose() * delta).cwiseProduct(leaky_grad(z[l - 1]));
  }
  return g;
}

Batch single(const MlpModel& model, const DecisionRecord& r) {
  Batch b;
  b.x = model.encode(r.box, r.context);
  b.head = {model.head_index(r.arg, r.attr)};
  b.count = {r.child_count};
  b.chosen = {r.chosen};
  return b;
}

void check_record(const MlpModel& model, const DecisionRecord& r) {
  if (r.type != model.type()) throw InvalidArgument("record predicate does not match the model");
  if (r.child_count < 1 || r.child_count > model.k()) {
    throw InvalidArgument("record child count outside [1, k]");
  }
  if (r.chosen < 0 || r.chosen >= r.child_count) throw InvalidArgument("record chosen child out of range");
}

}  // namespace

// ---------------------------------------------------------------------------
// Records

nlohmann::json record_to_json(const DecisionRecord& r) {
  nlohmann::json box = nlohmann::json::array();
  for (int i = 0; i < r.box.arity; ++i) {
    nlohmann::json arg = nlohmann::json::array();
    for (Attr a : kAllAttrs) arg.push_back(interval_json(r.box.at(i, a)));
    box.push_back(arg);
  }
  nlohmann::json ranges = nlohmann::json::array();
  for (const Interval& iv : r.box.ranges) ranges.push_back(interval_json(iv));
  return {{"pred", predicate_name(r.type)}, {"arg", r.arg},
          {"attr", attr_name(r.attr)},      {"path", r.path},
          {"box", box},                     {"ranges", ranges},
          {"child_count", r.child_count},   {"chosen", r.chosen},
          {"context", r.context}};
}

DecisionRecord record_from_json(const nlohmann::json& j) {
  DecisionRecord r;
  auto type = parse_predicate(j.at("pred").get<std::string>());
  if (!type) throw ValidationError("unknown predicate in decision record");
  auto attr = parse_attr(j.at("attr").get<std::string>());
  if (!attr) throw ValidationError("unknown attribute in decision record");
  r.type = *type;
  r.arg = j.at("arg").get<int>();
  r.attr = *attr;
  r.path = j.at("path").get<NodePath>();
  const auto& box = j.at("box");
  r.box.arity = static_cast<int>(box.size());
  if (r.box.arity != predicate_arity(r.type)) throw ValidationError("record box arity mismatch");
  for (int i = 0; i < r.box.arity; ++i) {
    for (Attr a : kAllAttrs) {
      r.box.at(i, a) = interval_from(box.at(static_cast<std::size_t>(i)).at(attr_index(a)));
    }
  }
  for (std::size_t a = 0; a < 4; ++a) r.box.ranges[a] = interval_from(j.at("ranges").at(a));
  r.child_count = j.at("child_count").get<int>();
  r.chosen = j.at("chosen").get<int>();
  r.context = j.at("context").get<std::vector<double>>();
  if (r.chosen < 0 || r.chosen >= r.child_count) throw ValidationError("record chosen child out of range");
  return r;
}

void write_dataset(const std::string& path, const std::vector<DecisionRecord>& records) {
  std::string out;
  for (const DecisionRecord& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<DecisionRecord> read_dataset(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<DecisionRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<NodePath, int>> decompose_grounding(const DomainTree& tree, int value) {
  const NodePath full = tree.path_to_value(value);
  std::vector<std::pair<NodePath, int>> out;
  NodePath prefix;
  for (int c : full) {
    out.emplace_back(prefix, c);
    prefix.push_back(c);
  }
  return out;
}

std::vector<DecisionRecord> decision_records(const GroundedStatement& st, const Grounding& g) {
  std::vector<DecisionRecord> out;
  for (std::size_t p = 0; p < st.atoms.size(); ++p) {
    const PredicateInstance& inst = st.atoms[p];
    for_each_decision(st, static_cast<int>(p), g, [&](const Decision& d) {
      DecisionRecord r;
      r.type = inst.type;
      r.arg = d.arg;
      r.attr = d.attr;
      r.path = d.path;
      r.box = d.box;
      r.child_count = d.child_count;
      r.chosen = d.chosen;
      r.context = inst.embedding;
      out.push_back(std::move(r));
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite non-negative number");
  }
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (hidden1 < 1 || hidden2 < 1) throw ConfigError("hidden sizes must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"epochs", epochs}, {"batch_size", batch_size},
          {"beta1", beta1},                 {"beta2", beta2},   {"epsilon", epsilon},
          {"seed", seed},                   {"hidden", {hidden1, hidden2}}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.seed = j.value("seed", c.seed);
  if (j.contains("hidden")) {
    c.hidden1 = j.at("hidden").at(0).get<int>();
    c.hidden2 = j.at("hidden").at(1).get<int>();
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Model

MlpModel::MlpModel(PredicateType type, int k, int context_dim, int hidden1, int hidden2)
    : type_(type), k_(k), context_dim_(context_dim) {
  if (k < 2) throw InvalidArgument("k must be at least 2");
  if (context_dim < 0 || hidden1 < 1 || hidden2 < 1) throw InvalidArgument("bad layer sizes");
  for (int arg = 0; arg < arity(); ++arg) {
    for (Attr a : affecting_set(type)) heads_.emplace_back(arg, a);
  }
  const std::array<int, 4> sizes = {input_dim(), hidden1, hidden2, head_count() * k};
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    layers_.push_back({Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]), Eigen::VectorXd::Zero(sizes[l + 1])});
  }
}

MlpModel MlpModel::initialized(PredicateType type, int k, int context_dim, std::uint64_t seed,
                               int hidden1, int hidden2) {
  MlpModel m(type, k, context_dim, hidden1, hidden2);
  Rng rng(seed);
  for (DenseLayer& layer : m.layers_) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
  }
  return m;
}

int MlpModel::head_index(int arg, Attr attr) const {
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    if (heads_[i].first == arg && heads_[i].second == attr) return static_cast<int>(i);
  }
  throw InvalidArgument("no head for argument " + std::to_string(arg) + " attribute " +
                        std::string(attr_name(attr)) + " of " + std::string(predicate_name(type_)));
}

Eigen::VectorXd MlpModel::encode(const SubdomainBox& box, std::span<const double> context) const {
  if (static_cast<int>(context.size()) != context_dim_) {
    throw InvalidArgument("context has " + std::to_string(context.size()) + " values, model expects " +
                          std::to_string(context_dim_));
  }
  if (box.arity != arity()) throw InvalidArgument("box arity does not match the model");
  Eigen::VectorXd x(input_dim());
  Eigen::Index i = 0;
  for (int arg = 0; arg < arity(); ++arg) {
    for (Attr a : kAllAttrs) {
      const Interval range = box.ranges[static_cast<std::size_t>(attr_index(a))];
      const double span = std::max(1, range.hi - range.lo);
      const Interval iv = box.at(arg, a);
      x(i++) = (iv.lo - range.lo) / span;
      x(i++) = (iv.hi - range.lo) / span;
    }
  }
  for (double c : context) x(i++) = c;
  return x;
}

TruthFactors MlpModel::forward(int arg, Attr attr, const SubdomainBox& box,
                               std::span<const double> context, int child_count) const {
  if (child_count < 1 || child_count > k_) {
    throw InvalidArgument("node has " + std::to_string(child_count) + " children; model k is " +
                          std::to_string(k_));
  }
  const int head = head_index(arg, attr);
  Eigen::VectorXd a = encode(box, context);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weight * a + layers_[l].bias;
    a = l + 1 < layers_.size() ? Eigen::VectorXd(leaky(z)) : z;
  }
  const auto seg = a.segment(static_cast<Eigen::Index>(head) * k_, child_count);
  const double mx = seg.maxCoeff();
  const Eigen::VectorXd e = (seg.array() - mx).exp();
  const double s = e.sum();
  TruthFactors out(static_cast<std::size_t>(child_count));
  for (int c = 0; c < child_count; ++c) out[static_cast<std::size_t>(c)] = e(c) / s;
  return out;
}

double MlpModel::loss(const DecisionRecord& r) const {
  check_record(*this, r);
  return backprop(layers_, k_, single(*this, r), false).loss;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

namespace {

void flatten(const std::vector<DenseLayer>& layers, std::vector<double>& out) {
  for (const DenseLayer& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
}

}  // namespace

std::vector<double> MlpModel::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  flatten(layers_, out);
  return out;
}

void MlpModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw InvalidArgument("parameter vector size mismatch");
  std::size_t i = 0;
  for (DenseLayer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[i++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[i++];
  }
}

std::vector<double> MlpModel::gradient(const DecisionRecord& r) const {
  check_record(*this, r);
  const Gradients g = backprop(layers_, k_, single(*this, r), true);
  std::vector<double> out;
  out.reserve(parameter_count());
  flatten(g.layers, out);
  return out;
}

nlohmann::json MlpModel::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& l : layers_) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"rows", l.weight.rows()}, {"cols", l.weight.cols()}, {"weight", w}, {"bias", b}});
  }
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& [arg, attr] : heads_) heads.push_back({{"arg", arg}, {"attr", attr_name(attr)}});
  return {{"pred", predicate_name(type_)}, {"k", k_}, {"context_dim", context_dim_},
          {"heads", heads}, {"layers", layers}};
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  auto type = parse_predicate(j.at("pred").get<std::string>());
  if (!type) throw ValidationError("unknown predicate in model");
  const auto& layers = j.at("layers");
  if (layers.size() != 3) throw ValidationError("model must have three layers");
  MlpModel m(*type, j.at("k").get<int>(), j.at("context_dim").get<int>(),
             layers.at(0).at("rows").get<int>(), layers.at(1).at("rows").get<int>());
  for (std::size_t l = 0; l < 3; ++l) {
    DenseLayer& dst = m.layers_[l];
    const auto& src = layers.at(l);
    if (src.at("rows").get<Eigen::Index>() != dst.weight.rows() ||
        src.at("cols").get<Eigen::Index>() != dst.weight.cols()) {
      throw ValidationError("layer " + std::to_string(l) + " has unexpected shape");
    }
    const auto w = src.at("weight").get<std::vector<double>>();
    const auto b = src.at("bias").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(dst.weight.size()) ||
        b.size() != static_cast<std::size_t>(dst.bias.size())) {
      throw ValidationError("layer " + std::to_string(l) + " has the wrong number of values");
    }
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < dst.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < dst.weight.cols(); ++c) dst.weight(r, c) = w[i++];
    }
    for (Eigen::Index r = 0; r < dst.bias.size(); ++r) dst.bias(r) = b[static_cast<std::size_t>(r)];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Encoded {
  Eigen::MatrixXd x;
  std::vector<int> head, count, chosen;
};

Encoded encode_all(const MlpModel& model, const std::vector<DecisionRecord>& records) {
  Encoded e;
  e.x.resize(model.input_dim(), static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DecisionRecord& r = records[i];
    check_record(model, r);
    e.x.col(static_cast<Eigen::Index>(i)) = model.encode(r.box, r.context);
    e.head.push_back(model.head_index(r.arg, r.attr));
    e.count.push_back(r.child_count);
    e.chosen.push_back(r.chosen);
  }
  return e;
}

Batch gather(const Encoded& e, std::span<const std::size_t> idx) {
  Batch b;
  b.x.resize(e.x.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    b.x.col(static_cast<Eigen::Index>(j)) = e.x.col(static_cast<Eigen::Index>(idx[j]));
    b.head.push_back(e.head[idx[j]]);
    b.count.push_back(e.count[idx[j]]);
    b.chosen.push_back(e.chosen[idx[j]]);
  }
  return b;
}

double encoded_loss(const MlpModel& model, const Encoded& e) {
  constexpr std::size_t kChunk = 4096;
  const std::size_t n = e.head.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double total = 0.0;
  for (std::size_t s = 0; s < n; s += kChunk) {
    const std::size_t len = std::min(kChunk, n - s);
    const Batch b = gather(e, std::span<const std::size_t>(idx).subspan(s, len));
    total += backprop(model.layers(), model.k(), b, false).loss * static_cast<double>(len);
  }
  return total / static_cast<double>(n);
}

}  // namespace

double mean_loss(const MlpModel& model, const std::vector<DecisionRecord>& records) {
  if (records.empty()) throw InvalidArgument("empty dataset");
  return encoded_loss(model, encode_all(model, records));
}

MlpModel train(PredicateType type, const std::vector<DecisionRecord>& records, int k,
               const TrainConfig& cfg, TrainStats* stats) {
  cfg.validate();
  if (records.empty()) throw InvalidArgument("empty dataset");
  const int context_dim = static_cast<int>(records.front().context.size());
  MlpModel model = MlpModel::initialized(type, k, context_dim,
                                         cfg.seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(type) + 1)),
                                         cfg.hidden1, cfg.hidden2);
  const Encoded data = encode_all(model, records);
  if (stats) {
    stats->records = records.size();
    stats->initial_loss = encoded_loss(model, data);
  }

  std::vector<DenseLayer> m1, m2;
  for (const DenseLayer& l : model.layers()) {
    m1.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  }
  m2 = m1;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += bs) {
      const std::size_t len = std::min(bs, order.size() - s);
      const Batch b = gather(data, std::span<const std::size_t>(order).subspan(s, len));
      const Gradients g = backprop(model.layers(), k, b, true);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < model.layers().size(); ++l) {
        DenseLayer& p = model.layers()[l];
        auto update = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
          mom = cfg.beta1 * mom + (1.0 - cfg.beta1) * grad;
          vel = cfg.beta2 * vel + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
          param.array() -= cfg.learning_rate * (mom.array() / c1) /
                           ((vel.array() / c2).sqrt() + cfg.epsilon);
        };
        update(p.weight, m1[l].weight, m2[l].weight, g.layers[l].weight);
        update(p.bias, m1[l].bias, m2[l].bias, g.layers[l].bias);
      }
    }
  }
  if (stats) stats->final_loss = encoded_loss(model, data);
  return model;
}

double gradient_check(const MlpModel& model, const DecisionRecord& sample, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw InvalidArgument("eps must lie in (0, 1e-2]");
  const std::vector<double> analytic = model.gradient(sample);
  std::vector<double> params = model.parameters();
  MlpModel probe = model;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    probe.set_parameters(params);
    const double up = probe.loss(sample);
    params[i] = saved - eps;
    probe.set_parameters(params);
    const double down = probe.loss(sample);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Checkpoints

nlohmann::json Checkpoint::to_json() const {
  nlohmann::json ms = nlohmann::json::object();
  for (const auto& [type, model] : models) ms[std::string(predicate_name(type))] = model.to_json();
  return {{"format", kCheckpointFormat},
          {"embedder_version", kEmbedderVersion},
          {"k", k},
          {"config", config.to_json()},
          {"models", ms}};
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != kCheckpointFormat) {
    throw ValidationError("not an MLP checkpoint");
  }
  if (j.value("embedder_version", std::string()) != kEmbedderVersion) {
    throw ValidationError("checkpoint embedder version does not match this build");
  }
  Checkpoint c;
  c.k = j.at("k").get<int>();
  c.config = TrainConfig::from_json(j.at("config"));
  for (const auto& [name, mj] : j.at("models").items()) {
    auto type = parse_predicate(name);
    if (!type) throw ValidationError("unknown predicate '" + name + "' in checkpoint");
    MlpModel m = MlpModel::from_json(mj);
    if (m.type() != *type || m.k() != c.k) throw ValidationError("inconsistent model '" + name + "'");
    c.models.emplace(*type, std::move(m));
  }
  return c;
}

Checkpoint train_checkpoint(const std::vector<DecisionRecord>& records, int k,
                            const TrainConfig& cfg, std::map<PredicateType, TrainStats>* stats) {
  if (records.empty()) throw InvalidArgument("empty dataset");
  Checkpoint c;
  c.k = k;
  c.config = cfg;
  for (PredicateType type : kAllPredicateTypes) {
    std::vector<DecisionRecord> subset;
    for (const DecisionRecord& r : records) {
      if (r.type == type) subset.push_back(r);
    }
    if (subset.empty()) continue;
    TrainStats s;
    c.models.emplace(type, train(type, subset, k, cfg, &s));
    if (stats) (*stats)[type] = s;
  }
  return c;
}

MlpProvider::MlpProvider(std::shared_ptr<const MlpModel> model) : model_(std::move(model)) {
  if (!model_) throw InvalidArgument("null model");
}

TruthFactors MlpProvider::factors(const FactorQuery& query) const {
  return model_->forward(query.arg, query.attr, *query.box, query.context, query.child_count);
}

ProviderSet providers_from_checkpoint(const Checkpoint& ckpt) {
  ProviderSet set;
  for (const auto& [type, model] : ckpt.models) {
    set.set(type, std::make_shared<MlpProvider>(std::make_shared<const MlpModel>(model)));
  }
  return set;
}

}  // namespace calm
