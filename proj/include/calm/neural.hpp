#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "calm/inference.hpp"
#include "calm/predicates.hpp"
#include "json.hpp"

namespace calm {

// One supervised domain-tree decision: the box at the node, the node's
// child count and the child on the ground-truth path.
struct DecisionRecord {
  PredicateType type = PredicateType::category;
  int arg = 0;
  Attr attr = Attr::x;
  NodePath path;
  SubdomainBox box;
  int child_count = 0;
  int chosen = 0;
  std::vector<double> context;
};

nlohmann::json record_to_json(const DecisionRecord& r);
DecisionRecord record_from_json(const nlohmann::json& j);

// JSON lines, one record per line. Writes atomically.
void write_dataset(const std::string& path, const std::vector<DecisionRecord>& records);
std::vector<DecisionRecord> read_dataset(const std::string& path);

// (node path, chosen child) for every internal node on the way to `value`.
std::vector<std::pair<NodePath, int>> decompose_grounding(const DomainTree& tree, int value);

// Decisions of every atom along the path of `g`, with the boxes that
// atom_truth would see. Decisions after a hard block are not emitted.
std::vector<DecisionRecord> decision_records(const GroundedStatement& st, const Grounding& g);

struct TrainConfig {
  double learning_rate = 2e-4;
  int epochs = 200;
  int batch_size = 128;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int hidden1 = 64;
  int hidden2 = 64;

  // Throws ConfigError. lr = 0 is allowed (frozen weights).
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// input -> H1 -> H2 -> heads, leaky ReLU on the hidden layers. One softmax
// head of k logits per (argument, affecting attribute); a node with fewer
// than k children uses the leading logits only.
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(PredicateType type, int k, int context_dim, int hidden1, int hidden2);

  // Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static MlpModel initialized(PredicateType type, int k, int context_dim, std::uint64_t seed,
                              int hidden1 = 64, int hidden2 = 64);

  PredicateType type() const { return type_; }
  int k() const { return k_; }
  int arity() const { return predicate_arity(type_); }
  int context_dim() const { return context_dim_; }
  int input_dim() const { return arity() * kNumAttrs * 2 + context_dim_; }
  int head_count() const { return static_cast<int>(heads_.size()); }
  // Head index of (arg, attr); throws InvalidArgument when attr is not in A_p.
  int head_index(int arg, Attr attr) const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // Per argument, per attribute (min, max) scaled to [0, 1] by box.ranges,
  // followed by the context.
  Eigen::VectorXd encode(const SubdomainBox& box, std::span<const double> context) const;

  TruthFactors forward(int arg, Attr attr, const SubdomainBox& box,
                       std::span<const double> context, int child_count) const;

  // Cross-entropy of the chosen child.
  double loss(const DecisionRecord& r) const;

  // Flattened parameters: every layer's weight (row-major) then its bias.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  // Analytic gradient of loss(r) in parameters() order.
  std::vector<double> gradient(const DecisionRecord& r) const;

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);

 private:
  PredicateType type_ = PredicateType::category;
  int k_ = 2;
  int context_dim_ = 0;
  std::vector<std::pair<int, Attr>> heads_;
  std::vector<DenseLayer> layers_;
};

struct TrainStats {
  double initial_loss = 0.0;  // mean cross-entropy before the first update
  double final_loss = 0.0;    // mean cross-entropy after the last epoch
  std::size_t records = 0;
};

// Adam on mean cross-entropy over shuffled minibatches. Every record must
// share `type`; throws InvalidArgument on an empty dataset.
MlpModel train(PredicateType type, const std::vector<DecisionRecord>& records, int k,
               const TrainConfig& cfg, TrainStats* stats = nullptr);

double mean_loss(const MlpModel& model, const std::vector<DecisionRecord>& records);

// max over parameters of |analytic - central difference| / max(1, |analytic|).
double gradient_check(const MlpModel& model, const DecisionRecord& sample, double eps);

// A set of trained models, one per predicate type.
struct Checkpoint {
  int k = 2;
  TrainConfig config;
  std::map<PredicateType, MlpModel> models;

  nlohmann::json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);
};

// Trains one model per predicate type present in `records`.
Checkpoint train_checkpoint(const std::vector<DecisionRecord>& records, int k,
                            const TrainConfig& cfg,
                            std::map<PredicateType, TrainStats>* stats = nullptr);

class MlpProvider final : public TruthFactorProvider {
 public:
  explicit MlpProvider(std::shared_ptr<const MlpModel> model);
  TruthFactors factors(const FactorQuery& query) const override;

 private:
  std::shared_ptr<const MlpModel> model_;
};

ProviderSet providers_from_checkpoint(const Checkpoint& ckpt);

}  // namespace calm
