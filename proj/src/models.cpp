#include "echr/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "echr/errors.hpp"
#include "echr/rng.hpp"

namespace echr {

namespace {

constexpr std::array<std::string_view, 8> kAlgorithmNames = {
    "heuristic_majority", "sgd_linear", "linear_svm",        "decision_tree",
    "random_forest",      "adaboost",   "gradient_boosting", "qda"};

double sign_of(Label label) { return label == Label::violation ? 1.0 : -1.0; }

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return std::exp(-softplus(-x)); }

void check_inputs(const HyperSetting& hyper, const FeatureMatrix& x, std::span<const Label> y) {
  if (y.size() != x.rows()) {
    throw ValidationError("fit: " + std::to_string(y.size()) + " labels for " +
                          std::to_string(x.rows()) + " rows");
  }
  if (hyper.algorithm == AlgorithmId::heuristic_majority) return;
  if (x.cols() == 0) throw ValidationError("fit: matrix has no feature columns");
  x.validate();
  const auto positives = std::count(y.begin(), y.end(), Label::violation);
  if (positives == 0 || positives == static_cast<long>(y.size())) {
    throw ValidationError("fit: " + std::string(to_string(hyper.algorithm)) +
                          " needs both labels in the training data");
  }
}

int as_int(double value) { return static_cast<int>(std::lround(value)); }

// ---------------------------------------------------------------- linear

LinearParams fit_sgd(const HyperSetting& hyper, const FeatureMatrix& x, std::span<const Label> y) {
  const double lambda = hyper.get("lambda", 1e-4);
  const int epochs = as_int(hyper.get("epochs", 20));
  const double eta0 = hyper.get("eta0", 0.1);
  const auto d = x.cols();
  LinearParams model{std::vector<double>(d, 0.0), 0.0};
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hyper.seed);
  double t = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (auto i : order) {
      const double eta = eta0 / (1.0 + eta0 * lambda * t);
      const auto row = x.row(i);
      const double target = sign_of(y[i]);
      double score = model.bias;
      for (std::size_t j = 0; j < d; ++j) score += model.weights[j] * row[j];
      // d/ds of -log s(target * score)
      const double g = target * sigmoid(-target * score);
      const double decay = 1.0 - eta * lambda;
      for (std::size_t j = 0; j < d; ++j) model.weights[j] = decay * model.weights[j] + eta * g * row[j];
      model.bias += eta * g;
      t += 1.0;
    }
  }
  return model;
}

// Pegasos with the bias folded in as a constant feature. Returns the average
// of all iterates; the last iterate swings widely while 1/(lambda t) is large.
LinearParams fit_svm(const HyperSetting& hyper, const FeatureMatrix& x, std::span<const Label> y) {
  const double lambda = hyper.get("lambda", 1e-4);
  const int epochs = as_int(hyper.get("epochs", 20));
  const auto d = x.cols();
  std::vector<double> w(d + 1, 0.0), average(d + 1, 0.0);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hyper.seed);
  const double radius = 1.0 / std::sqrt(lambda);
  double t = 1.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (auto i : order) {
      const double eta = 1.0 / (lambda * t);
      const auto row = x.row(i);
      const double target = sign_of(y[i]);
      double score = w[d];
      for (std::size_t j = 0; j < d; ++j) score += w[j] * row[j];
      const double decay = 1.0 - eta * lambda;
      for (auto& v : w) v *= decay;
      if (target * score < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * target * row[j];
        w[d] += eta * target;
      }
      double norm = 0.0;
      for (double v : w) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > radius) {
        for (auto& v : w) v *= radius / norm;
      }
      for (std::size_t j = 0; j <= d; ++j) average[j] += (w[j] - average[j]) / t;
      t += 1.0;
    }
  }
  LinearParams model;
  model.bias = average[d];
  average.pop_back();
  model.weights = std::move(average);
  return model;
}

// ---------------------------------------------------------------- trees

std::vector<double> label_targets(std::span<const Label> y) {
  std::vector<double> target(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) target[i] = y[i] == Label::violation ? 1.0 : 0.0;
  return target;
}

TreeParams tree_params(const HyperSetting& hyper, int default_leaf) {
  TreeParams params;
  params.max_depth = as_int(hyper.get("max_depth", kUnlimited));
  params.min_samples_leaf = as_int(hyper.get("min_samples_leaf", default_leaf));
  params.seed = hyper.seed;
  return params;
}

Tree fit_decision_tree(const HyperSetting& hyper, const FeatureMatrix& x, std::span<const Label> y) {
  const BinnedFeatures features(x);
  const auto target = label_targets(y);
  const std::vector<double> ones(y.size(), 1.0);
  return build_tree(features, SplitCriterion::gini, target, ones, ones, tree_params(hyper, 2));
}

TreeEnsembleParams fit_random_forest(const HyperSetting& hyper, const FeatureMatrix& x,
                                     std::span<const Label> y) {
  const int n_trees = as_int(hyper.get("n_trees", 100));
  const bool bootstrap = hyper.get("bootstrap", 1.0) != 0.0;
  const int max_features_param = as_int(hyper.get("max_features", -1));
  TreeParams params = tree_params(hyper, 1);
  if (max_features_param < 0) {
    params.max_features = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
  } else {
    params.max_features = max_features_param;
  }
  const BinnedFeatures features(x);
  const auto target = label_targets(y);
  const auto n = y.size();
  TreeEnsembleParams forest;
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(hyper.seed + static_cast<std::uint64_t>(t));
    std::vector<double> count(n, bootstrap ? 0.0 : 1.0);
    if (bootstrap) {
      for (std::size_t i = 0; i < n; ++i) count[rng.uniform_index(n)] += 1.0;
    }
    params.seed = rng.next();
    forest.trees.push_back(build_tree(features, SplitCriterion::gini, target, count, count, params));
  }
  return forest;
}

TreeEnsembleParams fit_adaboost(const HyperSetting& hyper, const FeatureMatrix& x, std::span<const Label> y) {
  const int rounds = as_int(hyper.get("n_rounds", 50));
  const BinnedFeatures features(x);
  const auto target = label_targets(y);
  const auto n = y.size();
  std::vector<double> weight(n, 1.0 / static_cast<double>(n));
  const std::vector<double> ones(n, 1.0);
  TreeParams params;
  params.max_depth = 1;
  params.min_samples_leaf = 1;
  TreeEnsembleParams model;
  for (int round = 0; round < rounds; ++round) {
    Tree stump = build_tree(features, SplitCriterion::gini, target, weight, ones, params);
    std::vector<bool> wrong(n);
    double error = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Label predicted = stump.predict(x.row(i)) >= 0.5 ? Label::violation : Label::nonviolation;
      wrong[i] = predicted != y[i];
      if (wrong[i]) error += weight[i];
      total += weight[i];
    }
    error /= total;
    if (error >= 0.5 || error <= 0.0) {
      if (model.trees.empty()) {
        model.trees.push_back(std::move(stump));
        model.coefficients.push_back(1.0);
      }
      break;
    }
    const double alpha = std::log((1.0 - error) / error);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (wrong[i]) weight[i] *= std::exp(alpha);
      sum += weight[i];
    }
    for (auto& w : weight) w /= sum;
    model.trees.push_back(std::move(stump));
    model.coefficients.push_back(alpha);
  }
  return model;
}

TreeEnsembleParams fit_gradient_boosting(const HyperSetting& hyper, const FeatureMatrix& x,
                                         std::span<const Label> y) {
  const int n_trees = as_int(hyper.get("n_trees", 100));
  const double shrinkage = hyper.get("learning_rate", 0.1);
  TreeParams params;
  params.max_depth = as_int(hyper.get("max_depth", 3));
  params.min_samples_leaf = as_int(hyper.get("min_samples_leaf", 1));
  params.seed = hyper.seed;
  const BinnedFeatures features(x);
  const auto target = label_targets(y);
  const auto n = y.size();
  const double positives = std::accumulate(target.begin(), target.end(), 0.0);
  const double initial = std::log(positives / (static_cast<double>(n) - positives));
  std::vector<double> score(n, initial), residual(n), hessian(n);
  const std::vector<double> ones(n, 1.0);
  TreeEnsembleParams model;
  model.coefficients = {initial, shrinkage};
  for (int t = 0; t < n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      residual[i] = target[i] - p;
      hessian[i] = p * (1.0 - p);
    }
    Tree tree = build_tree(features, SplitCriterion::squared_error, residual, hessian, ones, params);
    for (std::size_t i = 0; i < n; ++i) score[i] += shrinkage * tree.predict(x.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// ---------------------------------------------------------------- qda

QdaClass fit_qda_class(const FeatureMatrix& x, std::span<const Label> y, Label label, double gamma,
                       double epsilon) {
  const auto d = static_cast<Eigen::Index>(x.cols());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == label) rows.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2) throw ValidationError("qda: each class needs at least 2 training rows");

  Eigen::MatrixXd centered(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = x.row(rows[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < d; ++c) centered(r, c) = row[static_cast<std::size_t>(c)];
  }
  const Eigen::RowVectorXd mean = centered.colwise().mean();
  centered.rowwise() -= mean;
  const double denom = static_cast<double>(n - 1);
  const Eigen::VectorXd variances = centered.colwise().squaredNorm().transpose() / denom;

  QdaClass cls;
  cls.mean.assign(mean.data(), mean.data() + d);
  cls.log_prior = std::log(static_cast<double>(n) / static_cast<double>(y.size()));
  const double singular = 0.0;

  if (d <= n) {
    Eigen::MatrixXd cov = (1.0 - gamma) * (centered.transpose() * centered) / denom;
    cov.diagonal() += gamma * variances + Eigen::VectorXd::Constant(d, epsilon);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || (llt.matrixL().toDenseMatrix().diagonal().array() <= singular).any()) {
      throw ValidationError("qda: singular covariance after regularization");
    }
    const Eigen::MatrixXd lower = llt.matrixL();
    const Eigen::MatrixXd inverse =
        lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
    cls.log_det = 2.0 * lower.diagonal().array().log().sum();
    cls.precision_diag.assign(static_cast<std::size_t>(d), 0.0);
    for (Eigen::Index r = 0; r < d; ++r) {
      cls.plus_factor.emplace_back(static_cast<std::size_t>(d));
      for (Eigen::Index c = 0; c < d; ++c) cls.plus_factor.back()[static_cast<std::size_t>(c)] = inverse(r, c);
    }
  } else {
    // Covariance = D + a * centered' * centered with D diagonal; invert
    // through the n x n capacitance matrix.
    const Eigen::VectorXd diag = gamma * variances + Eigen::VectorXd::Constant(d, epsilon);
    if ((diag.array() <= singular).any() || !diag.allFinite()) {
      throw ValidationError("qda: singular covariance after regularization");
    }
    const Eigen::VectorXd diag_inv = diag.cwiseInverse();
    cls.precision_diag.assign(diag_inv.data(), diag_inv.data() + d);
    cls.log_det = diag.array().log().sum();
    const double a = (1.0 - gamma) / denom;
    if (a > 0.0) {
      const Eigen::MatrixXd scaled = centered * diag_inv.asDiagonal();  // n x d
      Eigen::MatrixXd capacitance = scaled * centered.transpose();
      capacitance.diagonal().array() += 1.0 / a;
      Eigen::LLT<Eigen::MatrixXd> llt(capacitance);
      if (llt.info() != Eigen::Success) throw ValidationError("qda: singular covariance after regularization");
      const Eigen::MatrixXd lower = llt.matrixL();
      const Eigen::MatrixXd factor = lower.triangularView<Eigen::Lower>().solve(scaled);
      cls.log_det += static_cast<double>(n) * std::log(a) + 2.0 * lower.diagonal().array().log().sum();
      for (Eigen::Index r = 0; r < n; ++r) {
        cls.minus_factor.emplace_back(static_cast<std::size_t>(d));
        for (Eigen::Index c = 0; c < d; ++c) cls.minus_factor.back()[static_cast<std::size_t>(c)] = factor(r, c);
      }
    }
  }
  if (!std::isfinite(cls.log_det)) throw ValidationError("qda: singular covariance after regularization");
  return cls;
}

double qda_log_density(const QdaClass& cls, std::span<const double> x) {
  const auto d = cls.mean.size();
  std::vector<double> z(d);
  double quad = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    z[j] = x[j] - cls.mean[j];
    quad += cls.precision_diag[j] * z[j] * z[j];
  }
  auto project = [&](const std::vector<double>& row) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += row[j] * z[j];
    return s * s;
  };
  for (const auto& row : cls.plus_factor) quad += project(row);
  for (const auto& row : cls.minus_factor) quad -= project(row);
  return cls.log_prior - 0.5 * cls.log_det - 0.5 * quad;
}

QdaParams fit_qda(const HyperSetting& hyper, const FeatureMatrix& x, std::span<const Label> y) {
  const double gamma = hyper.get("gamma", 0.1);
  const double epsilon = hyper.get("epsilon", 1e-6);
  if (gamma < 0.0 || gamma > 1.0 || epsilon < 0.0) throw ValidationError("qda: invalid regularization");
  return {fit_qda_class(x, y, Label::nonviolation, gamma, epsilon),
          fit_qda_class(x, y, Label::violation, gamma, epsilon)};
}

// ---------------------------------------------------------------- json

nlohmann::ordered_json tree_json(const Tree& tree) {
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : tree.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return nodes;
}

Tree tree_from_json(const nlohmann::json& doc) {
  Tree tree;
  for (const auto& n : doc) {
    tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                          n.at(3).get<int>(), n.at(4).get<double>()});
  }
  return tree;
}

nlohmann::ordered_json qda_class_json(const QdaClass& cls) {
  nlohmann::ordered_json doc;
  doc["mean"] = cls.mean;
  doc["precision_diag"] = cls.precision_diag;
  doc["plus_factor"] = cls.plus_factor;
  doc["minus_factor"] = cls.minus_factor;
  doc["log_det"] = cls.log_det;
  doc["log_prior"] = cls.log_prior;
  return doc;
}

QdaClass qda_class_from_json(const nlohmann::json& doc) {
  QdaClass cls;
  doc.at("mean").get_to(cls.mean);
  doc.at("precision_diag").get_to(cls.precision_diag);
  doc.at("plus_factor").get_to(cls.plus_factor);
  doc.at("minus_factor").get_to(cls.minus_factor);
  cls.log_det = doc.at("log_det").get<double>();
  cls.log_prior = doc.at("log_prior").get<double>();
  return cls;
}

}  // namespace

std::string_view to_string(AlgorithmId id) { return kAlgorithmNames[static_cast<std::size_t>(id)]; }

std::optional<AlgorithmId> algorithm_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kAlgorithmNames.size(); ++i) {
    if (kAlgorithmNames[i] == name) return static_cast<AlgorithmId>(i);
  }
  return std::nullopt;
}

double HyperSetting::get(const std::string& name, double fallback) const {
  const auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

std::string HyperSetting::label() const {
  std::string text(to_string(algorithm));
  text += '(';
  bool first = true;
  for (const auto& [name, value] : params) {
    if (!first) text += ',';
    first = false;
    text += name + '=';
    if (value == kUnlimited && (name == "max_depth")) {
      text += "None";
    } else {
      char buffer[32];
      std::snprintf(buffer, sizeof(buffer), "%g", value);
      text += buffer;
    }
  }
  return text + ')';
}

std::vector<HyperSetting> default_grid(AlgorithmId algorithm, std::uint64_t seed) {
  std::vector<HyperSetting> grid;
  auto add = [&](std::map<std::string, double> params) { grid.push_back({algorithm, std::move(params), seed}); };
  switch (algorithm) {
    case AlgorithmId::heuristic_majority:
      add({});
      break;
    case AlgorithmId::sgd_linear:
      for (double lambda : {1e-4, 1e-3}) add({{"lambda", lambda}, {"epochs", 20}});
      break;
    case AlgorithmId::linear_svm:
      for (double lambda : {1e-4, 1e-3}) add({{"lambda", lambda}, {"epochs", 20}});
      break;
    case AlgorithmId::decision_tree:
      for (double depth : {3.0, 6.0, kUnlimited}) add({{"max_depth", depth}, {"min_samples_leaf", 2}});
      break;
    case AlgorithmId::random_forest:
      add({{"n_trees", 100}, {"max_depth", kUnlimited}});
      break;
    case AlgorithmId::adaboost:
      for (double rounds : {50.0, 100.0}) add({{"n_rounds", rounds}});
      break;
    case AlgorithmId::gradient_boosting:
      add({{"n_trees", 100}, {"max_depth", 3}, {"learning_rate", 0.1}});
      break;
    case AlgorithmId::qda:
      for (double gamma : {0.1, 0.5}) add({{"gamma", gamma}, {"epsilon", 1e-6}});
      break;
  }
  return grid;
}

TrainedModel fit_heuristic(long v, long nv) {
  if (v < 0 || nv < 0 || v + nv < 1) throw ValidationError("fit_heuristic: need v + nv >= 1");
  TrainedModel model;
  model.hyper.algorithm = AlgorithmId::heuristic_majority;
  model.hyper.params = {{"v", static_cast<double>(v)}, {"nv", static_cast<double>(nv)}};
  model.learned = HeuristicParams{v, nv, v >= nv ? Label::violation : Label::nonviolation};
  return model;
}

TrainedModel fit(const HyperSetting& hyper, const FeatureMatrix& x, std::span<const Label> y) {
  check_inputs(hyper, x, y);
  TrainedModel model;
  if (hyper.algorithm == AlgorithmId::heuristic_majority) {
    long v = std::count(y.begin(), y.end(), Label::violation);
    long nv = static_cast<long>(y.size()) - v;
    if (hyper.params.contains("v") || hyper.params.contains("nv")) {
      v = std::lround(hyper.get("v", 0));
      nv = std::lround(hyper.get("nv", 0));
    }
    model = fit_heuristic(v, nv);
    model.hyper = hyper;
  } else {
    model.hyper = hyper;
    switch (hyper.algorithm) {
      case AlgorithmId::sgd_linear: model.learned = fit_sgd(hyper, x, y); break;
      case AlgorithmId::linear_svm: model.learned = fit_svm(hyper, x, y); break;
      case AlgorithmId::decision_tree: model.learned = fit_decision_tree(hyper, x, y); break;
      case AlgorithmId::random_forest: model.learned = fit_random_forest(hyper, x, y); break;
      case AlgorithmId::adaboost: model.learned = fit_adaboost(hyper, x, y); break;
      case AlgorithmId::gradient_boosting: model.learned = fit_gradient_boosting(hyper, x, y); break;
      case AlgorithmId::qda: model.learned = fit_qda(hyper, x, y); break;
      case AlgorithmId::heuristic_majority: break;
    }
  }
  model.n_features = x.cols();
  model.columns = x.column_names;
  return model;
}

TrainedModel fit(AlgorithmId algorithm, const HyperSetting& hyper, const FeatureMatrix& x,
                 std::span<const Label> y) {
  if (algorithm != hyper.algorithm) throw ValidationError("fit: hyper-parameters belong to another algorithm");
  return fit(hyper, x, y);
}

std::vector<double> decision_scores(const TrainedModel& model, const FeatureMatrix& x) {
  const bool constant = model.algorithm() == AlgorithmId::heuristic_majority;
  if (!constant) {
    if (x.cols() != model.n_features) {
      throw ValidationError("predict: matrix has " + std::to_string(x.cols()) + " columns, model expects " +
                            std::to_string(model.n_features));
    }
    if (!model.columns.empty() && !x.column_names.empty() && x.column_names != model.columns) {
      throw ValidationError("predict: matrix columns differ from the fitted columns");
    }
    x.validate();
  }
  std::vector<double> scores(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = constant ? std::span<const double>{} : x.row(r);
    double s = 0.0;
    switch (model.algorithm()) {
      case AlgorithmId::heuristic_majority:
        s = std::get<HeuristicParams>(model.learned).constant == Label::violation ? 1.0 : -1.0;
        break;
      case AlgorithmId::sgd_linear:
      case AlgorithmId::linear_svm: {
        const auto& lin = std::get<LinearParams>(model.learned);
        s = lin.bias;
        for (std::size_t j = 0; j < row.size(); ++j) s += lin.weights[j] * row[j];
        break;
      }
      case AlgorithmId::decision_tree:
        s = std::get<Tree>(model.learned).predict(row) - 0.5;
        break;
      case AlgorithmId::random_forest:
        for (const auto& tree : std::get<TreeEnsembleParams>(model.learned).trees) {
          s += tree.predict(row) >= 0.5 ? 1.0 : -1.0;
        }
        break;
      case AlgorithmId::adaboost: {
        const auto& ada = std::get<TreeEnsembleParams>(model.learned);
        for (std::size_t m = 0; m < ada.trees.size(); ++m) {
          s += ada.coefficients[m] * (ada.trees[m].predict(row) >= 0.5 ? 1.0 : -1.0);
        }
        break;
      }
      case AlgorithmId::gradient_boosting: {
        const auto& gb = std::get<TreeEnsembleParams>(model.learned);
        s = gb.coefficients[0];
        for (const auto& tree : gb.trees) s += gb.coefficients[1] * tree.predict(row);
        break;
      }
      case AlgorithmId::qda: {
        const auto& q = std::get<QdaParams>(model.learned);
        s = qda_log_density(q.violation, row) - qda_log_density(q.nonviolation, row);
        break;
      }
    }
    if (std::isnan(s)) throw Error("model produced a NaN score on row " + std::to_string(r));
    scores[r] = s;
  }
  return scores;
}

std::vector<Label> predict(const TrainedModel& model, const FeatureMatrix& x) {
  const auto scores = decision_scores(model, x);
  std::vector<Label> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    labels[i] = scores[i] >= 0.0 ? Label::violation : Label::nonviolation;
  }
  return labels;
}

nlohmann::ordered_json model_to_json(const TrainedModel& model) {
  nlohmann::ordered_json doc;
  doc["algorithm"] = std::string(to_string(model.algorithm()));
  doc["hyper"] = {{"params", model.hyper.params}, {"seed", model.hyper.seed}};
  doc["n_features"] = model.n_features;
  doc["columns"] = model.columns;
  nlohmann::ordered_json learned;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HeuristicParams>) {
          learned = {{"v", p.v}, {"nv", p.nv}, {"constant", to_string(p.constant)}};
        } else if constexpr (std::is_same_v<T, LinearParams>) {
          learned = {{"weights", p.weights}, {"bias", p.bias}};
        } else if constexpr (std::is_same_v<T, Tree>) {
          learned = {{"tree", tree_json(p)}};
        } else if constexpr (std::is_same_v<T, TreeEnsembleParams>) {
          auto trees = nlohmann::ordered_json::array();
          for (const auto& t : p.trees) trees.push_back(tree_json(t));
          learned = {{"trees", trees}, {"coefficients", p.coefficients}};
        } else {
          learned = {{"nonviolation", qda_class_json(p.nonviolation)},
                     {"violation", qda_class_json(p.violation)}};
        }
      },
      model.learned);
  doc["learned"] = learned;
  return doc;
}

TrainedModel model_from_json(const nlohmann::json& doc) {
  try {
    TrainedModel model;
    const auto algorithm = algorithm_from_string(doc.at("algorithm").get<std::string>());
    if (!algorithm) throw FormatError("model file: unknown algorithm");
    model.hyper.algorithm = *algorithm;
    doc.at("hyper").at("params").get_to(model.hyper.params);
    model.hyper.seed = doc.at("hyper").at("seed").get<std::uint64_t>();
    model.n_features = doc.at("n_features").get<std::size_t>();
    doc.at("columns").get_to(model.columns);
    const auto& learned = doc.at("learned");
    switch (*algorithm) {
      case AlgorithmId::heuristic_majority: {
        const auto constant = label_from_string(learned.at("constant").get<std::string>());
        if (!constant) throw FormatError("model file: bad heuristic label");
        model.learned = HeuristicParams{learned.at("v").get<long>(), learned.at("nv").get<long>(), *constant};
        break;
      }
      case AlgorithmId::sgd_linear:
      case AlgorithmId::linear_svm:
        model.learned = LinearParams{learned.at("weights").get<std::vector<double>>(),
                                     learned.at("bias").get<double>()};
        break;
      case AlgorithmId::decision_tree:
        model.learned = tree_from_json(learned.at("tree"));
        break;
      case AlgorithmId::random_forest:
      case AlgorithmId::adaboost:
      case AlgorithmId::gradient_boosting: {
        TreeEnsembleParams ensemble;
        for (const auto& t : learned.at("trees")) ensemble.trees.push_back(tree_from_json(t));
        learned.at("coefficients").get_to(ensemble.coefficients);
        model.learned = std::move(ensemble);
        break;
      }
      case AlgorithmId::qda:
        model.learned = QdaParams{qda_class_from_json(learned.at("nonviolation")),
                                  qda_class_from_json(learned.at("violation"))};
        break;
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << model_to_json(model).dump() << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace echr
