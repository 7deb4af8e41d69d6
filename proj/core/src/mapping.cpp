#include "cts/mapping.hpp"

#include "cts/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace cts::mapping {

const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::linear: return "linear";
    case Variant::tree: return "tree";
    case Variant::forest: return "forest";
  }
  return "tree";
}

Variant variant_from_string(const std::string& s) {
  if (s == "linear" || s == "lr") return Variant::linear;
  if (s == "tree" || s == "dt") return Variant::tree;
  if (s == "forest" || s == "rf") return Variant::forest;
  fail(ErrorCode::parse_error, "unknown mapping variant '" + s + "'");
}

void TreeConfig::validate() const {
  require(max_depth >= 1, ErrorCode::invalid_argument, "max_depth must be at least 1");
  require(min_samples_leaf >= 1, ErrorCode::invalid_argument, "min_samples_leaf must be at least 1");
  require(trees >= 1, ErrorCode::invalid_argument, "forest needs at least one tree");
  require(!feature_subset || *feature_subset >= 1, ErrorCode::invalid_argument,
          "feature_subset must be at least 1");
}

std::vector<FeatureColumn> feature_columns(const ConditionSchema& schema) {
  std::vector<FeatureColumn> cols;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& s = schema.slot(i);
    if (s.kind == SlotKind::numeric) {
      cols.push_back({i, std::nullopt, s.name});
    } else {
      for (std::size_t v = 0; v < s.vocabulary.size(); ++v)
        cols.push_back({i, static_cast<std::uint32_t>(v), s.name + "=" + s.vocabulary[v]});
    }
  }
  return cols;
}

Eigen::VectorXd encode_condition(const ConditionVector& c, const ConditionSchema& schema) {
  validate(c, schema);
  const auto cols = feature_columns(schema);
  Eigen::VectorXd row(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& col = cols[k];
    row(static_cast<Eigen::Index>(k)) =
        col.category ? (c.category(col.slot).value == *col.category ? 1.0 : 0.0) : c.number(col.slot);
  }
  return row;
}

Eigen::MatrixXd encode_conditions(std::span<const ConditionVector> conditions,
                                  const ConditionSchema& schema) {
  const auto p = static_cast<Eigen::Index>(feature_columns(schema).size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(conditions.size()), p);
  for (std::size_t i = 0; i < conditions.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = encode_condition(conditions[i], schema).transpose();
  return x;
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  require(!nodes_.empty(), ErrorCode::invalid_argument, "tree needs at least one node");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    // Children always come after their parent, which rules out cycles.
    require(n.left > static_cast<int>(i) && n.right > static_cast<int>(i) &&
                n.left < static_cast<int>(nodes_.size()) && n.right < static_cast<int>(nodes_.size()),
            ErrorCode::invalid_argument, "malformed tree node " + std::to_string(i));
  }
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double sse = 0.0;
  std::size_t left_count = 0;
};

double sse_of(const Eigen::MatrixXd& y, std::span<const std::size_t> rows, Eigen::VectorXd& mean) {
  mean = Eigen::VectorXd::Zero(y.cols());
  for (auto r : rows) mean += y.row(static_cast<Eigen::Index>(r)).transpose();
  mean /= static_cast<double>(rows.size());
  double sse = 0.0;
  for (auto r : rows) sse += (y.row(static_cast<Eigen::Index>(r)).transpose() - mean).squaredNorm();
  return sse;
}

bool targets_identical(const Eigen::MatrixXd& y, std::span<const std::size_t> rows) {
  const auto first = static_cast<Eigen::Index>(rows.front());
  for (auto r : rows)
    if (y.row(static_cast<Eigen::Index>(r)) != y.row(first)) return false;
  return true;
}

SplitChoice best_split(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       std::vector<std::size_t>& rows, std::span<const std::size_t> features,
                       std::size_t min_leaf) {
  SplitChoice best;
  const std::size_t n = rows.size();
  const auto d = y.cols();
  Eigen::VectorXd total = Eigen::VectorXd::Zero(d);
  double total_sq = 0.0;
  for (auto r : rows) {
    total += y.row(static_cast<Eigen::Index>(r)).transpose();
    total_sq += y.row(static_cast<Eigen::Index>(r)).squaredNorm();
  }
  Eigen::VectorXd left(d);
  for (auto f : features) {
    const auto fi = static_cast<Eigen::Index>(f);
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return x(static_cast<Eigen::Index>(a), fi) < x(static_cast<Eigen::Index>(b), fi);
    });
    left.setZero();
    double left_sq = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const auto prev = static_cast<Eigen::Index>(rows[i - 1]);
      left += y.row(prev).transpose();
      left_sq += y.row(prev).squaredNorm();
      const double lo = x(prev, fi);
      const double hi = x(static_cast<Eigen::Index>(rows[i]), fi);
      if (!(lo < hi) || i < min_leaf || n - i < min_leaf) continue;
      const double nl = static_cast<double>(i);
      const double nr = static_cast<double>(n - i);
      const double sse = std::max(0.0, left_sq - left.squaredNorm() / nl) +
                         std::max(0.0, (total_sq - left_sq) - (total - left).squaredNorm() / nr);
      if (best.feature < 0 || sse < best.sse) {
        double mid = 0.5 * (lo + hi);
        if (!(mid < hi)) mid = lo;
        best = {static_cast<int>(f), mid, sse, i};
      }
    }
  }
  return best;
}

}  // namespace

RegressionTree RegressionTree::fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                   std::span<const std::size_t> rows, const TreeConfig& cfg,
                                   std::optional<std::size_t> feature_subset, std::mt19937_64& rng) {
  cfg.validate();
  require(!rows.empty(), ErrorCode::empty_input, "tree fit needs at least one row");
  require(x.rows() == y.rows(), ErrorCode::shape_mismatch, "feature and target row counts differ");
  const auto p = static_cast<std::size_t>(x.cols());

  struct Pending {
    std::size_t node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  std::vector<TreeNode> nodes(1);
  std::vector<Pending> stack;
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end()), 0});
  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    TreeNode node;
    node.samples = job.rows.size();
    node.impurity = sse_of(y, job.rows, node.value);

    const bool stop = job.depth >= cfg.max_depth || job.rows.size() < 2 * cfg.min_samples_leaf ||
                      p == 0 || targets_identical(y, job.rows);
    SplitChoice split;
    if (!stop) {
      std::vector<std::size_t> features = all_features;
      if (feature_subset && *feature_subset < p) {
        for (std::size_t i = 0; i < *feature_subset; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, p - 1);
          std::swap(features[i], features[pick(rng)]);
        }
        features.resize(*feature_subset);
        std::sort(features.begin(), features.end());
      }
      split = best_split(x, y, job.rows, features, cfg.min_samples_leaf);
    }
    if (split.feature < 0) {
      nodes[job.node] = std::move(node);
      continue;
    }

    const auto fi = static_cast<Eigen::Index>(split.feature);
    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : job.rows)
      (x(static_cast<Eigen::Index>(r), fi) <= split.threshold ? left_rows : right_rows).push_back(r);
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.gain = std::max(0.0, node.impurity - split.sse);
    node.left = static_cast<int>(nodes.size());
    node.right = node.left + 1;
    nodes.resize(nodes.size() + 2);
    const auto left_id = static_cast<std::size_t>(node.left);
    const auto right_id = static_cast<std::size_t>(node.right);
    nodes[job.node] = std::move(node);
    // Right pushed first so the left subtree is built first.
    stack.push_back({right_id, std::move(right_rows), job.depth + 1});
    stack.push_back({left_id, std::move(left_rows), job.depth + 1});
  }
  return RegressionTree(std::move(nodes));
}

const Eigen::VectorXd& RegressionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row(n.feature) <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const noexcept {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

Eigen::VectorXd MappingModel::predict_encoded(const Eigen::Ref<const Eigen::VectorXd>& row) const {
  require(static_cast<std::size_t>(row.size()) == columns_.size(), ErrorCode::shape_mismatch,
          "encoded condition has the wrong width");
  if (variant_ == Variant::linear) return coefficients_.transpose() * row + intercept_;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(output_dim_));
  for (const auto& t : trees_) sum += t.predict(row);
  return sum / static_cast<double>(trees_.size());
}

MappingModel fit(std::span<const ConditionVector> conditions,
                 std::span<const Eigen::VectorXd> targets, const ConditionSchema& schema,
                 const MappingConfig& cfg) {
  require(!conditions.empty(), ErrorCode::empty_input, "mapping fit needs at least one row");
  require(conditions.size() == targets.size(), ErrorCode::shape_mismatch,
          "conditions and latent targets differ in count");
  const auto d = targets.front().size();
  require(d > 0, ErrorCode::shape_mismatch, "latent targets must be nonempty");
  Eigen::MatrixXd y(static_cast<Eigen::Index>(targets.size()), d);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    require(targets[i].size() == d, ErrorCode::shape_mismatch, "latent targets differ in length");
    require(targets[i].allFinite(), ErrorCode::non_finite, "latent target is non-finite");
    y.row(static_cast<Eigen::Index>(i)) = targets[i].transpose();
  }

  MappingModel m;
  m.variant_ = cfg.variant;
  m.schema_ = schema;
  m.columns_ = feature_columns(schema);
  m.output_dim_ = static_cast<std::size_t>(d);
  const Eigen::MatrixXd x = encode_conditions(conditions, schema);
  const auto n = x.rows();

  switch (cfg.variant) {
    case Variant::linear: {
      require(cfg.ridge_lambda > 0.0, ErrorCode::invalid_argument, "ridge_lambda must be positive");
      const Eigen::RowVectorXd x_mean = x.colwise().mean();
      const Eigen::RowVectorXd y_mean = y.colwise().mean();
      const Eigen::MatrixXd xc = x.rowwise() - x_mean;
      const Eigen::MatrixXd yc = y.rowwise() - y_mean;
      Eigen::MatrixXd gram = xc.transpose() * xc;
      gram.diagonal().array() += cfg.ridge_lambda;
      m.coefficients_ = gram.ldlt().solve(xc.transpose() * yc);
      m.intercept_ = (y_mean - x_mean * m.coefficients_).transpose();
      break;
    }
    case Variant::tree: {
      std::vector<std::size_t> rows(static_cast<std::size_t>(n));
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      std::mt19937_64 rng(cfg.tree.seed);
      m.trees_.push_back(RegressionTree::fit(x, y, rows, cfg.tree, std::nullopt, rng));
      break;
    }
    case Variant::forest: {
      cfg.tree.validate();
      const auto p = static_cast<std::size_t>(x.cols());
      const std::size_t subset = cfg.tree.feature_subset.value_or(
          static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p)))));
      std::mt19937_64 rng(cfg.tree.seed);
      std::uniform_int_distribution<std::size_t> draw(0, static_cast<std::size_t>(n) - 1);
      for (std::size_t t = 0; t < cfg.tree.trees; ++t) {
        std::vector<std::size_t> rows(static_cast<std::size_t>(n));
        if (cfg.tree.bootstrap)
          for (auto& r : rows) r = draw(rng);
        else
          std::iota(rows.begin(), rows.end(), std::size_t{0});
        m.trees_.push_back(RegressionTree::fit(x, y, rows, cfg.tree, subset, rng));
      }
      break;
    }
  }

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    loss += (m.predict_encoded(x.row(i).transpose()) - y.row(i).transpose()).squaredNorm();
  m.training_loss_ = loss / static_cast<double>(n);
  return m;
}

Eigen::VectorXd predict(const MappingModel& model, const ConditionVector& c) {
  Eigen::VectorXd out = model.predict_encoded(encode_condition(c, model.schema()));
  require(out.allFinite(), ErrorCode::non_finite, "mapping prediction is non-finite");
  return out;
}

Eigen::VectorXd sample_latent(const Eigen::VectorXd& mu_prime, const Eigen::VectorXd& log_var,
                              const Eigen::VectorXd& noise) {
  require(mu_prime.size() == log_var.size() && mu_prime.size() == noise.size(),
          ErrorCode::shape_mismatch, "sample_latent needs equal-length inputs");
  Eigen::VectorXd z = mu_prime.array() + (0.5 * log_var.array()).exp() * noise.array();
  require(z.allFinite(), ErrorCode::non_finite, "sampled latent is non-finite");
  return z;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string vector_text(const Eigen::VectorXd& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt(v(i));
  }
  return s + "]";
}

std::string test_text(const FeatureColumn& col, double threshold, const ConditionSchema& schema,
                      bool left) {
  if (col.category) {
    const auto& token = schema.token_of(col.slot, CategoryCode{*col.category});
    return schema.slot(col.slot).name + (left ? " != " : " == ") + token;
  }
  return col.name + (left ? " <= " : " > ") + fmt(threshold);
}

void rules_rec(const RegressionTree& tree, std::size_t i, const MappingModel& m, int indent,
               std::ostringstream& out) {
  const auto& n = tree.nodes()[i];
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (n.is_leaf()) {
    out << pad << "leaf samples=" << n.samples << " mu=" << vector_text(n.value) << "\n";
    return;
  }
  const auto& col = m.columns()[static_cast<std::size_t>(n.feature)];
  out << pad << "if " << test_text(col, n.threshold, m.schema(), true) << ":\n";
  rules_rec(tree, static_cast<std::size_t>(n.left), m, indent + 1, out);
  out << pad << "else:  # " << test_text(col, n.threshold, m.schema(), false) << "\n";
  rules_rec(tree, static_cast<std::size_t>(n.right), m, indent + 1, out);
}

nlohmann::json tree_json_rec(const RegressionTree& tree, std::size_t i, const MappingModel& m) {
  const auto& n = tree.nodes()[i];
  if (n.is_leaf())
    return {{"leaf", std::vector<double>(n.value.data(), n.value.data() + n.value.size())},
            {"samples", n.samples}};
  const auto& col = m.columns()[static_cast<std::size_t>(n.feature)];
  auto left = tree_json_rec(tree, static_cast<std::size_t>(n.left), m);
  auto right = tree_json_rec(tree, static_cast<std::size_t>(n.right), m);
  nlohmann::json j{{"feature", m.schema().slot(col.slot).name}, {"samples", n.samples}, {"gain", n.gain}};
  if (col.category) {
    j["categories"] = {m.schema().token_of(col.slot, CategoryCode{*col.category})};
    j["in"] = std::move(right);
    j["not_in"] = std::move(left);
  } else {
    j["threshold"] = n.threshold;
    j["left"] = std::move(left);
    j["right"] = std::move(right);
  }
  return j;
}

}  // namespace

Explanation explain(const MappingModel& model) {
  Explanation e;
  for (const auto& s : model.schema().slots()) e.conditions.push_back(s.name);
  e.importance.assign(e.conditions.size(), 0.0);

  if (model.variant() == Variant::linear) {
    e.linear = true;
    nlohmann::json coef = nlohmann::json::object();
    std::ostringstream out;
    out << "linear mapping (no rules); coefficients per feature:\n";
    for (std::size_t k = 0; k < model.columns().size(); ++k) {
      const Eigen::VectorXd row = model.coefficients().row(static_cast<Eigen::Index>(k)).transpose();
      coef[model.columns()[k].name] = std::vector<double>(row.data(), row.data() + row.size());
      out << "  " << model.columns()[k].name << ": " << vector_text(row) << "\n";
    }
    e.rules = out.str();
    e.tree = {{"coefficients", std::move(coef)},
              {"intercept", std::vector<double>(model.intercept().data(),
                                                model.intercept().data() + model.intercept().size())}};
    return e;
  }

  std::ostringstream out;
  auto trees_json = nlohmann::json::array();
  for (std::size_t t = 0; t < model.trees().size(); ++t) {
    const auto& tree = model.trees()[t];
    if (model.variant() == Variant::forest) out << "tree " << t << ":\n";
    if (tree.nodes().size() > 1) rules_rec(tree, 0, model, model.variant() == Variant::forest ? 1 : 0, out);
    trees_json.push_back(tree_json_rec(tree, 0, model));
    for (const auto& n : tree.nodes())
      if (!n.is_leaf()) e.importance[model.columns()[static_cast<std::size_t>(n.feature)].slot] += n.gain;
  }
  e.rules = out.str();
  e.tree = model.variant() == Variant::tree ? trees_json.front() : trees_json;
  const double total = std::accumulate(e.importance.begin(), e.importance.end(), 0.0);
  if (total > 0.0)
    for (auto& v : e.importance) v /= total;
  return e;
}

nlohmann::json to_json(const MappingModel& model) {
  nlohmann::json j{{"variant", to_string(model.variant())},
                   {"schema", to_json(model.schema())},
                   {"output_dim", model.output_dim()},
                   {"training_loss", model.training_loss()}};
  if (model.variant() == Variant::linear) {
    std::vector<double> coef;
    for (Eigen::Index r = 0; r < model.coefficients().rows(); ++r)
      for (Eigen::Index c = 0; c < model.coefficients().cols(); ++c) coef.push_back(model.coefficients()(r, c));
    j["coefficients"] = std::move(coef);
    j["intercept"] = std::vector<double>(model.intercept().data(),
                                         model.intercept().data() + model.intercept().size());
    return j;
  }
  auto trees = nlohmann::json::array();
  for (const auto& t : model.trees()) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : t.nodes())
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"samples", n.samples},
                       {"impurity", n.impurity},
                       {"gain", n.gain},
                       {"value", std::vector<double>(n.value.data(), n.value.data() + n.value.size())}});
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j;
}

MappingModel mapping_model_from_json(const nlohmann::json& j) {
  MappingModel m;
  m.variant_ = variant_from_string(j.at("variant").get<std::string>());
  m.schema_ = schema_from_json(j.at("schema"));
  m.columns_ = feature_columns(m.schema_);
  m.output_dim_ = j.at("output_dim").get<std::size_t>();
  m.training_loss_ = j.value("training_loss", 0.0);
  const auto p = static_cast<Eigen::Index>(m.columns_.size());
  const auto d = static_cast<Eigen::Index>(m.output_dim_);
  if (m.variant_ == Variant::linear) {
    const auto coef = j.at("coefficients").get<std::vector<double>>();
    const auto icpt = j.at("intercept").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(coef.size()) == p * d && static_cast<Eigen::Index>(icpt.size()) == d,
            ErrorCode::parse_error, "linear mapping arrays do not match declared shape");
    m.coefficients_.resize(p, d);
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = 0; c < d; ++c) m.coefficients_(r, c) = coef[static_cast<std::size_t>(r * d + c)];
    m.intercept_ = Eigen::Map<const Eigen::VectorXd>(icpt.data(), d);
    return m;
  }
  for (const auto& t : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& e : t) {
      TreeNode n;
      n.feature = e.at("feature").get<int>();
      n.threshold = e.at("threshold").get<double>();
      n.left = e.at("left").get<int>();
      n.right = e.at("right").get<int>();
      n.samples = e.at("samples").get<std::size_t>();
      n.impurity = e.value("impurity", 0.0);
      n.gain = e.value("gain", 0.0);
      const auto v = e.at("value").get<std::vector<double>>();
      require(static_cast<Eigen::Index>(v.size()) == d, ErrorCode::parse_error, "tree leaf width mismatch");
      require(n.feature < static_cast<int>(p), ErrorCode::parse_error, "tree feature out of range");
      n.value = Eigen::Map<const Eigen::VectorXd>(v.data(), d);
      nodes.push_back(std::move(n));
    }
    m.trees_.emplace_back(std::move(nodes));
  }
  require(!m.trees_.empty(), ErrorCode::parse_error, "tree mapping has no trees");
  return m;
}

}  // namespace cts::mapping
