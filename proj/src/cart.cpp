#include "enrollsim/cart.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "enrollsim/rng.hpp"
#include "enrollsim/textio.hpp"

namespace enrollsim::cart {

void Dataset::add_row(std::span<const double> xs, double y_value) {
  if (xs.size() != names.size())
    throw std::invalid_argument("row width does not match predictor count");
  x.insert(x.end(), xs.begin(), xs.end());
  y.push_back(y_value);
}

void Dataset::validate() const {
  if (names.empty()) throw std::invalid_argument("dataset has no predictors");
  if (x.size() != y.size() * names.size())
    throw std::invalid_argument("dataset shape mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite predictor value");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite response value");
}

Tree::Tree(std::unique_ptr<Node> root) : root_(std::move(root)) {
  if (!root_) throw std::invalid_argument("tree needs a root");
}

namespace {

int count_splits(const Node& n) {
  if (n.is_leaf()) return 0;
  return 1 + count_splits(*n.left) + count_splits(*n.right);
}

std::unique_ptr<Node> clone_node(const Node& n, double alpha) {
  auto out = std::make_unique<Node>();
  out->n = n.n;
  out->mean = n.mean;
  out->sse = n.sse;
  if (!n.is_leaf() && n.collapse_alpha > alpha) {
    out->split_var = n.split_var;
    out->split_value = n.split_value;
    out->improvement = n.improvement;
    out->collapse_alpha = n.collapse_alpha;
    out->left = clone_node(*n.left, alpha);
    out->right = clone_node(*n.right, alpha);
  }
  return out;
}

}  // namespace

int Tree::n_splits() const { return count_splits(*root_); }

Tree Tree::clone() const {
  return Tree(clone_node(*root_, -std::numeric_limits<double>::infinity()));
}

Tree Tree::clone_pruned(double alpha) const { return Tree(clone_node(*root_, alpha)); }

// ===== fitting =====

namespace {

struct BestSplit {
  bool found = false;
  int var = -1;
  double value = 0;
  double gain = 0;  // SSE drop
};

struct Builder {
  const Dataset& data;
  const FitControl& ctl;
  double min_gain = 0;               // absolute, from the root SSE
  std::vector<std::size_t> rows;     // permuted in place while building
  std::vector<std::pair<double, double>> scratch;  // (x, y), reused per scan

  std::unique_ptr<Node> build(std::size_t lo, std::size_t hi);
  BestSplit best_split(std::size_t lo, std::size_t hi, double sum);
};

BestSplit Builder::best_split(std::size_t lo, std::size_t hi, double sum) {
  BestSplit best;
  const auto m = static_cast<std::int64_t>(hi - lo);
  const double total_term = sum * sum / static_cast<double>(m);
  for (std::size_t v = 0; v < data.n_vars(); ++v) {
    scratch.clear();
    for (std::size_t i = lo; i < hi; ++i)
      scratch.emplace_back(data.at(rows[i], v), data.y[rows[i]]);
    std::sort(scratch.begin(), scratch.end());
    if (scratch.front().first == scratch.back().first) continue;  // constant predictor

    double sum_l = 0;
    std::int64_t n_l = 0;
    for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
      sum_l += scratch[i].second;
      ++n_l;
      if (scratch[i].first == scratch[i + 1].first) continue;  // not a boundary
      if (n_l < ctl.min_leaf_rows || m - n_l < ctl.min_leaf_rows) continue;
      const double sum_r = sum - sum_l;
      const auto n_r = static_cast<double>(m - n_l);
      const double gain =
          sum_l * sum_l / static_cast<double>(n_l) + sum_r * sum_r / n_r - total_term;
      // Strict comparison: the first candidate at a given gain wins, and
      // candidates arrive ordered by (var, value).
      if (gain > best.gain) {
        best.found = true;
        best.var = static_cast<int>(v);
        best.value = scratch[i].first + (scratch[i + 1].first - scratch[i].first) / 2;
        best.gain = gain;
      }
    }
  }
  if (best.found && best.gain <= min_gain) best.found = false;
  return best;
}

std::unique_ptr<Node> Builder::build(std::size_t lo, std::size_t hi) {
  auto node = std::make_unique<Node>();
  const auto m = static_cast<std::int64_t>(hi - lo);
  node->n = m;
  double sum = 0;
  for (std::size_t i = lo; i < hi; ++i) sum += data.y[rows[i]];
  node->mean = sum / static_cast<double>(m);
  double sse = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double d = data.y[rows[i]] - node->mean;
    sse += d * d;
  }
  node->sse = sse;

  if (m < ctl.min_node_rows || m < 2 * ctl.min_leaf_rows || sse <= 0.0) return node;
  const BestSplit split = best_split(lo, hi, sum);
  if (!split.found) return node;

  // Stable partition keeps row order inside each side, so identical data
  // produce bit-identical trees regardless of prior permutations.
  const auto mid_it = std::stable_partition(
      rows.begin() + static_cast<std::ptrdiff_t>(lo),
      rows.begin() + static_cast<std::ptrdiff_t>(hi),
      [&](std::size_t r) { return data.at(r, static_cast<std::size_t>(split.var)) <= split.value; });
  const auto mid = static_cast<std::size_t>(mid_it - rows.begin());

  node->split_var = split.var;
  node->split_value = split.value;
  node->improvement = std::max(split.gain, 0.0);
  node->left = build(lo, mid);
  node->right = build(mid, hi);
  return node;
}

}  // namespace

Tree fit_tree(const Dataset& data, const FitControl& ctl) {
  data.validate();
  if (data.n_rows() == 0) throw std::invalid_argument("cannot fit an empty dataset");
  if (ctl.min_leaf_rows < 1 || ctl.min_node_rows < 2)
    throw std::invalid_argument("fit control limits out of range");

  Builder b{data, ctl, 0.0, {}, {}};
  b.rows.resize(data.n_rows());
  std::iota(b.rows.begin(), b.rows.end(), std::size_t{0});

  // Root SSE sets the improvement floor.
  double sum = 0;
  for (double v : data.y) sum += v;
  const double mean = sum / static_cast<double>(data.n_rows());
  double root_sse = 0;
  for (double v : data.y) root_sse += (v - mean) * (v - mean);
  b.min_gain = ctl.min_improvement_fraction * root_sse;

  return Tree(b.build(0, data.n_rows()));
}

// ===== pruning =====

namespace {

struct SubtreeAgg {
  std::int64_t leaves = 0;
  double leaf_sse = 0;
};

// Leaf count and summed leaf SSE of the live subtree under n, where nodes
// with collapse_alpha <= cutoff count as leaves.
SubtreeAgg live_agg(const Node& n, double cutoff) {
  if (n.is_leaf() || n.collapse_alpha <= cutoff) return {1, n.sse};
  SubtreeAgg l = live_agg(*n.left, cutoff);
  SubtreeAgg r = live_agg(*n.right, cutoff);
  return {l.leaves + r.leaves, l.leaf_sse + r.leaf_sse};
}

void collect_live_internals(Node& n, double cutoff, std::vector<Node*>& out) {
  if (n.is_leaf() || n.collapse_alpha <= cutoff) return;
  out.push_back(&n);
  collect_live_internals(*n.left, cutoff, out);
  collect_live_internals(*n.right, cutoff, out);
}

void mark_collapsed(Node& n, double cutoff, double alpha) {
  if (n.is_leaf() || n.collapse_alpha <= cutoff) return;
  n.collapse_alpha = alpha;
  mark_collapsed(*n.left, cutoff, alpha);
  mark_collapsed(*n.right, cutoff, alpha);
}

}  // namespace

PruneSequence prune_sequence(Tree& tree) {
  PruneSequence seq;
  seq.tree = &tree;

  // Work against a moving cutoff: a node is still part of the current
  // subtree while its collapse_alpha exceeds the cutoff.
  double cutoff = -1;  // every annotation so far is +inf, so all live
  seq.entries.push_back({0.0, tree.n_splits()});

  while (!tree.root().is_leaf() && tree.root().collapse_alpha > cutoff) {
    std::vector<Node*> internals;
    collect_live_internals(tree.root(), cutoff, internals);
    if (internals.empty()) break;

    // Weakest link: smallest per-split cost of keeping the subtree.
    double alpha = std::numeric_limits<double>::infinity();
    for (Node* t : internals) {
      const SubtreeAgg agg = live_agg(*t, cutoff);
      const double g =
          std::max(0.0, (t->sse - agg.leaf_sse) / static_cast<double>(agg.leaves - 1));
      if (g < alpha) alpha = g;
    }
    // Collapse every node whose cost ties the minimum (within fp noise).
    // Descendants of a collapsed node go with it.
    const double tie_limit = alpha * (1 + 1e-12) + 1e-300;
    std::vector<Node*> doomed;
    for (Node* t : internals) {
      const SubtreeAgg agg = live_agg(*t, cutoff);
      const double g =
          std::max(0.0, (t->sse - agg.leaf_sse) / static_cast<double>(agg.leaves - 1));
      if (g <= tie_limit) doomed.push_back(t);
    }

    // The recorded alpha must rise strictly; merge a step that failed to
    // (fp degeneracies) into the previous entry.
    const bool merge = alpha <= seq.entries.back().alpha;
    const double recorded = merge ? seq.entries.back().alpha : alpha;
    for (Node* t : doomed) mark_collapsed(*t, cutoff, recorded);
    cutoff = recorded;

    int remaining = 0;
    {
      std::vector<Node*> live;
      collect_live_internals(tree.root(), cutoff, live);
      remaining = static_cast<int>(live.size());
    }
    if (merge)
      seq.entries.back().n_splits = remaining;
    else
      seq.entries.push_back({recorded, remaining});
  }
  return seq;
}

std::vector<double> PruneSequence::eval_alphas() const {
  std::vector<double> out(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i + 1 < entries.size())
      out[i] = std::sqrt(entries[i].alpha * entries[i + 1].alpha);
    else
      out[i] = entries[i].alpha;
  }
  return out;
}

std::size_t PruneSequence::entry_for_size(int target_splits) const {
  if (target_splits < 0) target_splits = 0;
  // Entries shrink monotonically; the first entry small enough is the
  // largest qualifying subtree.
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].n_splits <= target_splits) return i;
  return entries.size() - 1;  // root always qualifies for target >= 0
}

Tree prune_to_size(const PruneSequence& seq, int target_splits) {
  if (!seq.tree || seq.entries.empty())
    throw std::invalid_argument("prune sequence is not attached to a tree");
  return seq.tree->clone_pruned(seq.entries[seq.entry_for_size(target_splits)].alpha);
}

double predict(const Node& root, std::span<const double> x) {
  const Node* n = &root;
  while (!n->is_leaf())
    n = (x[static_cast<std::size_t>(n->split_var)] <= n->split_value) ? n->left.get()
                                                                      : n->right.get();
  return n->mean;
}

double predict_at(const Node& root, std::span<const double> x, double alpha) {
  const Node* n = &root;
  while (!n->is_leaf() && n->collapse_alpha > alpha)
    n = (x[static_cast<std::size_t>(n->split_var)] <= n->split_value) ? n->left.get()
                                                                      : n->right.get();
  return n->mean;
}

// ===== cross-validation =====

double CvResult::rmse(std::size_t idx) const {
  return std::sqrt(std::max(0.0, entries.at(idx).cv_mean));
}

CvResult cross_validate(const Dataset& data, const FitControl& ctl, int folds,
                        std::uint64_t seed) {
  data.validate();
  const std::size_t n = data.n_rows();
  if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (static_cast<std::size_t>(folds) > n)
    throw std::invalid_argument("more folds than rows");

  Tree master = fit_tree(data, ctl);
  PruneSequence seq = prune_sequence(master);
  const std::vector<double> evals = seq.eval_alphas();
  const std::size_t m = seq.entries.size();

  // Balanced fold assignment off a seeded shuffle.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Engine eng(seed);
  eng.partial_shuffle(order, n);
  std::vector<int> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % folds);

  std::vector<std::vector<double>> fold_mse(static_cast<std::size_t>(folds),
                                            std::vector<double>(m, 0.0));
  for (int f = 0; f < folds; ++f) {
    Dataset train;
    train.names = data.names;
    std::vector<std::size_t> test_rows;
    for (std::size_t r = 0; r < n; ++r) {
      if (fold_of[r] == f)
        test_rows.push_back(r);
      else
        train.add_row(data.row(r), data.y[r]);
    }
    Tree ft = fit_tree(train, ctl);
    prune_sequence(ft);  // annotate; the fold's own alphas are not needed
    for (std::size_t i = 0; i < m; ++i) {
      double err = 0;
      for (std::size_t r : test_rows) {
        const double pred = predict_at(ft.root(), data.row(r), evals[i]);
        const double d = data.y[r] - pred;
        err += d * d;
      }
      fold_mse[static_cast<std::size_t>(f)][i] = err / static_cast<double>(test_rows.size());
    }
  }

  std::vector<CvEntry> entries(m);
  for (std::size_t i = 0; i < m; ++i) {
    CvEntry& e = entries[i];
    e.alpha = seq.entries[i].alpha;
    e.eval_alpha = evals[i];
    e.n_splits = seq.entries[i].n_splits;
    double mean = 0;
    for (int f = 0; f < folds; ++f) mean += fold_mse[static_cast<std::size_t>(f)][i];
    mean /= static_cast<double>(folds);
    double var = 0;
    for (int f = 0; f < folds; ++f) {
      const double d = fold_mse[static_cast<std::size_t>(f)][i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(folds - 1);
    e.cv_mean = mean;
    e.cv_se = std::sqrt(var / static_cast<double>(folds));
  }

  // Minimum with ties resolved toward fewer splits: scan toward the root,
  // accepting any entry at least as good.
  std::size_t idx_min = 0;
  for (std::size_t i = 1; i < m; ++i)
    if (entries[i].cv_mean <= entries[idx_min].cv_mean) idx_min = i;
  // One-SE rule: smallest tree whose score stays within one standard error
  // of the minimum.
  const double limit = entries[idx_min].cv_mean + entries[idx_min].cv_se;
  std::size_t idx_1se = idx_min;
  for (std::size_t i = idx_min; i < m; ++i)
    if (entries[i].cv_mean <= limit) idx_1se = i;

  CvResult out{std::move(entries), idx_min, idx_1se,
               master.clone_pruned(seq.entries[idx_min].alpha),
               master.clone_pruned(seq.entries[idx_1se].alpha)};
  return out;
}

// ===== reporting =====

std::map<int, double> variable_importance(const Node& root) {
  std::map<int, double> raw;
  double total = 0;
  // Iterative DFS; trees are shallow but recursion depth is data-dependent.
  std::vector<const Node*> stack{&root};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->is_leaf()) continue;
    raw[n->split_var] += n->improvement;
    total += n->improvement;
    stack.push_back(n->left.get());
    stack.push_back(n->right.get());
  }
  if (total <= 0) return {};
  for (auto& [var, v] : raw) v /= total;
  return raw;
}

std::vector<OutlierFlag> outlier_report(const Dataset& data, double threshold_sd) {
  data.validate();
  if (!(threshold_sd > 0)) throw std::invalid_argument("threshold_sd must be positive");

  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    const auto row = data.row(r);
    groups[std::vector<double>(row.begin(), row.end())].push_back(r);
  }

  double ss = 0;
  std::int64_t dof = 0;
  std::vector<std::pair<const std::vector<std::size_t>*, double>> with_means;
  for (const auto& [key, rows] : groups) {
    double mean = 0;
    for (std::size_t r : rows) mean += data.y[r];
    mean /= static_cast<double>(rows.size());
    with_means.emplace_back(&rows, mean);
    if (rows.size() >= 2) {
      for (std::size_t r : rows) {
        const double d = data.y[r] - mean;
        ss += d * d;
      }
      dof += static_cast<std::int64_t>(rows.size()) - 1;
    }
  }
  if (dof <= 0) return {};
  const double pooled_sd = std::sqrt(ss / static_cast<double>(dof));
  if (pooled_sd <= 0) return {};

  std::vector<OutlierFlag> flags;
  for (const auto& [rows, mean] : with_means) {
    for (std::size_t r : *rows) {
      const double dev = std::abs(data.y[r] - mean) / pooled_sd;
      if (dev > threshold_sd) flags.push_back({r, dev});
    }
  }
  std::sort(flags.begin(), flags.end(),
            [](const OutlierFlag& a, const OutlierFlag& b) { return a.row < b.row; });
  return flags;
}

namespace {

void write_node(const Node& n, const std::vector<std::string>& names, std::ostream& out,
                int depth) {
  for (int i = 0; i < depth; ++i) out << "  ";
  if (n.is_leaf()) {
    out << "<leaf> | n=" << n.n << " mean=" << text::fmt_double(n.mean) << '\n';
    return;
  }
  out << names.at(static_cast<std::size_t>(n.split_var)) << " <= "
      << text::fmt_double(n.split_value) << " | n=" << n.n << " mean="
      << text::fmt_double(n.mean) << " improvement=" << text::fmt_double(n.improvement)
      << '\n';
  write_node(*n.left, names, out, depth + 1);
  write_node(*n.right, names, out, depth + 1);
}

}  // namespace

void write_split_listing(const Node& root, const std::vector<std::string>& names,
                         std::ostream& out) {
  write_node(root, names, out, 0);
}

}  // namespace enrollsim::cart
