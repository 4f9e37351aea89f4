#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace enrollsim::cart {

// Numeric regression dataset: n rows by d predictors plus a response.
struct Dataset {
  std::vector<std::string> names;  // one per predictor
  std::vector<double> x;           // row-major, n * d
  std::vector<double> y;

  std::size_t n_rows() const { return y.size(); }
  std::size_t n_vars() const { return names.size(); }
  double at(std::size_t row, std::size_t var) const { return x[row * names.size() + var]; }
  std::span<const double> row(std::size_t r) const {
    return {x.data() + r * names.size(), names.size()};
  }
  void add_row(std::span<const double> xs, double y_value);
  void validate() const;  // throws std::invalid_argument
};

struct Node {
  std::int64_t n = 0;       // rows reaching the node
  double mean = 0;          // response mean of those rows
  double sse = 0;           // sum of squared errors around that mean
  int split_var = -1;       // -1 marks a leaf
  double split_value = 0;   // goes left when x[split_var] <= split_value
  double improvement = 0;   // SSE drop the split achieved
  // Weakest-link annotation: the penalty at which this split collapses.
  // Filled by prune_sequence; +inf until then and on leaves.
  double collapse_alpha = std::numeric_limits<double>::infinity();
  std::unique_ptr<Node> left, right;

  bool is_leaf() const { return split_var < 0; }
};

struct FitControl {
  std::int64_t min_node_rows = 20;   // fewer rows: do not try to split
  std::int64_t min_leaf_rows = 7;    // smallest child allowed
  // A split must beat this fraction of the root SSE to be kept.
  double min_improvement_fraction = 1e-6;
};

class Tree {
 public:
  explicit Tree(std::unique_ptr<Node> root);
  Tree(Tree&&) noexcept = default;
  Tree& operator=(Tree&&) noexcept = default;

  const Node& root() const { return *root_; }
  Node& root() { return *root_; }
  int n_splits() const;  // internal node count
  Tree clone() const;
  // Copy with every split whose collapse_alpha <= alpha turned into a leaf.
  Tree clone_pruned(double alpha) const;

 private:
  std::unique_ptr<Node> root_;
};

// Greedy SSE-minimizing fit. Split points sit halfway between consecutive
// observed predictor values; ties between equally good splits resolve to
// the lowest variable index, then the lowest split value.
Tree fit_tree(const Dataset& data, const FitControl& ctl);

// One pruning step of the cost-complexity sequence: at penalty alpha the
// tree keeps n_splits splits.
struct PruneEntry {
  double alpha = 0;
  int n_splits = 0;
};

// Nested subtree family produced by weakest-link pruning. entries.front()
// is the full tree at alpha 0; entries.back() is the bare root. Alphas
// increase strictly, split counts decrease strictly. The sequence refers to
// the tree it was built from, which must stay alive.
struct PruneSequence {
  const Tree* tree = nullptr;
  std::vector<PruneEntry> entries;

  // Representative penalty for each step: the geometric mean of adjacent
  // alphas, which lands inside the half-open interval where the step is
  // optimal. The last step keeps its own alpha.
  std::vector<double> eval_alphas() const;
  // Index of the last entry with n_splits <= target: the largest subtree
  // in the family not exceeding the requested size.
  std::size_t entry_for_size(int target_splits) const;
};

// Annotates collapse_alpha across the tree and returns the sequence.
PruneSequence prune_sequence(Tree& tree);

// Subtree of the annotated tree with the most splits not exceeding
// target_splits. When the sequence skips the exact size, the next smaller
// member stands in for it.
Tree prune_to_size(const PruneSequence& seq, int target_splits);

double predict(const Node& root, std::span<const double> x);
// Prediction in the subtree implied by penalty alpha, without materializing
// it: splits with collapse_alpha <= alpha act as leaves.
double predict_at(const Node& root, std::span<const double> x, double alpha);

struct CvEntry {
  double alpha = 0;       // sequence alpha on the full-data tree
  double eval_alpha = 0;  // penalty the folds were scored at
  int n_splits = 0;
  double cv_mean = 0;     // mean over folds of per-fold test MSE
  double cv_se = 0;       // standard error of that mean
};

struct CvResult {
  std::vector<CvEntry> entries;  // aligned with the full-data prune sequence
  std::size_t idx_min = 0;       // lowest cv_mean; ties go to the smaller tree
  std::size_t idx_1se = 0;       // smallest tree within one SE of the minimum
  Tree tree_min;
  Tree tree_1se;

  double rmse(std::size_t idx) const;
};

// K-fold cross-validated cost-complexity selection. Folds are assigned by
// a seeded shuffle, sized within one row of each other. Requires
// 2 <= folds <= n_rows.
CvResult cross_validate(const Dataset& data, const FitControl& ctl, int folds,
                        std::uint64_t seed);

// Total SSE improvement contributed by each variable's splits, normalized
// to sum to 1. Empty for a bare root.
std::map<int, double> variable_importance(const Node& root);

// Rows whose response sits more than threshold_sd pooled standard
// deviations from the mean of their identical-predictor group. Groups with
// fewer than two rows cannot contribute to the pooled spread.
struct OutlierFlag {
  std::size_t row = 0;
  double deviation_sd = 0;
};
std::vector<OutlierFlag> outlier_report(const Dataset& data, double threshold_sd);

// Indented text listing: one line per node, split lines as
// "name <= value | n=.. mean=.. improvement=..", leaves as
// "<leaf> | n=.. mean=..".
void write_split_listing(const Node& root, const std::vector<std::string>& names,
                         std::ostream& out);

}  // namespace enrollsim::cart
