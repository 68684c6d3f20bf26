#ifndef BBSTEAL_TYPES_HPP
#define BBSTEAL_TYPES_HPP

#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "bbsteal/tensor.hpp"

namespace bbsteal {

// Class scores on the probability simplex (entries >= 0, sum to 1 within 1e-5).
struct ProbVector {
  std::vector<float> probs;

  int num_classes() const { return static_cast<int>(probs.size()); }
  void validate() const;
};

// One-hot victim output under hard-label truncation.
struct HardLabel {
  std::vector<float> onehot;
  int class_index = -1;

  int num_classes() const { return static_cast<int>(onehot.size()); }
  void validate() const;
};

HardLabel hard_label_from_class(int class_index, int num_classes);

using Label = std::variant<std::monostate, HardLabel, ProbVector>;

inline bool has_hard_label(const Label& l) { return std::holds_alternative<HardLabel>(l); }
inline bool has_prob_label(const Label& l) { return std::holds_alternative<ProbVector>(l); }
inline bool is_unlabeled(const Label& l) { return std::holds_alternative<std::monostate>(l); }

// The class a label commits to: class_index for hard labels, argmax
// (lowest-index tie break) for probability labels.
int label_class(const Label& l);

enum class Provenance { unlabeled, transfer, erased, pseudo };

const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& s);

struct Sample {
  ImageTensor image;
  Label label;
  Provenance provenance = Provenance::unlabeled;
};

// Ordered sample collection with unique ids and provenance/label consistency:
// transfer/erased items are labeled, pseudo items carry probability labels,
// unlabeled items carry none.
class SampleSet {
 public:
  void add(Sample s);
  bool contains(const std::string& id) const { return ids_.count(id) > 0; }

  const std::vector<Sample>& items() const { return items_; }
  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Sample& operator[](size_t i) const { return items_[i]; }
  Sample& at(size_t i) { return items_[i]; }

  void clear();

 private:
  std::vector<Sample> items_;
  std::unordered_set<std::string> ids_;
};

}  // namespace bbsteal

#endif  // BBSTEAL_TYPES_HPP
