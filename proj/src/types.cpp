#include "bbsteal/types.hpp"

#include <cmath>
#include <stdexcept>

namespace bbsteal {

void ProbVector::validate() const {
  if (probs.empty()) throw std::invalid_argument("ProbVector: empty");
  float sum = 0.0f;
  for (float p : probs) {
    if (!(p >= 0.0f)) throw std::invalid_argument("ProbVector: negative entry");
    sum += p;
  }
  if (std::fabs(sum - 1.0f) > 1e-5f) throw std::invalid_argument("ProbVector: entries do not sum to 1");
}

void HardLabel::validate() const {
  if (onehot.empty()) throw std::invalid_argument("HardLabel: empty");
  int ones = 0, where = -1;
  for (size_t i = 0; i < onehot.size(); ++i) {
    if (onehot[i] == 1.0f) {
      ++ones;
      where = static_cast<int>(i);
    } else if (onehot[i] != 0.0f) {
      throw std::invalid_argument("HardLabel: entry not in {0,1}");
    }
  }
  if (ones != 1) throw std::invalid_argument("HardLabel: must have exactly one 1");
  if (where != class_index) throw std::invalid_argument("HardLabel: class_index mismatch");
}

HardLabel hard_label_from_class(int class_index, int num_classes) {
  if (class_index < 0 || class_index >= num_classes) {
    throw std::invalid_argument("hard_label_from_class: class out of range");
  }
  HardLabel h;
  h.onehot.assign(num_classes, 0.0f);
  h.onehot[class_index] = 1.0f;
  h.class_index = class_index;
  return h;
}

int label_class(const Label& l) {
  if (const auto* h = std::get_if<HardLabel>(&l)) return h->class_index;
  if (const auto* p = std::get_if<ProbVector>(&l)) {
    int best = 0;
    for (size_t i = 1; i < p->probs.size(); ++i) {
      if (p->probs[i] > p->probs[best]) best = static_cast<int>(i);
    }
    return best;
  }
  throw std::invalid_argument("label_class: unlabeled sample");
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::unlabeled: return "unlabeled";
    case Provenance::transfer: return "transfer";
    case Provenance::erased: return "erased";
    case Provenance::pseudo: return "pseudo";
  }
  return "?";
}

Provenance provenance_from_name(const std::string& s) {
  if (s == "unlabeled") return Provenance::unlabeled;
  if (s == "transfer") return Provenance::transfer;
  if (s == "erased") return Provenance::erased;
  if (s == "pseudo") return Provenance::pseudo;
  throw std::invalid_argument("unknown provenance: " + s);
}

void SampleSet::add(Sample s) {
  if (s.image.id.empty()) throw std::invalid_argument("SampleSet: sample without id");
  if (ids_.count(s.image.id)) throw std::invalid_argument("SampleSet: duplicate id " + s.image.id);
  switch (s.provenance) {
    case Provenance::unlabeled:
      if (!is_unlabeled(s.label)) throw std::invalid_argument("SampleSet: unlabeled item carries a label");
      break;
    case Provenance::pseudo:
      if (!has_prob_label(s.label)) throw std::invalid_argument("SampleSet: pseudo item needs a ProbVector label");
      break;
    case Provenance::transfer:
    case Provenance::erased:
      if (is_unlabeled(s.label)) throw std::invalid_argument("SampleSet: transfer/erased item needs a label");
      break;
  }
  ids_.insert(s.image.id);
  items_.push_back(std::move(s));
}

void SampleSet::clear() {
  items_.clear();
  ids_.clear();
}

}  // namespace bbsteal
