#ifndef BBSTEAL_DEFENSE_HPP
#define BBSTEAL_DEFENSE_HPP

#include <memory>
#include <string>
#include <vector>

#include "bbsteal/classifier.hpp"
#include "bbsteal/train.hpp"
#include "bbsteal/types.hpp"

namespace bbsteal {

// Perturbation applied by the victim to its probability vector before any
// output truncation.
class Defense {
 public:
  virtual ~Defense() = default;
  virtual ProbVector adjust(const ProbVector& probs, const ImageTensor& x) const = 0;
  virtual std::string kind() const = 0;
};

// y' = (1 - alpha) f(x) + alpha f'(x) with alpha = sigmoid(-nu (max f - tau)):
// confident (in-distribution) queries pass through, low-confidence queries are
// answered mostly by the misinformation model.
ProbVector misinform(const ProbVector& probs, const ProbVector& misinfo_probs, double nu,
                     double tau);

double misinform_alpha(double max_prob, double nu, double tau);

// Trains f' to minimize E[-log(1 - f'(x)_y)], i.e. to put as little mass as
// possible on the correct class.
void train_misinformation_model(Classifier& model, const std::vector<TrainItem>& items,
                                const TrainConfig& config);

class MisinformationDefense : public Defense {
 public:
  MisinformationDefense(Classifier misinfo_model, double nu, double tau);

  ProbVector adjust(const ProbVector& probs, const ImageTensor& x) const override;
  std::string kind() const override { return "misinformation"; }

  const Classifier& misinfo_model() const { return misinfo_model_; }
  double nu() const { return nu_; }
  double tau() const { return tau_; }

 private:
  Classifier misinfo_model_;
  double nu_, tau_;
};

enum class PoisonScope { last_layer, all_params };

struct PoisonConfig {
  double eps = 0.5;        // L1 budget on the simplex
  int steps = 50;
  double step_size = 0.0;  // 0 means eps / 10
  PoisonScope scope = PoisonScope::last_layer;
  uint64_t seed = 0;
};

// Perturbs y on the simplex within an L1 ball of radius eps, approximately
// maximizing the angular deviation of the surrogate training gradient
// || G^T y~ / ||.|| - G^T y / ||.|| ||^2 with G = d log F(x) / dw, via
// projected gradient ascent with a feasible retraction.
class PoisoningDefense : public Defense {
 public:
  PoisoningDefense(Classifier surrogate, PoisonConfig config);

  ProbVector adjust(const ProbVector& probs, const ImageTensor& x) const override;
  std::string kind() const override { return "poisoning"; }

  ProbVector poison(const ProbVector& y, const ImageTensor& x) const;

  // Objective value for a given perturbed vector; exposed for the
  // random-search comparison in tests.
  double objective(const ProbVector& y_tilde, const ProbVector& y, const ImageTensor& x) const;

  const PoisonConfig& config() const { return config_; }

 private:
  // rows: per-class gradient of log prob w.r.t. the chosen parameter subset
  std::vector<std::vector<float>> gradient_matrix(const ImageTensor& x) const;

  Classifier surrogate_;
  PoisonConfig config_;
};

// Exact feasibility retraction used inside the ascent: clip to >= 0,
// renormalize to the simplex, then shrink toward y if the L1 budget is
// exceeded.
std::vector<double> retract_to_feasible(const std::vector<double>& v,
                                        const std::vector<double>& y, double eps);

}  // namespace bbsteal

#endif  // BBSTEAL_DEFENSE_HPP
