#include "bbsteal/defense.hpp"

#include <cmath>
#include <stdexcept>

#include "bbsteal/kernels.hpp"

namespace bbsteal {

double misinform_alpha(double max_prob, double nu, double tau) {
  // numerically stable sigmoid(-t), t = nu (max f - tau)
  const double t = nu * (max_prob - tau);
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

ProbVector misinform(const ProbVector& probs, const ProbVector& misinfo_probs, double nu,
                     double tau) {
  probs.validate();
  misinfo_probs.validate();
  if (probs.num_classes() != misinfo_probs.num_classes()) {
    throw std::invalid_argument("misinform: class count mismatch");
  }
  float maxf = probs.probs[0];
  for (float p : probs.probs) maxf = std::max(maxf, p);
  const double alpha = misinform_alpha(maxf, nu, tau);
  if (alpha == 0.0) return probs;
  if (alpha == 1.0) return misinfo_probs;
  ProbVector out;
  out.probs.resize(probs.probs.size());
  for (size_t i = 0; i < out.probs.size(); ++i) {
    out.probs[i] = static_cast<float>((1.0 - alpha) * probs.probs[i] +
                                      alpha * misinfo_probs.probs[i]);
  }
  return out;
}

void train_misinformation_model(Classifier& model, const std::vector<TrainItem>& items,
                                const TrainConfig& config) {
  fit(model, items, config, LossKind::complement_log);
}

MisinformationDefense::MisinformationDefense(Classifier misinfo_model, double nu, double tau)
    : misinfo_model_(std::move(misinfo_model)), nu_(nu), tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("MisinformationDefense: tau in (0,1)");
}

ProbVector MisinformationDefense::adjust(const ProbVector& probs, const ImageTensor& x) const {
  if (probs.num_classes() != misinfo_model_.num_classes()) {
    throw std::invalid_argument("MisinformationDefense: class count mismatch");
  }
  return misinform(probs, misinfo_model_.predict_one(x), nu_, tau_);
}

PoisoningDefense::PoisoningDefense(Classifier surrogate, PoisonConfig config)
    : surrogate_(std::move(surrogate)), config_(config) {
  if (config_.eps < 0.0) throw std::invalid_argument("PoisoningDefense: eps must be >= 0");
  if (config_.steps <= 0) throw std::invalid_argument("PoisoningDefense: steps must be positive");
}

std::vector<std::vector<float>> PoisoningDefense::gradient_matrix(const ImageTensor& x) const {
  const int nc = surrogate_.num_classes();
  std::vector<std::vector<float>> g(nc);

  if (config_.scope == PoisonScope::last_layer) {
    // logits z = W h + b, log p_i = z_i - lse(z):
    // d log p_i / d W_{jk} = (1[i=j] - p_j) h_k, d log p_i / d b_j = 1[i=j] - p_j
    const std::vector<float> h = surrogate_.features({x})[0];
    const ProbVector p = surrogate_.predict_one(x);
    const size_t hd = h.size();
    for (int i = 0; i < nc; ++i) {
      g[i].resize(nc * (hd + 1));
      for (int j = 0; j < nc; ++j) {
        const float coef = (i == j ? 1.0f : 0.0f) - p.probs[j];
        for (size_t k = 0; k < hd; ++k) g[i][j * hd + k] = coef * h[k];
        g[i][nc * hd + j] = coef;
      }
    }
    return g;
  }

  // all parameters: one backward pass per class with d log p / d logits = e_i - p
  const Net& net = surrogate_.net();
  Workspace ws;
  Batch b = pack_batch(std::vector<const Tensor3*>{&x.data});
  net.forward(b, ws);
  const Batch& logits = ws.acts.back();
  std::vector<float> probs(nc);
  kref::softmax_rows(logits.v.data(), 1, nc, probs.data());
  for (int i = 0; i < nc; ++i) {
    Batch dlogits(1, nc, 1, 1);
    for (int j = 0; j < nc; ++j) dlogits.v[j] = (i == j ? 1.0f : 0.0f) - probs[j];
    Grads grads = net.make_grads();
    net.backward(dlogits, ws, &grads, nullptr);
    size_t total = 0;
    for (const auto& t : grads) total += t.size();
    g[i].reserve(total);
    for (const auto& t : grads) g[i].insert(g[i].end(), t.begin(), t.end());
  }
  return g;
}

namespace {

// u = G^T v in double precision
std::vector<double> gt_apply(const std::vector<std::vector<float>>& g,
                             const std::vector<double>& v) {
  const size_t p = g[0].size();
  std::vector<double> out(p, 0.0);
  for (size_t i = 0; i < g.size(); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const std::vector<float>& row = g[i];
    for (size_t k = 0; k < p; ++k) out[k] += vi * row[k];
  }
  return out;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> retract_to_feasible(const std::vector<double>& v,
                                        const std::vector<double>& y, double eps) {
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] > 0.0 ? v[i] : 0.0;
    sum += out[i];
  }
  if (sum <= 0.0) return y;
  for (double& x : out) x /= sum;
  double l1 = 0.0;
  for (size_t i = 0; i < out.size(); ++i) l1 += std::fabs(out[i] - y[i]);
  if (l1 > eps) {
    const double t = eps / l1;
    for (size_t i = 0; i < out.size(); ++i) out[i] = y[i] + t * (out[i] - y[i]);
  }
  return out;
}

double PoisoningDefense::objective(const ProbVector& y_tilde, const ProbVector& y,
                                   const ImageTensor& x) const {
  const auto g = gradient_matrix(x);
  std::vector<double> yt(y_tilde.probs.begin(), y_tilde.probs.end());
  std::vector<double> y0(y.probs.begin(), y.probs.end());
  std::vector<double> gt = gt_apply(g, yt);
  std::vector<double> g0 = gt_apply(g, y0);
  const double nt = norm2(gt), n0 = norm2(g0);
  double obj = 0.0;
  for (size_t k = 0; k < gt.size(); ++k) {
    const double a = nt > 0.0 ? gt[k] / nt : 0.0;
    const double b = n0 > 0.0 ? g0[k] / n0 : 0.0;
    obj += (a - b) * (a - b);
  }
  return obj;
}

ProbVector PoisoningDefense::poison(const ProbVector& y, const ImageTensor& x) const {
  y.validate();
  if (config_.eps == 0.0) return y;
  const int nc = y.num_classes();
  const auto g = gradient_matrix(x);
  const size_t pdim = g[0].size();

  std::vector<double> y0(y.probs.begin(), y.probs.end());
  std::vector<double> base = gt_apply(g, y0);
  const double base_norm = norm2(base);
  std::vector<double> n0(pdim, 0.0);
  if (base_norm > 0.0) {
    for (size_t k = 0; k < pdim; ++k) n0[k] = base[k] / base_norm;
  }

  const double step = config_.step_size > 0.0 ? config_.step_size : config_.eps / 10.0;
  Rng rng(Rng::mix(config_.seed, Rng::hash_str(x.id)));

  auto evaluate = [&](const std::vector<double>& v) {
    std::vector<double> gt = gt_apply(g, v);
    const double nt = norm2(gt);
    double obj = 0.0;
    for (size_t k = 0; k < pdim; ++k) {
      const double a = nt > 0.0 ? gt[k] / nt : 0.0;
      const double m = a - n0[k];
      obj += m * m;
    }
    return obj;
  };

  // the maximizer usually sits where mass moved between a pair of classes, so
  // seed the ascent with every feasible pair move plus a random nudge of y
  std::vector<double> cur(nc);
  for (int i = 0; i < nc; ++i) cur[i] = y0[i] + 0.1 * config_.eps * (rng.uniform() - 0.5);
  cur = retract_to_feasible(cur, y0, config_.eps);
  double cur_obj = evaluate(cur);
  auto consider = [&](const std::vector<double>& cand) {
    const double obj = evaluate(cand);
    if (obj > cur_obj) {
      cur_obj = obj;
      cur = cand;
    }
  };
  for (int i = 0; i < nc; ++i) {
    for (int j = 0; j < nc; ++j) {
      if (i == j) continue;
      const double move = std::min(config_.eps / 2.0, y0[i]);
      if (move <= 0.0) continue;
      std::vector<double> cand = y0;
      cand[i] -= move;
      cand[j] += move;
      consider(cand);
    }
  }
  // concentration moves: pull mass toward class j from everyone else
  for (int j = 0; j < nc; ++j) {
    const double room = 1.0 - y0[j];
    const double take = std::min(config_.eps / 2.0, room);
    if (take <= 0.0 || room <= 0.0) continue;
    std::vector<double> cand = y0;
    for (int i = 0; i < nc; ++i) {
      if (i == j) continue;
      cand[i] -= take * (y0[i] / room);
    }
    cand[j] += take;
    consider(retract_to_feasible(cand, y0, config_.eps));
  }

  std::vector<double> best = cur;
  double best_obj = cur_obj;
  double step_now = step;

  for (int it = 0; it < config_.steps; ++it) {
    std::vector<double> gt = gt_apply(g, cur);
    const double nt = norm2(gt);
    std::vector<double> grad(nc, 0.0);
    if (nt > 0.0) {
      // m = n(gt) - n0; d obj / d cur = 2/nt * G (m - (n.m) n)
      std::vector<double> n(pdim);
      for (size_t k = 0; k < pdim; ++k) n[k] = gt[k] / nt;
      double ndotm = 0.0;
      for (size_t k = 0; k < pdim; ++k) ndotm += n[k] * (n[k] - n0[k]);
      for (int i = 0; i < nc; ++i) {
        double acc = 0.0;
        const std::vector<float>& row = g[i];
        for (size_t k = 0; k < pdim; ++k) {
          acc += row[k] * ((n[k] - n0[k]) - ndotm * n[k]);
        }
        grad[i] = 2.0 * acc / nt;
      }
    }
    double gnorm = 0.0;
    for (int i = 0; i < nc; ++i) gnorm += grad[i] * grad[i];
    gnorm = std::sqrt(gnorm);
    if (gnorm <= 0.0) {
      // flat spot (vanished surrogate gradient): random feasible restart
      for (int i = 0; i < nc; ++i) cur[i] = y0[i] + config_.eps * (rng.uniform() - 0.5);
      cur = retract_to_feasible(cur, y0, config_.eps);
      cur_obj = evaluate(cur);
      if (cur_obj > best_obj) {
        best_obj = cur_obj;
        best = cur;
      }
      continue;
    }
    std::vector<double> trial(nc);
    for (int i = 0; i < nc; ++i) trial[i] = cur[i] + step_now * grad[i] / gnorm;
    trial = retract_to_feasible(trial, y0, config_.eps);
    const double trial_obj = evaluate(trial);
    if (trial_obj > cur_obj) {
      cur = std::move(trial);
      cur_obj = trial_obj;
      if (cur_obj > best_obj) {
        best_obj = cur_obj;
        best = cur;
      }
    } else {
      // shrink toward the boundary optimum instead of oscillating over it
      step_now = std::max(step_now * 0.5, 1e-4 * config_.eps);
    }
  }

  ProbVector out;
  out.probs.resize(nc);
  for (int i = 0; i < nc; ++i) out.probs[i] = static_cast<float>(best[i]);
  return out;
}

ProbVector PoisoningDefense::adjust(const ProbVector& probs, const ImageTensor& x) const {
  return poison(probs, x);
}

}  // namespace bbsteal
