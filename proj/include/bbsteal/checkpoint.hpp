#ifndef BBSTEAL_CHECKPOINT_HPP
#define BBSTEAL_CHECKPOINT_HPP

#include <string>

#include "bbsteal/attack.hpp"
#include "bbsteal/classifier.hpp"

namespace bbsteal {

// Named-array container: one entry per parameter tensor plus a metadata
// record (architecture, class count, input shape, init seed).
void save_classifier(const std::string& path, const Classifier& model);
Classifier load_classifier(const std::string& path);

// Attack state round-trip for resume: D_T, D_E, trace, iteration counter and
// the substitute snapshot.
void save_attack_state(const std::string& path, const AttackState& state);
AttackState load_attack_state(const std::string& path);

}  // namespace bbsteal

#endif  // BBSTEAL_CHECKPOINT_HPP
