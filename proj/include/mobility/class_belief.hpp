#ifndef MOBILITY_CLASS_BELIEF_HPP
#define MOBILITY_CLASS_BELIEF_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mobility/classes.hpp"
#include "mobility/scorers.hpp"

namespace mobility {

/// Discrete HMM over hidden states (rows) and observation symbols (columns).
///
/// The tracking model uses six hidden states, the five person classes plus a
/// clutter hypothesis (index 5) meaning "this track is not a person", and six
/// observation symbols, the five classes plus background (index 5). Background
/// is also the symbol used for a missed detection inside the field of view.
struct HmmModel {
  Eigen::VectorXd prior;        ///< K
  Eigen::MatrixXd transition;   ///< K x K, row = previous state
  Eigen::MatrixXd measurement;  ///< K x O, row = hidden state

  Eigen::Index num_states() const { return prior.size(); }
  Eigen::Index num_observations() const { return measurement.cols(); }
  /// The symbol fed in for a missed detection: the last column.
  int background_symbol() const { return static_cast<int>(measurement.cols()) - 1; }

  /// Throws Error(Configuration) unless prior, transition and measurement
  /// rows are probability vectors (within 1e-9) with consistent shapes.
  void validate() const;
};

inline constexpr Eigen::Index kClutterState = 5;

struct DefaultHmmParams {
  double clutter_prior = 0.2;
  double class_switch = 0.02;       ///< total per-step mass moving to other classes
  double class_to_clutter = 0.005;
  double clutter_stay = 0.99;
  double miss_rate = 0.3;           ///< P(no detection | person in view)
  double clutter_false_positive = 0.6;  ///< P(any person class observed | clutter), spread evenly
  double confusion_floor = 0.01;    ///< mixes a little uniform mass into the detector confusion
};

/// Six-state tracking model built from an assumed detector confusion matrix.
HmmModel default_tracking_model(const ConfusionMatrix& detector = diagonal_confusion(0.7),
                                const DefaultHmmParams& params = {});

using Belief = Eigen::VectorXd;

/// One forward step. In view, the measurement factor uses `observation`, or
/// the background symbol when there was none. Out of view only the
/// transition is applied. Throws Error(ModelDegenerate) if all mass vanishes.
Belief forward_update(const Belief& belief, std::optional<int> observation, bool in_fov, const HmmModel& model);

/// Prior followed by one in-view update with the spawning observation.
Belief initial_belief(int observation, const HmmModel& model);

/// Mass of the clutter hypothesis.
double background_probability(const Belief& belief);

/// Most likely person class (clutter excluded) and its probability.
std::pair<ClassId, double> best_class(const Belief& belief);

struct LabeledStep {
  int true_state = 0;
  int observed = 0;
};
using LabeledSequence = std::vector<LabeledStep>;

/// Count frequencies with additive smoothing, (count + alpha) / (total + alpha K):
/// prior from the share of each true state, transitions from consecutive true
/// states within a sequence, measurement from (true, observed) pairs.
HmmModel estimate_model(const std::vector<LabeledSequence>& sequences, double dirichlet_alpha,
                        int num_states = 6, int num_observations = 6);

/// Plain-text model file with class-name headers; see write_hmm for the layout.
void write_hmm(std::ostream& os, const HmmModel& model);
HmmModel read_hmm(std::istream& is);

}  // namespace mobility

#endif  // MOBILITY_CLASS_BELIEF_HPP
