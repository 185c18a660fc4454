#include "mobility/class_belief.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "mobility/error.hpp"

namespace mobility {

namespace {

bool is_probability_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return (row.array() >= 0.0).all() && std::abs(row.sum() - 1.0) <= 1e-9;
}

}  // namespace

void HmmModel::validate() const {
  const Eigen::Index k = prior.size();
  if (k == 0) throw Error(ErrorCode::Configuration, "hmm: empty model");
  if (transition.rows() != k || transition.cols() != k || measurement.rows() != k || measurement.cols() == 0)
    throw Error(ErrorCode::Configuration, "hmm: inconsistent matrix shapes");
  if (!is_probability_row(prior.transpose())) throw Error(ErrorCode::Configuration, "hmm: prior is not a distribution");
  for (Eigen::Index r = 0; r < k; ++r) {
    if (!is_probability_row(transition.row(r)))
      throw Error(ErrorCode::Configuration, "hmm: transition row " + std::to_string(r) + " is not a distribution");
    if (!is_probability_row(measurement.row(r)))
      throw Error(ErrorCode::Configuration, "hmm: measurement row " + std::to_string(r) + " is not a distribution");
  }
}

HmmModel default_tracking_model(const ConfusionMatrix& detector, const DefaultHmmParams& p) {
  validate_confusion(detector);
  constexpr int n = static_cast<int>(kNumCategories);
  constexpr int classes = static_cast<int>(kNumForeground);

  HmmModel m;
  m.prior = Eigen::VectorXd::Constant(n, (1.0 - p.clutter_prior) / classes);
  m.prior(kClutterState) = p.clutter_prior;

  m.transition = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < classes; ++r) {
    for (int c = 0; c < classes; ++c) m.transition(r, c) = (r == c) ? 1.0 - p.class_switch - p.class_to_clutter
                                                                      : p.class_switch / (classes - 1);
    m.transition(r, kClutterState) = p.class_to_clutter;
  }
  for (int c = 0; c < classes; ++c) m.transition(kClutterState, c) = (1.0 - p.clutter_stay) / classes;
  m.transition(kClutterState, kClutterState) = p.clutter_stay;

  m.measurement = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < classes; ++r) {
    const Eigen::RowVectorXd floored =
        (1.0 - p.confusion_floor) * detector.row(r) + Eigen::RowVectorXd::Constant(n, p.confusion_floor / n);
    m.measurement.row(r) = (1.0 - p.miss_rate) * floored;
    m.measurement(r, n - 1) += p.miss_rate;
  }
  for (int c = 0; c < classes; ++c) m.measurement(kClutterState, c) = p.clutter_false_positive / classes;
  m.measurement(kClutterState, n - 1) = 1.0 - p.clutter_false_positive;

  m.validate();
  return m;
}

Belief forward_update(const Belief& belief, std::optional<int> observation, bool in_fov, const HmmModel& model) {
  if (belief.size() != model.num_states())
    throw Error(ErrorCode::Configuration, "forward_update: belief size does not match the model");
  Belief next = model.transition.transpose() * belief;
  if (in_fov) {
    const int symbol = observation.value_or(model.background_symbol());
    if (symbol < 0 || symbol >= model.num_observations())
      throw Error(ErrorCode::Configuration, "forward_update: observation symbol out of range");
    next = next.cwiseProduct(model.measurement.col(symbol));
  }
  const double total = next.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw Error(ErrorCode::ModelDegenerate, "forward_update: belief mass vanished");
  return next / total;
}

Belief initial_belief(int observation, const HmmModel& model) {
  return forward_update(model.prior, observation, true, model);
}

double background_probability(const Belief& belief) {
  return belief.size() > kClutterState ? belief(kClutterState) : 0.0;
}

std::pair<ClassId, double> best_class(const Belief& belief) {
  Eigen::Index best = 0;
  const Eigen::Index n = std::min<Eigen::Index>(belief.size(), kNumForeground);
  for (Eigen::Index i = 1; i < n; ++i) {
    if (belief(i) > belief(best)) best = i;
  }
  return {class_at(static_cast<std::size_t>(best)), belief(best)};
}

HmmModel estimate_model(const std::vector<LabeledSequence>& sequences, double alpha, int k, int o) {
  if (k < 1 || o < 1) throw Error(ErrorCode::Configuration, "estimate_model: bad dimensions");
  if (alpha < 0.0) throw Error(ErrorCode::Configuration, "estimate_model: negative dirichlet alpha");
  Eigen::VectorXd prior_counts = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd trans_counts = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd meas_counts = Eigen::MatrixXd::Zero(k, o);
  std::size_t steps = 0;
  for (const auto& seq : sequences) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto& s = seq[t];
      if (s.true_state < 0 || s.true_state >= k || s.observed < 0 || s.observed >= o)
        throw Error(ErrorCode::Configuration, "estimate_model: label out of range");
      prior_counts(s.true_state) += 1.0;
      meas_counts(s.true_state, s.observed) += 1.0;
      if (t > 0) trans_counts(seq[t - 1].true_state, s.true_state) += 1.0;
      ++steps;
    }
  }
  if (steps == 0) throw Error(ErrorCode::InsufficientData, "estimate_model: no labeled pairs");

  auto smooth = [alpha](const Eigen::RowVectorXd& counts) -> Eigen::RowVectorXd {
    const double total = counts.sum() + alpha * static_cast<double>(counts.size());
    if (!(total > 0.0)) return Eigen::RowVectorXd::Constant(counts.size(), 1.0 / static_cast<double>(counts.size()));
    return (counts.array() + alpha) / total;
  };

  HmmModel m;
  m.prior = smooth(prior_counts.transpose()).transpose();
  m.transition.resize(k, k);
  m.measurement.resize(k, o);
  for (int r = 0; r < k; ++r) {
    m.transition.row(r) = smooth(trans_counts.row(r));
    m.measurement.row(r) = smooth(meas_counts.row(r));
  }
  return m;
}

namespace {

std::vector<std::string> state_names(Eigen::Index k, bool observations) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (k == static_cast<Eigen::Index>(kNumCategories)) {
      if (i == kClutterState && !observations) {
        names.emplace_back("clutter");
      } else {
        names.emplace_back(class_name(class_at(static_cast<std::size_t>(i))));
      }
    } else {
      names.push_back((observations ? "o" : "s") + std::to_string(i));
    }
  }
  return names;
}

void write_row(std::ostream& os, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index i = 0; i < row.size(); ++i) os << (i ? " " : "") << row(i);
  os << '\n';
}

std::vector<std::string> read_header(std::istream& is, const std::string& keyword) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word != keyword) throw Error(ErrorCode::Io, "hmm file: expected '" + keyword + "', got '" + word + "'");
    std::vector<std::string> rest;
    while (ls >> word) rest.push_back(word);
    return rest;
  }
  throw Error(ErrorCode::Io, "hmm file: missing '" + keyword + "'");
}

Eigen::RowVectorXd read_row(std::istream& is, Eigen::Index n) {
  Eigen::RowVectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(is >> row(i))) throw Error(ErrorCode::Io, "hmm file: truncated matrix");
  }
  return row;
}

}  // namespace

// Layout:
//   # comment lines
//   states <name...>
//   observations <name...>
//   prior
//   <K numbers>
//   transition
//   <K rows of K numbers>
//   measurement
//   <K rows of O numbers>
void write_hmm(std::ostream& os, const HmmModel& model) {
  const auto k = model.num_states();
  const auto o = model.num_observations();
  const auto old_precision = os.precision(17);
  os << "# class-belief hmm\nstates";
  for (const auto& n : state_names(k, false)) os << ' ' << n;
  os << "\nobservations";
  for (const auto& n : state_names(o, true)) os << ' ' << n;
  os << "\nprior\n";
  write_row(os, model.prior.transpose());
  os << "transition\n";
  for (Eigen::Index r = 0; r < k; ++r) write_row(os, model.transition.row(r));
  os << "measurement\n";
  for (Eigen::Index r = 0; r < k; ++r) write_row(os, model.measurement.row(r));
  os.precision(old_precision);
}

HmmModel read_hmm(std::istream& is) {
  const auto states = read_header(is, "states");
  const auto observations = read_header(is, "observations");
  const auto k = static_cast<Eigen::Index>(states.size());
  const auto o = static_cast<Eigen::Index>(observations.size());
  if (k == 0 || o == 0) throw Error(ErrorCode::Io, "hmm file: empty state or observation list");

  HmmModel m;
  read_header(is, "prior");
  m.prior = read_row(is, k).transpose();
  read_header(is, "transition");
  m.transition.resize(k, k);
  for (Eigen::Index r = 0; r < k; ++r) m.transition.row(r) = read_row(is, k);
  read_header(is, "measurement");
  m.measurement.resize(k, o);
  for (Eigen::Index r = 0; r < k; ++r) m.measurement.row(r) = read_row(is, o);
  m.validate();
  return m;
}

}  // namespace mobility
