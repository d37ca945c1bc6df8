#include "paylift/riccati.hpp"

#include <cmath>
#include <stdexcept>

#include "paylift/vehicle.hpp"

namespace paylift {
namespace {

struct LateralIntermediates {
  long double a = 0.0L;
  long double b = 0.0L;
  long double sigma = 0.0L;
  long double d = 0.0L;      // a - b + sigma, evaluated without cancellation
  long double p11 = 0.0L;
};

LateralIntermediates lateral_intermediates(long double alpha, long double q,
                                           long double g) {
  LateralIntermediates f;
  const long double q4 = q * q * q * q;
  f.a = std::sqrt(2.0L * g * q4 * q * q * q);
  f.b = alpha * q4;
  const long double diff = f.a - f.b;
  f.sigma = std::sqrt(diff * diff + f.a * f.a);
  // a - b + sigma loses digits when b >> a > 0; sigma² - diff² = a² gives
  // the equivalent quotient on that branch.
  f.d = diff > 0.0L ? diff + f.sigma : f.a * f.a / (f.sigma - diff);
  f.p11 = std::sqrt(2.0L * f.d / g);
  return f;
}

Eigen::Matrix4d lateral_closed_form(double alpha_in, double q_in,
                                    double g_in) {
  const long double alpha = alpha_in;
  const long double q = q_in;
  const long double g = g_in;
  const LateralIntermediates f = lateral_intermediates(alpha, q, g);

  const long double q2 = q * q;
  const long double q3 = q2 * q;
  const long double q4 = q2 * q2;
  const long double q5 = q4 * q;
  const long double q6 = q4 * q2;
  const long double p11 = f.p11;
  const long double p11_2 = p11 * p11;
  const long double p11_3 = p11_2 * p11;
  const long double p11_4 = p11_2 * p11_2;

  const long double p12 = p11_2 / (2.0L * q2);
  const long double p22 = 3.0L / (8.0L * q4) * p11_3 +
                          alpha / (2.0L * g) * p11 - q3 / (g * p11);
  const long double p13 = g / (2.0L * q4) * p11_3 - g * p22;
  const long double p14 = q - alpha / (2.0L * q2) * p11_2;
  const long double p23 = g / (8.0L * q6) * p11_4;
  const long double p24 = p11 / q - alpha * p22;
  const long double p33 =
      g / (2.0L * q4) * p11_2 * p13 - g / q * p11 + alpha * g * p22;
  const long double p34 =
      g / (2.0L * q3) * p11_2 - alpha * g / (8.0L * q6) * p11_4;
  const long double p44 = g / (2.0L * q5) * p11_3 - g / q * p22 - alpha * p24;

  Eigen::Matrix4d p;
  p << static_cast<double>(p11), static_cast<double>(p12),
      static_cast<double>(p13), static_cast<double>(p14),
      static_cast<double>(p12), static_cast<double>(p22),
      static_cast<double>(p23), static_cast<double>(p24),
      static_cast<double>(p13), static_cast<double>(p23),
      static_cast<double>(p33), static_cast<double>(p34),
      static_cast<double>(p14), static_cast<double>(p24),
      static_cast<double>(p34), static_cast<double>(p44);
  return p;
}

template <typename F>
double golden_section_minimize(const F& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

void require_positive_weight(double q_hat) {
  if (!(q_hat > 0.0)) {
    throw std::invalid_argument("cost weight must be positive");
  }
}

}  // namespace

RiccatiBlock closed_form_riccati(const LinearSubsystem& subsystem,
                                 double q_hat) {
  require_positive_weight(q_hat);
  RiccatiBlock block;
  if (subsystem.a_i.rows() == 2) {
    const double s = std::sqrt(2.0 * q_hat);
    Eigen::Matrix2d p;
    p << q_hat * s, q_hat, q_hat, s;
    block.p = p;
    return block;
  }
  Eigen::Matrix4d p = lateral_closed_form(subsystem.alpha, q_hat, subsystem.g);
  if (subsystem.index == 2) {
    // Conjugation by diag(1, 1, -1, -1): channel 2 carries the opposite
    // signs on g and alpha, so every entry pairing a translational with
    // an attitude coordinate flips.
    for (int i = 0; i < 2; ++i) {
      for (int j = 2; j < 4; ++j) {
        p(i, j) = -p(i, j);
        p(j, i) = -p(j, i);
      }
    }
  }
  block.p = p;
  return block;
}

double are_residual(const LinearSubsystem& subsystem, double q_hat,
                    const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd& a = subsystem.a_i;
  const Eigen::VectorXd& b = subsystem.b_i;
  if (p.rows() != a.rows() || p.cols() != a.cols()) {
    throw std::invalid_argument("cost matrix does not match the subsystem");
  }
  Eigen::MatrixXd q_bar = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  q_bar(0, 0) = q_hat * q_hat;
  const Eigen::VectorXd pb = p * b;
  const Eigen::MatrixXd residual =
      a.transpose() * p + p * a - pb * pb.transpose() + q_bar;
  return residual.norm();
}

Eigen::Matrix<double, 4, 12> lqr_gain(
    const std::array<RiccatiBlock, 4>& blocks,
    const std::array<LinearSubsystem, 4>& subsystems) {
  // column offset of each channel's states in the decoupled ordering
  constexpr std::array<int, 4> kColumnOffset = {0, 4, 8, 10};
  Eigen::Matrix<double, 4, 12> gain = Eigen::Matrix<double, 4, 12>::Zero();
  for (int c = 0; c < 4; ++c) {
    const auto& sub = subsystems[c];
    if (blocks[c].p.rows() != sub.a_i.rows()) {
      throw std::invalid_argument("riccati block does not match its subsystem");
    }
    const Eigen::RowVectorXd k_i = sub.b_i.transpose() * blocks[c].p;
    gain.block(kChannelInputRow[c], kColumnOffset[c], 1, k_i.cols()) = k_i;
  }
  return gain;
}

LinearSubsystem lateral_subsystem(double alpha, double q_hat, double g) {
  require_positive_weight(q_hat);
  LinearSubsystem sub;
  sub.index = 1;
  sub.a_i = Eigen::MatrixXd::Zero(4, 4);
  sub.a_i(0, 1) = 1.0;
  sub.a_i(1, 2) = g;
  sub.a_i(2, 3) = 1.0;
  sub.b_i = Eigen::VectorXd::Zero(4);
  sub.b_i(1) = alpha;
  sub.b_i(3) = 1.0;
  sub.alpha = alpha;
  sub.q_hat = q_hat;
  sub.g = g;
  return sub;
}

LinearSubsystem integrator_subsystem(int index, double q_hat) {
  require_positive_weight(q_hat);
  if (index != 3 && index != 4) {
    throw std::invalid_argument("double-integrator channels are 3 and 4");
  }
  LinearSubsystem sub;
  sub.index = index;
  sub.a_i = Eigen::MatrixXd::Zero(2, 2);
  sub.a_i(0, 1) = 1.0;
  sub.b_i = Eigen::VectorXd::Zero(2);
  sub.b_i(1) = 1.0;
  sub.alpha = 0.0;
  sub.q_hat = q_hat;
  sub.g = 0.0;
  return sub;
}

double lateral_h2_squared(double alpha_in, double q_in, double g_in) {
  require_positive_weight(q_in);
  const long double alpha = alpha_in;
  const long double q = q_in;
  const long double g = g_in;
  const LateralIntermediates f = lateral_intermediates(alpha, q, g);
  // 2a - b + sigma cancels when |b| >> a; both rewrites below are exact:
  //   sigma² - b² = 2a(a - b), so 2a - b + sigma = 2a(sigma + a)/(sigma + b).
  const long double sigma_plus_b =
      f.b >= 0.0L ? f.sigma + f.b
                  : 2.0L * f.a * (f.a - f.b) / (f.sigma - f.b);
  const long double numerator = 2.0L * f.a * (f.sigma + f.a) / sigma_plus_b;
  const long double denominator = q * std::sqrt(q) * std::sqrt(f.d);
  return static_cast<double>(numerator / denominator);
}

double lateral_h2(double alpha, double q_hat, double g) {
  return std::sqrt(lateral_h2_squared(alpha, q_hat, g));
}

H2Forms analytical_h2_forms(const LinearSubsystem& subsystem, double q_hat,
                            double q_raw) {
  require_positive_weight(q_hat);
  require_positive_weight(q_raw);
  H2Forms forms;
  if (subsystem.a_i.rows() == 2) {
    forms.trace_gain = std::sqrt(2.0 * q_hat);
    forms.value = std::sqrt(forms.trace_gain);
    // literal substitution of the raw weight into the closed form
    forms.raw_q_variant = std::sqrt(2.0 * q_raw);
    return forms;
  }
  forms.trace_gain = lateral_h2_squared(subsystem.alpha, q_hat, subsystem.g);
  forms.value = std::sqrt(forms.trace_gain);
  // same numerator over the raw weight's q^{3/2}
  forms.raw_q_variant = forms.trace_gain * std::pow(q_hat / q_raw, 1.5);
  return forms;
}

double analytical_h2(const LinearSubsystem& subsystem, double q_hat) {
  require_positive_weight(q_hat);
  if (subsystem.a_i.rows() == 2) {
    return std::pow(2.0 * q_hat, 0.25);
  }
  return lateral_h2(subsystem.alpha, q_hat, subsystem.g);
}

double above_below_gap(double q_hat, double alpha_magnitude, double g) {
  if (alpha_magnitude < 0.0) {
    throw std::invalid_argument("alpha magnitude must be nonnegative");
  }
  return lateral_h2(-alpha_magnitude, q_hat, g) -
         lateral_h2(alpha_magnitude, q_hat, g);
}

H2Report optimal_placement(const VehicleParams& params,
                           const CostWeights& weights) {
  const std::array<LinearSubsystem, 4> subsystems = decouple(params, weights);
  H2Report report;
  for (int i = 0; i < 4; ++i) {
    report.channel_h2[static_cast<size_t>(i)] =
        analytical_h2(subsystems[static_cast<size_t>(i)],
                      subsystems[static_cast<size_t>(i)].q_hat);
  }

  const double g = params.g;
  const double q_hat_1 = subsystems[0].q_hat;
  report.optimal_alpha = std::sqrt(2.0 * g / q_hat_1);
  const auto h2_of_alpha = [&](double alpha) {
    return lateral_h2(alpha, q_hat_1, g);
  };
  report.optimal_alpha_searched = golden_section_minimize(
      h2_of_alpha, 0.0, 2.0 * report.optimal_alpha + 1.0, 1e-8);

  // The payload offset enters the channel weight quadratically, so the
  // two-coordinate bowl bottoms out with the payload at the origin and
  // the controlled point at the optimal offset for that reduced weight.
  const DerivedGeometry geom = derive_geometry(params);
  const double h_yy = params.h_tot(1, 1);
  report.optimal_z_pl = 0.0;
  report.optimal_z_poi = std::sqrt(2.0 * g / (h_yy * weights.q1));
  report.optimal_z_poi_at_current_z_pl =
      report.optimal_alpha + (params.m_pl / geom.m_tot) * params.r_pl.z();
  report.above_below_gap =
      above_below_gap(q_hat_1, std::abs(subsystems[0].alpha), g);
  return report;
}

}  // namespace paylift
