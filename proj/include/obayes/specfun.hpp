#pragma once

namespace obayes::specfun {

/// Natural log of the gamma function for x > 0 (Lanczos approximation).
/// Throws NumericalError for x <= 0.
double log_gamma(double x);

/// log B(a, b) = log_gamma(a) + log_gamma(b) - log_gamma(a + b), a, b > 0.
double log_beta(double a, double b);

struct Hyp2F1Args {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double z = 0.0;
};

/// Gauss hypergeometric function 2F1(a, b; c; z) for z < 1.
///
/// For 0 <= z < 1 the Gauss series is summed directly to relative
/// tolerance 1e-12 (term cap 100000). For z < 0 the Pfaff transformation
///   2F1(a, b; c; z) = (1 - z)^{-a} 2F1(a, c - b; c; z / (z - 1))
/// maps the argument into [0, 1) first.
///
/// Throws NumericalError if c is a nonpositive integer, z >= 1, or the
/// series fails to converge within the term cap.
double hyp2f1(const Hyp2F1Args& args);

/// log 2F1 evaluated without overflow; this is the form consumed by the
/// Bayes-factor code, where the result can underflow a double while its
/// log is moderate.
///
/// Covers the same domain as hyp2f1 and additionally handles extreme
/// negative z for the parameter family c = a + 1 (the Bayes-factor
/// pattern) through an exact incomplete-beta representation, which the
/// capped-variance-ratio convention for saturated models requires.
double log_hyp2f1(const Hyp2F1Args& args);

}  // namespace obayes::specfun
