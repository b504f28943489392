//! Mixture-gamma representation of the fading power `a = |h|^2`.
//!
//! The density is `f(a) = sum_l alpha_l a^{beta_l - 1} e^{-zeta_l a}` with
//! `sum_l alpha_l Gamma(beta_l) zeta_l^{-beta_l} = 1` and unit mean. The
//! named fading families (Nakagami-m, eta-mu, kappa-mu, Rician, K_G) are
//! constructed from their published term recipes; theta coefficients and
//! the renormalization are evaluated in log space so that large shape
//! parameters and deep truncations do not overflow.

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::quadrature::gauss_laguerre;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Tolerance of the normalization invariant `sum alpha Gamma(beta) zeta^-beta = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Tolerance of the unit-mean invariant enforced by the family constructors.
pub const UNIT_MEAN_TOL: f64 = 1e-6;
/// Tolerance for treating two beta exponents as equal.
pub const BETA_EQ_TOL: f64 = 1e-9;

const MAX_AUTO_TRUNCATION: usize = 400;

/// One `alpha a^{beta-1} e^{-zeta a}` component of the mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgTerm {
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
}

/// Truncated mixture-gamma distribution of the fading power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MgJson", into = "MgJson")]
pub struct MixtureGamma {
    terms: Vec<MgTerm>,
    family_label: String,
}

#[derive(Serialize, Deserialize)]
struct MgJson {
    family: String,
    terms: Vec<[f64; 3]>,
}

impl From<MixtureGamma> for MgJson {
    fn from(mg: MixtureGamma) -> Self {
        MgJson {
            family: mg.family_label,
            terms: mg.terms.iter().map(|t| [t.alpha, t.beta, t.zeta]).collect(),
        }
    }
}

impl TryFrom<MgJson> for MixtureGamma {
    type Error = Error;
    fn try_from(j: MgJson) -> Result<Self> {
        MixtureGamma::from_terms(
            j.terms
                .iter()
                .map(|t| MgTerm {
                    alpha: t[0],
                    beta: t[1],
                    zeta: t[2],
                })
                .collect(),
            j.family,
        )
    }
}

impl MixtureGamma {
    /// Validates raw terms: positivity, normalization within
    /// [`NORMALIZATION_TOL`], and the exponent-spacing rule (distinct beta
    /// values differ by at least one).
    pub fn from_terms(terms: Vec<MgTerm>, family_label: impl Into<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::argument("mixture needs at least one term"));
        }
        for t in &terms {
            if !(t.alpha > 0.0 && t.beta > 0.0 && t.zeta > 0.0)
                || !t.alpha.is_finite()
                || !t.beta.is_finite()
                || !t.zeta.is_finite()
            {
                return Err(Error::argument(format!(
                    "mixture term must have positive finite (alpha, beta, zeta), got {t:?}"
                )));
            }
        }
        let mg = MixtureGamma {
            terms,
            family_label: family_label.into(),
        };
        let norm = mg.normalization_residual();
        if norm.abs() > NORMALIZATION_TOL {
            return Err(Error::argument(format!(
                "mixture is not normalized: residual {norm:e}"
            )));
        }
        let mut betas: Vec<f64> = mg.terms.iter().map(|t| t.beta).collect();
        betas.sort_unstable_by(f64::total_cmp);
        betas.dedup_by(|a, b| (*a - *b).abs() <= BETA_EQ_TOL);
        if betas.windows(2).any(|w| w[1] - w[0] < 1.0 - BETA_EQ_TOL) {
            return Err(Error::argument(
                "distinct beta exponents must be spaced by at least 1",
            ));
        }
        Ok(mg)
    }

    pub fn terms(&self) -> &[MgTerm] {
        &self.terms
    }

    pub fn family_label(&self) -> &str {
        &self.family_label
    }

    /// Number of retained mixture terms.
    pub fn truncation(&self) -> usize {
        self.terms.len()
    }

    /// Smallest shape exponent; the diversity order of the channel.
    pub fn beta_min(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.beta)
            .fold(f64::INFINITY, f64::min)
    }

    /// Component probabilities `alpha_l Gamma(beta_l) zeta_l^{-beta_l}`.
    pub fn mixing_weights(&self) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| (t.alpha.ln() + ln_gamma(t.beta) - t.beta * t.zeta.ln()).exp())
            .collect()
    }

    /// `sum alpha Gamma(beta) zeta^-beta - 1`.
    pub fn normalization_residual(&self) -> f64 {
        self.mixing_weights().iter().sum::<f64>() - 1.0
    }

    /// `E{a} - 1`.
    pub fn mean_residual(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.alpha.ln() + ln_gamma(t.beta + 1.0) - (t.beta + 1.0) * t.zeta.ln()).exp())
            .sum::<f64>()
            - 1.0
    }

    /// Density of the fading power. At `a = 0` the value is `+inf` when any
    /// shape is below one (integrable singularity).
    pub fn pdf(&self, a: f64) -> Result<f64> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::argument(format!("pdf argument must be >= 0, got {a}")));
        }
        if a == 0.0 {
            if self.terms.iter().any(|t| t.beta < 1.0 - BETA_EQ_TOL) {
                return Ok(f64::INFINITY);
            }
            return Ok(self
                .terms
                .iter()
                .filter(|t| (t.beta - 1.0).abs() <= BETA_EQ_TOL)
                .map(|t| t.alpha)
                .sum());
        }
        Ok(self
            .terms
            .iter()
            .map(|t| (t.alpha.ln() + (t.beta - 1.0) * a.ln() - t.zeta * a).exp())
            .sum())
    }

    /// Distribution function, a weighted sum of regularized lower
    /// incomplete gamma functions.
    pub fn cdf(&self, a: f64) -> Result<f64> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::argument(format!("cdf argument must be >= 0, got {a}")));
        }
        if a == 0.0 {
            return Ok(0.0);
        }
        let value = self
            .terms
            .iter()
            .zip(self.mixing_weights())
            .map(|(t, w)| w * gamma_lr(t.beta, t.zeta * a))
            .sum::<f64>();
        Ok(value.clamp(0.0, 1.0))
    }

    /// Draws `count` i.i.d. fading powers: pick a component by its mixing
    /// weight, then draw Gamma(shape = beta, rate = zeta). Reproducible for
    /// a fixed seed.
    pub fn sample(&self, rng_seed: u64, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::argument("sample count must be >= 1"));
        }
        let weights = self.mixing_weights();
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::argument(format!("bad mixing weights: {e}")))?;
        let gammas: Vec<statrs::distribution::Gamma> = self
            .terms
            .iter()
            .map(|t| {
                statrs::distribution::Gamma::new(t.beta, t.zeta)
                    .map_err(|e| Error::argument(format!("bad gamma component: {e}")))
            })
            .collect::<Result<_>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        Ok((0..count)
            .map(|_| gammas[index.sample(&mut rng)].sample(&mut rng))
            .collect())
    }
}

/// Format of the eta-mu fading model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaMuFormat {
    /// `eta in (0, inf)`: power ratio of the in-phase/quadrature scatter.
    Format1,
    /// `eta in (-1, 1)`: correlation coefficient.
    Format2,
}

/// Named fading families with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FadingParams {
    Nakagami { m: f64 },
    EtaMu { format: EtaMuFormat, eta: f64, mu: f64 },
    KappaMu { kappa: f64, mu: f64 },
    Rician { k_factor: f64 },
    Kg { k: f64, m: f64, order: usize },
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FadingParams::Nakagami { m } => m > 0.0 && m.is_finite(),
            FadingParams::EtaMu { format, eta, mu } => {
                mu > 0.0
                    && mu.is_finite()
                    && eta.is_finite()
                    && match format {
                        EtaMuFormat::Format1 => eta > 0.0,
                        EtaMuFormat::Format2 => eta > -1.0 && eta < 1.0,
                    }
            }
            FadingParams::KappaMu { kappa, mu } => {
                kappa > 0.0 && kappa.is_finite() && mu > 0.0 && mu.is_finite()
            }
            FadingParams::Rician { k_factor } => k_factor >= 0.0 && k_factor.is_finite(),
            FadingParams::Kg { k, m, order } => {
                k > 0.0 && k.is_finite() && m > 0.0 && m.is_finite() && (1..=200).contains(&order)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::argument(format!("invalid fading parameters: {self:?}")))
        }
    }

    pub fn label(&self) -> String {
        match *self {
            FadingParams::Nakagami { m } => format!("nakagami(m={m})"),
            FadingParams::EtaMu { format, eta, mu } => {
                let f = match format {
                    EtaMuFormat::Format1 => 1,
                    EtaMuFormat::Format2 => 2,
                };
                format!("eta-mu(format={f},eta={eta},mu={mu})")
            }
            FadingParams::KappaMu { kappa, mu } => format!("kappa-mu(kappa={kappa},mu={mu})"),
            FadingParams::Rician { k_factor } => format!("rician(K={k_factor})"),
            FadingParams::Kg { k, m, order } => format!("kg(k={k},m={m},N={order})"),
        }
    }

    /// Builds the mixture with the default starting truncation of 50 terms.
    pub fn to_mixture_default(&self) -> Result<MixtureGamma> {
        self.to_mixture(50)
    }

    /// Builds the mixture-gamma representation.
    ///
    /// `truncation` is the starting number of terms for the infinite
    /// families (eta-mu, kappa-mu), automatically extended until the unit
    /// mean holds within [`UNIT_MEAN_TOL`]; Nakagami is a single term and
    /// K_G uses exactly its Gauss-Laguerre order.
    pub fn to_mixture(&self, truncation: usize) -> Result<MixtureGamma> {
        self.validate()?;
        if truncation == 0 {
            return Err(Error::argument("truncation must be >= 1"));
        }
        let label = self.label();
        match *self {
            FadingParams::Nakagami { m } => renormalized(vec![0.0], vec![m], vec![m], label),
            FadingParams::Rician { k_factor } => {
                if k_factor == 0.0 {
                    // kappa -> 0 limit collapses to a single exponential term
                    renormalized(vec![0.0], vec![1.0], vec![1.0], label)
                } else {
                    build_kappa_mu(k_factor, 1.0, truncation, label)
                }
            }
            FadingParams::KappaMu { kappa, mu } => build_kappa_mu(kappa, mu, truncation, label),
            FadingParams::EtaMu { format, eta, mu } => {
                let (h, h_big) = eta_mu_geometry(format, eta);
                if h_big == 0.0 {
                    // eta = 1 (format 1) or 0 (format 2): single-term limit
                    // with 0^0 = 1 for the leading coefficient
                    let log_theta = vec![eta_mu_log_theta(mu, h, 0.0, 1)];
                    return renormalized(log_theta, vec![2.0 * mu], vec![2.0 * mu * h], label);
                }
                extend_until_unit_mean(truncation, |len| {
                    let log_theta: Vec<f64> = (1..=len)
                        .map(|l| eta_mu_log_theta(mu, h, h_big, l))
                        .collect();
                    let betas: Vec<f64> =
                        (1..=len).map(|l| 2.0 * (mu - 1.0 + l as f64)).collect();
                    let zetas = vec![2.0 * mu * h; len];
                    renormalized(log_theta, betas, zetas, label.clone())
                })
            }
            FadingParams::Kg { k, m, order } => {
                let rule = gauss_laguerre(order)?;
                let lead = m * k.ln() + m * m.ln() - ln_gamma(m) - ln_gamma(k);
                let log_theta: Vec<f64> = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&tau, &w)| lead + w.ln() + (k - m - 1.0) * tau.ln())
                    .collect();
                let zetas: Vec<f64> = rule.nodes.iter().map(|&tau| k * m / tau).collect();
                renormalized(log_theta, vec![m; order], zetas, label)
            }
        }
    }
}

/// Retries a truncated construction with 25 more terms until the unit-mean
/// invariant holds or the cap is reached.
fn extend_until_unit_mean(
    start: usize,
    mut build: impl FnMut(usize) -> Result<MixtureGamma>,
) -> Result<MixtureGamma> {
    let mut len = start;
    loop {
        match build(len) {
            Ok(mg) => return Ok(mg),
            Err(e @ Error::Truncation { .. }) => {
                if len >= MAX_AUTO_TRUNCATION {
                    return Err(e);
                }
                len = (len + 25).min(MAX_AUTO_TRUNCATION);
            }
            Err(e) => return Err(e),
        }
    }
}

pub(crate) fn eta_mu_geometry(format: EtaMuFormat, eta: f64) -> (f64, f64) {
    match format {
        EtaMuFormat::Format1 => ((2.0 + 1.0 / eta + eta) / 4.0, (1.0 / eta - eta) / 4.0),
        EtaMuFormat::Format2 => (1.0 / (1.0 - eta * eta), eta / (1.0 - eta * eta)),
    }
}

fn eta_mu_log_theta(mu: f64, h: f64, h_big: f64, l: usize) -> f64 {
    let lf = l as f64;
    let mut v = std::f64::consts::LN_2 + 0.5 * std::f64::consts::PI.ln()
        + (2.0 * mu + 2.0 * lf - 2.0) * mu.ln()
        + mu * h.ln()
        - ln_gamma(mu)
        - ln_gamma(lf)
        - ln_gamma(mu + lf - 0.5);
    if l > 1 {
        v += (lf - 1.0) * (h_big * h_big).ln();
    }
    v
}

fn build_kappa_mu(kappa: f64, mu: f64, truncation: usize, label: String) -> Result<MixtureGamma> {
    extend_until_unit_mean(truncation, |len| {
        let log_theta: Vec<f64> = (1..=len)
            .map(|l| {
                let lf = l as f64;
                (mu + 2.0 * lf - 2.0) * mu.ln() + (lf - 1.0) * kappa.ln()
                    + (mu + lf - 1.0) * kappa.ln_1p()
                    - mu * kappa
                    - ln_gamma(mu + lf - 1.0)
                    - ln_gamma(lf)
            })
            .collect();
        let betas: Vec<f64> = (1..=len).map(|l| mu - 1.0 + l as f64).collect();
        let zetas = vec![mu * (1.0 + kappa); len];
        renormalized(log_theta, betas, zetas, label.clone())
    })
}

/// Applies the psi renormalization `alpha_l = theta_l / sum_i theta_i
/// Gamma(beta_i) zeta_i^{-beta_i}` (all in log space), drops terms whose
/// alpha underflows, and enforces the unit-mean invariant.
fn renormalized(
    log_theta: Vec<f64>,
    betas: Vec<f64>,
    zetas: Vec<f64>,
    label: String,
) -> Result<MixtureGamma> {
    let log_norm_terms: Vec<f64> = log_theta
        .iter()
        .zip(&betas)
        .zip(&zetas)
        .map(|((&lt, &b), &z)| lt + ln_gamma(b) - b * z.ln())
        .collect();
    let log_norm = log_sum_exp(log_norm_terms.iter().copied());
    if !log_norm.is_finite() {
        return Err(Error::Numerical(format!(
            "mixture normalizer is not finite for {label}"
        )));
    }
    let mut terms = Vec::with_capacity(betas.len());
    for ((&lt, &b), &z) in log_theta.iter().zip(&betas).zip(&zetas) {
        let alpha = (lt - log_norm).exp();
        if alpha > 0.0 {
            terms.push(MgTerm {
                alpha,
                beta: b,
                zeta: z,
            });
        }
    }
    let mg = MixtureGamma::from_terms(terms, label)?;
    let mean_err = mg.mean_residual().abs();
    if mean_err > UNIT_MEAN_TOL {
        return Err(Error::Truncation {
            achieved: mean_err,
            required: UNIT_MEAN_TOL,
        });
    }
    Ok(mg)
}
