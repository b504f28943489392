//! Power allocation across parallel fading sub-channels sharing one budget.
//!
//! The objective is the sum of per-channel average mutual informations at
//! transmit fractions `p_k` of the total SNR budget. It is concave in `p`,
//! so the exact optimum is characterized by a common-multiplier condition:
//! active channels equalize `marginal_rate = avg_snr E[a mmse(avg_snr p a)]`
//! at `nu`, channels with `marginal_rate(0) <= nu` stay off. The exact
//! solver nests a bisection for `p_k(nu)` inside a bisection on `ln nu`
//! that drives `sum p_k` to one.
//!
//! Two closed-form companions come from the high-SNR gap expansion: the
//! finite-SNR asymptotic policy inverts
//! `p_k = (A_k D_k / (nu snr^{D_k}))^{1/(D_k+1)}` under the budget, and the
//! limiting policy splits power as `A_k^{1/(D_min+1)}` over the channels of
//! minimum diversity order (the rest decay to zero).

use crate::ami::{ami_quadrature, characterize_asymptote, AsymptoticCharacterization};
use crate::awgn::{mmse, MMSE_FLOOR};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::mg_fading::MixtureGamma;
use crate::numeric::MonotoneCubic;
use serde_json::json;

/// Budget-feasibility tolerance `|sum p_k - 1|`.
pub const BUDGET_TOL: f64 = 1e-9;
/// Diversity orders closer than this are treated as equal.
pub const DIVERSITY_EQ_TOL: f64 = 1e-9;

/// One fading sub-channel with its constellation and high-SNR
/// characterization (computed at construction, so the triple is always
/// consistent).
#[derive(Debug, Clone)]
pub struct SubChannel {
    pub fading: MixtureGamma,
    pub cons: Constellation,
    pub asym: AsymptoticCharacterization,
    mmse_ln: MonotoneCubic,
}

/// A bank of independent parallel sub-channels.
#[derive(Debug, Clone)]
pub struct ParallelChannels {
    subchannels: Vec<SubChannel>,
}

impl ParallelChannels {
    pub fn new(parts: Vec<(MixtureGamma, Constellation)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::argument("need at least one sub-channel"));
        }
        let subchannels = parts
            .into_iter()
            .map(|(fading, cons)| {
                let asym = characterize_asymptote(&fading, &cons)?;
                let mmse_ln = build_mmse_table(&cons)?;
                Ok(SubChannel {
                    fading,
                    cons,
                    asym,
                    mmse_ln,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ParallelChannels { subchannels })
    }

    pub fn count(&self) -> usize {
        self.subchannels.len()
    }

    pub fn subchannels(&self) -> &[SubChannel] {
        &self.subchannels
    }
}

/// How a [`PowerPolicy`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationMethod {
    ExactKkt,
    Asymptotic,
    Limiting,
}

impl AllocationMethod {
    fn as_str(&self) -> &'static str {
        match self {
            AllocationMethod::ExactKkt => "exact_kkt",
            AllocationMethod::Asymptotic => "asymptotic",
            AllocationMethod::Limiting => "limiting",
        }
    }
}

/// Power fractions with the multiplier that produced them and the summed
/// AMI objective. `multiplier` is `None` for the limiting policy where no
/// finite multiplier applies.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPolicy {
    pub fractions: Vec<f64>,
    pub multiplier: Option<f64>,
    pub method: AllocationMethod,
    pub objective_bits: f64,
}

impl PowerPolicy {
    /// JSON record: `{method, nu, fractions[], objective_bits, gamma_bar_db}`.
    pub fn to_json(&self, gamma_bar_db: f64) -> serde_json::Value {
        json!({
            "method": self.method.as_str(),
            "nu": self.multiplier,
            "fractions": self.fractions,
            "objective_bits": self.objective_bits,
            "gamma_bar_db": gamma_bar_db,
        })
    }
}

/// Tabulates `ln mmse` against `ln snr` for fast marginal-rate integrands.
fn build_mmse_table(cons: &Constellation) -> Result<MonotoneCubic> {
    const LO: f64 = 1e-9;
    const HI: f64 = 1e6;
    const PER_DECADE: usize = 160;
    let decades = (HI / LO).log10();
    let n = (decades * PER_DECADE as f64).ceil() as usize + 1;
    let (ln_lo, ln_hi) = (LO.ln(), HI.ln());
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let v = ln_lo + (ln_hi - ln_lo) * i as f64 / (n - 1) as f64;
        xs.push(v);
        ys.push(mmse(cons, v.exp())?.ln());
    }
    Ok(MonotoneCubic::new(xs, ys))
}

fn mmse_from_table(table: &MonotoneCubic, snr: f64) -> f64 {
    let (lo, hi) = table.domain();
    let ln = snr.ln();
    if ln <= lo {
        1.0_f64.min(table.eval(lo).exp())
    } else if ln >= hi {
        MMSE_FLOOR
    } else {
        table.eval(ln).exp()
    }
}

/// `avg_snr * E[a mmse(avg_snr p a)]`: minus the partial derivative of the
/// summed objective (in nats) with respect to this channel's fraction.
///
/// At `p = 0` this equals `avg_snr` exactly (unit-mean fading and
/// `mmse(0) = 1`). For `p > 0` each mixture term is integrated in the SNR
/// variable `u = avg_snr p x` on fixed-width log panels, which stays
/// resolved at every SNR.
pub fn marginal_rate(
    mg: &MixtureGamma,
    cons: &Constellation,
    p: f64,
    avg_snr: f64,
) -> Result<f64> {
    let table = build_mmse_table(cons)?;
    marginal_rate_with_table(mg, &table, cons.d_min(), p, avg_snr)
}

fn marginal_rate_with_table(
    mg: &MixtureGamma,
    table: &MonotoneCubic,
    d_min: f64,
    p: f64,
    avg_snr: f64,
) -> Result<f64> {
    if !avg_snr.is_finite() || avg_snr <= 0.0 {
        return Err(Error::argument(format!(
            "average snr must be finite and positive, got {avg_snr}"
        )));
    }
    if !p.is_finite() || p < 0.0 {
        return Err(Error::argument(format!(
            "power fraction must be finite and >= 0, got {p}"
        )));
    }
    if p == 0.0 {
        return Ok(avg_snr);
    }
    let c = avg_snr * p;
    let u_dead = 800.0 * 4.0 / (d_min * d_min);
    let rule = crate::numeric::gl16();
    let mut total = 0.0;
    for t in mg.terms() {
        let zeta_eff = t.zeta / c;
        let u_peak = ((t.beta + 1.0) / zeta_eff).min((t.beta + 1.0) * 8.0 / (d_min * d_min));
        let v_hi = ((t.beta + 45.0) / zeta_eff).min(u_dead).ln();
        let v_lo = u_peak.ln() - 42.0 / (t.beta + 1.0) - 1.0;
        if v_hi <= v_lo {
            continue;
        }
        let lead = t.alpha.ln() - (t.beta + 1.0) * c.ln();
        let n_panels = ((v_hi - v_lo) / 0.5).ceil() as usize;
        let step = (v_hi - v_lo) / n_panels as f64;
        let mut term_sum = 0.0;
        for i in 0..n_panels {
            let a = v_lo + i as f64 * step;
            let mid = a + 0.5 * step;
            let half = 0.5 * step;
            for (x, w) in rule.0.iter().zip(&rule.1) {
                let v = mid + half * x;
                let u = v.exp();
                term_sum +=
                    w * half * (lead + (t.beta + 1.0) * v - zeta_eff * u).exp()
                        * mmse_from_table(table, u);
            }
        }
        total += term_sum;
    }
    Ok(avg_snr * total)
}

/// Summed AMI objective (bits) at the given fractions, each channel
/// evaluated by [`ami_quadrature`] at `p_k * avg_snr`.
pub fn sum_ami(
    chs: &ParallelChannels,
    fractions: &[f64],
    avg_snr: f64,
    order: usize,
) -> Result<f64> {
    if fractions.len() != chs.count() {
        return Err(Error::argument("fraction count does not match channels"));
    }
    let mut total = 0.0;
    for (sub, &p) in chs.subchannels().iter().zip(fractions) {
        if p > 0.0 {
            total += ami_quadrature(&sub.fading, &sub.cons, p * avg_snr, order)?;
        }
    }
    Ok(total)
}

fn fraction_for_multiplier(
    sub: &SubChannel,
    nu: f64,
    avg_snr: f64,
) -> Result<f64> {
    if avg_snr <= nu {
        return Ok(0.0);
    }
    let marg =
        |p: f64| marginal_rate_with_table(&sub.fading, &sub.mmse_ln, sub.cons.d_min(), p, avg_snr);
    if marg(1.0)? >= nu {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if marg(mid)? > nu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Default Laguerre order for the reported objective values.
const OBJECTIVE_ORDER: usize = 30;

/// Exact optimizer: common-multiplier conditions solved by nested
/// bisections (outer on `ln nu`, inner on each `p_k`).
pub fn exact_allocate(chs: &ParallelChannels, avg_snr: f64) -> Result<PowerPolicy> {
    if !avg_snr.is_finite() || avg_snr <= 0.0 {
        return Err(Error::argument(format!(
            "average snr must be finite and positive, got {avg_snr}"
        )));
    }
    let k = chs.count();
    if k == 1 {
        let sub = &chs.subchannels()[0];
        let nu =
            marginal_rate_with_table(&sub.fading, &sub.mmse_ln, sub.cons.d_min(), 1.0, avg_snr)?;
        return Ok(PowerPolicy {
            fractions: vec![1.0],
            multiplier: Some(nu),
            method: AllocationMethod::ExactKkt,
            objective_bits: sum_ami(chs, &[1.0], avg_snr, OBJECTIVE_ORDER)?,
        });
    }
    // below every channel's marginal at full power, all fractions hit 1
    let mut nu_lo = f64::INFINITY;
    for sub in chs.subchannels() {
        let m1 =
            marginal_rate_with_table(&sub.fading, &sub.mmse_ln, sub.cons.d_min(), 1.0, avg_snr)?;
        nu_lo = nu_lo.min(m1);
    }
    let mut lo = (nu_lo * 0.5).max(f64::MIN_POSITIVE).ln();
    let mut hi = avg_snr.ln();
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for _ in 0..200 {
        let nu = (0.5 * (lo + hi)).exp();
        let fractions = chs
            .subchannels()
            .iter()
            .map(|sub| fraction_for_multiplier(sub, nu, avg_snr))
            .collect::<Result<Vec<f64>>>()?;
        let total: f64 = fractions.iter().sum();
        let residual = (total - 1.0).abs();
        if best.as_ref().map_or(true, |(_, _, r)| residual < *r) {
            best = Some((nu, fractions.clone(), residual));
        }
        if residual <= BUDGET_TOL {
            break;
        }
        if total > 1.0 {
            lo = 0.5 * (lo + hi);
        } else {
            hi = 0.5 * (lo + hi);
        }
    }
    let (nu, fractions, residual) = best.expect("at least one outer iteration");
    if residual > BUDGET_TOL {
        return Err(Error::Solver { residual });
    }
    let objective_bits = sum_ami(chs, &fractions, avg_snr, OBJECTIVE_ORDER)?;
    Ok(PowerPolicy {
        fractions,
        multiplier: Some(nu),
        method: AllocationMethod::ExactKkt,
        objective_bits,
    })
}

/// Largest relative violation of the multiplier conditions by a policy:
/// active channels must sit on the common multiplier, inactive ones below.
pub fn kkt_residual(chs: &ParallelChannels, policy: &PowerPolicy, avg_snr: f64) -> Result<f64> {
    let nu = policy
        .multiplier
        .ok_or_else(|| Error::argument("policy has no multiplier"))?;
    let mut worst = 0.0f64;
    for (sub, &p) in chs.subchannels().iter().zip(&policy.fractions) {
        let m =
            marginal_rate_with_table(&sub.fading, &sub.mmse_ln, sub.cons.d_min(), p, avg_snr)?;
        if p > 0.0 && p < 1.0 {
            worst = worst.max((m - nu).abs() / nu);
        } else if p == 0.0 && m > nu {
            worst = worst.max((m - nu) / nu);
        } else if p >= 1.0 && m < nu {
            // a capped channel may sit above the multiplier but not below
            worst = worst.max((nu - m) / nu);
        }
    }
    Ok(worst)
}

/// High-SNR policy: inverts the leading-order marginal relation
/// `p_k = (A_k D_k / (nu snr^{D_k}))^{1/(D_k+1)}` and root-finds the
/// multiplier that meets the budget.
pub fn asymptotic_allocate(chs: &ParallelChannels, avg_snr: f64) -> Result<PowerPolicy> {
    if !avg_snr.is_finite() || avg_snr <= 0.0 {
        return Err(Error::argument(format!(
            "average snr must be finite and positive, got {avg_snr}"
        )));
    }
    let params: Vec<(f64, f64)> = chs
        .subchannels()
        .iter()
        .map(|s| (s.asym.coeff, s.asym.diversity_order))
        .collect();
    if chs.count() == 1 {
        let (a, d) = params[0];
        let nu = a * d * avg_snr.powf(-d);
        return Ok(PowerPolicy {
            fractions: vec![1.0],
            multiplier: Some(nu),
            method: AllocationMethod::Asymptotic,
            objective_bits: sum_ami(chs, &[1.0], avg_snr, OBJECTIVE_ORDER)?,
        });
    }
    let sum_at = |nu: f64| -> f64 {
        params
            .iter()
            .map(|&(a, d)| (a * d / (nu * avg_snr.powf(d))).powf(1.0 / (d + 1.0)))
            .sum()
    };
    let mut nu_lo = params
        .iter()
        .map(|&(a, d)| a * d * avg_snr.powf(-d))
        .fold(f64::INFINITY, f64::min);
    let mut nu_hi = nu_lo;
    while sum_at(nu_lo) < 1.0 {
        nu_lo /= 16.0;
    }
    while sum_at(nu_hi) > 1.0 {
        nu_hi *= 16.0;
    }
    let (mut lo, mut hi) = (nu_lo.ln(), nu_hi.ln());
    let mut nu = (0.5 * (lo + hi)).exp();
    for _ in 0..200 {
        nu = (0.5 * (lo + hi)).exp();
        let s = sum_at(nu);
        if (s - 1.0).abs() <= 1e-12 {
            break;
        }
        if s > 1.0 {
            lo = nu.ln();
        } else {
            hi = nu.ln();
        }
    }
    let fractions: Vec<f64> = params
        .iter()
        .map(|&(a, d)| (a * d / (nu * avg_snr.powf(d))).powf(1.0 / (d + 1.0)))
        .collect();
    let residual = (fractions.iter().sum::<f64>() - 1.0).abs();
    if residual > BUDGET_TOL {
        return Err(Error::Solver { residual });
    }
    let objective_bits = sum_ami(chs, &fractions, avg_snr, OBJECTIVE_ORDER)?;
    Ok(PowerPolicy {
        fractions,
        multiplier: Some(nu),
        method: AllocationMethod::Asymptotic,
        objective_bits,
    })
}

/// Infinite-SNR limit: all power on the minimum-diversity channels, split
/// as `A_k^{1/(D_min+1)}`; higher-diversity channels get exactly zero.
pub fn limiting_allocate(chs: &ParallelChannels) -> Result<PowerPolicy> {
    let d_min = chs
        .subchannels()
        .iter()
        .map(|s| s.asym.diversity_order)
        .fold(f64::INFINITY, f64::min);
    let shares: Vec<f64> = chs
        .subchannels()
        .iter()
        .map(|s| {
            if (s.asym.diversity_order - d_min).abs() <= DIVERSITY_EQ_TOL {
                s.asym.coeff.powf(1.0 / (d_min + 1.0))
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = shares.iter().sum();
    let fractions: Vec<f64> = shares.iter().map(|s| s / total).collect();
    let objective_bits = chs
        .subchannels()
        .iter()
        .map(|s| s.asym.ami_limit_bits)
        .sum();
    Ok(PowerPolicy {
        fractions,
        multiplier: None,
        method: AllocationMethod::Limiting,
        objective_bits,
    })
}
