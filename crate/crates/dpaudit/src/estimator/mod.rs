//! Converts Monte-Carlo trial counts into confidence-backed lower bounds on
//! the differential-privacy parameter epsilon.
//!
//! The pipeline is: exact binomial (Clopper-Pearson) bounds on each arm's
//! flagging probability, then the group-privacy conversion
//! `eps = ln(p0 / p1) / k` (delta = 0) or the polynomial root for delta > 0,
//! maximized over the output set, its complement, and both arm orderings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::special::beta_inv_cdf;
use crate::trainer::{Dataset, ModelParams};

/// Monte-Carlo flag counts: `ct0` of `t` trials on the first dataset landed
/// in the output set, `ct1` of `t` on the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub ct0: usize,
    pub ct1: usize,
    pub t: usize,
}

impl TrialCounts {
    pub fn new(ct0: usize, ct1: usize, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidArgument("trial count must be >= 1".into()));
        }
        if ct0 > t || ct1 > t {
            return Err(Error::InvalidArgument(format!(
                "counts ({ct0}, {ct1}) exceed trials {t}"
            )));
        }
        Ok(Self { ct0, ct1, t })
    }
}

/// A confidence-backed epsilon lower bound together with the bounds and
/// conventions that produced it.
///
/// `eps_lb` is always reproducible as `eps_from_probs(p0_hat, p1_hat, k,
/// delta)`; `used_complement` / `used_arm_swap` record which of the four
/// admissible output-set orderings won.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub p0_hat: f64,
    pub p1_hat: f64,
    pub eps_lb: f64,
    pub k: usize,
    pub delta: f64,
    pub alpha: f64,
    pub used_complement: bool,
    pub used_arm_swap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Exact binomial confidence bound from beta quantiles.
///
/// Lower bound: `BetaInv(tail_mass; s, t - s + 1)`, zero when `s == 0`.
/// Upper bound: `BetaInv(1 - tail_mass; s + 1, t - s)`, one when `s == t`.
pub fn clopper_pearson(
    successes: usize,
    t: usize,
    tail_mass: f64,
    side: BoundSide,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument("clopper_pearson: t must be >= 1".into()));
    }
    if successes > t {
        return Err(Error::InvalidArgument(format!(
            "clopper_pearson: {successes} successes out of {t} trials"
        )));
    }
    if !(tail_mass > 0.0 && tail_mass < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "clopper_pearson: tail mass must lie in (0, 1), got {tail_mass}"
        )));
    }
    let s = successes as f64;
    let t_f = t as f64;
    match side {
        BoundSide::Lower => {
            if successes == 0 {
                Ok(0.0)
            } else {
                beta_inv_cdf(tail_mass, s, t_f - s + 1.0)
            }
        }
        BoundSide::Upper => {
            if successes == t {
                Ok(1.0)
            } else {
                beta_inv_cdf(1.0 - tail_mass, s + 1.0, t_f - s)
            }
        }
    }
}

/// Largest verifiable epsilon given probability bounds on the two arms.
///
/// With `delta == 0` this is `max(0, ln(p0 / p1) / k)`; `p1 == 0` with
/// positive `p0` returns the `f64::INFINITY` sentinel since the ratio is
/// unbounded (unreachable through `audit_eps`, whose upper bounds are
/// strictly positive). With `delta > 0` the bound is the log of the largest
/// root `x >= 1` of
/// `p1 x^(k+1) - (p1 - delta) x^k - p0 x + (p0 - delta)`,
/// or zero when no root exceeds one.
pub fn eps_from_probs(p0_hat: f64, p1_hat: f64, k: usize, delta: f64) -> Result<f64> {
    for (name, p) in [("p0", p0_hat), ("p1", p1_hat)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "eps_from_probs: {name} must lie in [0, 1], got {p}"
            )));
        }
    }
    if k == 0 {
        return Err(Error::InvalidArgument(
            "eps_from_probs: k must be >= 1 (identical datasets carry no evidence)".into(),
        ));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "eps_from_probs: delta must lie in [0, 1), got {delta}"
        )));
    }
    if delta == 0.0 {
        if p1_hat == 0.0 {
            return Ok(if p0_hat > 0.0 { f64::INFINITY } else { 0.0 });
        }
        return Ok(((p0_hat / p1_hat).ln() / k as f64).max(0.0));
    }
    Ok(match largest_root_above_one(p0_hat, p1_hat, k, delta) {
        Some(root) => root.ln(),
        None => 0.0,
    })
}

/// Group-privacy polynomial for `x = e^eps`.
fn group_privacy_poly(x: f64, p0: f64, p1: f64, k: usize, delta: f64) -> f64 {
    // Horner over p1*x^(k+1) - (p1 - delta)*x^k - p0*x + (p0 - delta).
    let mut acc = p1 * x - (p1 - delta);
    for _ in 0..k {
        acc *= x;
    }
    acc - p0 * x + (p0 - delta)
}

/// The polynomial always has the root x = 1; a single further root above one
/// exists exactly when the evidence condition `p0 > p1 + k * delta` holds,
/// past which the polynomial increases monotonically. If the polynomial never
/// turns positive below the `e^50` bracket cap (possible only in degenerate
/// corners such as `p1 = 0, k = 1`), the evidence is unbounded and the
/// infinity sentinel is returned.
fn largest_root_above_one(p0: f64, p1: f64, k: usize, delta: f64) -> Option<f64> {
    // Derivative at 1 is p1 + k*delta - p0; non-negative means no root > 1.
    if p1 + k as f64 * delta - p0 >= 0.0 {
        return None;
    }
    let cap = 50f64.exp();
    let mut hi = std::f64::consts::E;
    while group_privacy_poly(hi, p0, p1, k, delta) <= 0.0 {
        hi *= 2.0;
        if hi > cap {
            return Some(f64::INFINITY);
        }
    }
    let mut lo = 1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if group_privacy_poly(mid, p0, p1, k, delta) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) / hi < 1e-14 {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    debug_assert!(
        group_privacy_poly(root, p0, p1, k, delta).abs() < 1e-9,
        "root residual too large"
    );
    Some(root)
}

/// The two probability-level candidates: the output set as given and its
/// complement `(1 - p1, 1 - p0)`, which costs no extra trials.
pub fn complement_candidates(p0: f64, p1: f64, k: usize, delta: f64) -> Result<(f64, f64)> {
    let direct = eps_from_probs(p0, p1, k, delta)?;
    let complement = eps_from_probs(1.0 - p1, 1.0 - p0, k, delta)?;
    Ok((direct, complement))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    eps: f64,
    p_num: f64,
    p_den: f64,
    swap: bool,
    complement: bool,
}

/// Full estimate from trial counts: Clopper-Pearson bounds at `alpha / 2`
/// per side, the group-privacy conversion, and the maximum over the output
/// set, its complement, and both arm orderings. With probability at least
/// `1 - alpha` over the sampling randomness the mechanism is not `eps'`-DP
/// for any `eps' < eps_lb`.
pub fn audit_eps(counts: &TrialCounts, k: usize, delta: f64, alpha: f64) -> Result<EpsilonEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "audit_eps: alpha must lie in (0, 1), got {alpha}"
        )));
    }
    TrialCounts::new(counts.ct0, counts.ct1, counts.t)?;
    let tail = alpha / 2.0;
    let t = counts.t;

    let candidate = |num: usize, den: usize, swap: bool, complement: bool| -> Result<Candidate> {
        let p_num = clopper_pearson(num, t, tail, BoundSide::Lower)?;
        let p_den = clopper_pearson(den, t, tail, BoundSide::Upper)?;
        Ok(Candidate {
            eps: eps_from_probs(p_num, p_den, k, delta)?,
            p_num,
            p_den,
            swap,
            complement,
        })
    };

    let candidates = [
        candidate(counts.ct0, counts.ct1, false, false)?,
        candidate(t - counts.ct1, t - counts.ct0, false, true)?,
        candidate(counts.ct1, counts.ct0, true, false)?,
        candidate(t - counts.ct0, t - counts.ct1, true, true)?,
    ];
    // Earlier candidates win ties so the reported convention is stable.
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.eps > best.eps {
            best = *c;
        }
    }

    Ok(EpsilonEstimate {
        p0_hat: best.p_num,
        p1_hat: best.p_den,
        eps_lb: best.eps.max(0.0),
        k,
        delta,
        alpha,
        used_complement: best.complement,
        used_arm_swap: best.swap,
    })
}

/// Monte-Carlo ceiling: the estimate produced by perfect inference accuracy
/// (`ct0 = t`, `ct1 = 0`) at the given trial budget and confidence.
pub fn eps_opt(t: usize, alpha: f64, k: usize) -> Result<f64> {
    let counts = TrialCounts::new(t, 0, t)?;
    Ok(audit_eps(&counts, k, 0.0, alpha)?.eps_lb)
}

/// Loss-threshold membership-inference advantage: the fraction of correct
/// member/non-member calls when predicting "member" for loss below the
/// training loss `c`.
pub fn membership_advantage(
    params: &ModelParams,
    training_loss: f64,
    train: &Dataset,
    test: &Dataset,
) -> Result<f64> {
    if train.n() != test.n() {
        return Err(Error::InvalidArgument(format!(
            "membership inference needs equal split sizes, got {} and {}",
            train.n(),
            test.n()
        )));
    }
    let mut correct = 0usize;
    for i in 0..train.n() {
        let (x, y) = train.example(i);
        if params.loss(x, y) < training_loss {
            correct += 1;
        }
    }
    for i in 0..test.n() {
        let (x, y) = test.example(i);
        if params.loss(x, y) > training_loss {
            correct += 1;
        }
    }
    Ok(correct as f64 / (2 * train.n()) as f64)
}

/// `max(0, ln(adv / (1 - adv)))`, inverting the accuracy bound
/// `exp(eps) / (1 + exp(eps))` of an epsilon-DP mechanism.
pub fn eps_from_advantage(advantage: f64) -> f64 {
    if advantage <= 0.5 {
        return 0.0;
    }
    if advantage >= 1.0 {
        return f64::INFINITY;
    }
    (advantage / (1.0 - advantage)).ln()
}

/// Membership-inference baseline. Carries no Clopper-Pearson correction, so
/// `alpha` is reported as 1.0; the advantage maps onto `(p0_hat, p1_hat)` so
/// the estimate stays reproducible through `eps_from_probs`.
pub fn membership_inference_audit(
    params: &ModelParams,
    training_loss: f64,
    train: &Dataset,
    test: &Dataset,
) -> Result<EpsilonEstimate> {
    let adv = membership_advantage(params, training_loss, train, test)?;
    Ok(EpsilonEstimate {
        p0_hat: adv,
        p1_hat: 1.0 - adv,
        eps_lb: eps_from_advantage(adv),
        k: 1,
        delta: 0.0,
        alpha: 1.0,
        used_complement: false,
        used_arm_swap: false,
    })
}
