//! Conjugate gradient directions `d^k = v(x^k) + β_k d^{k-1}`.
//!
//! All five parameter families are written in terms of `ψ`:
//!
//! ```text
//! FR  =  ψ(x^k, v^k) / ψ(x^{k-1}, v^{k-1})
//! CD  =  ψ(x^k, v^k) / ψ(x^{k-1}, d^{k-1})
//! DY  = -ψ(x^k, v^k) / (ψ(x^k, d^{k-1}) - ψ(x^{k-1}, d^{k-1}))
//! PRP = (-ψ(x^k, v^k) + ψ(x^{k-1}, v^k)) / -ψ(x^{k-1}, v^{k-1})
//! HS  = (-ψ(x^k, v^k) + ψ(x^{k-1}, v^k)) / (ψ(x^k, d^{k-1}) - ψ(x^{k-1}, d^{k-1}))
//! ```
//!
//! With `m = 1` they reduce to the classical scalar formulas.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominators below this magnitude trigger a restart.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;
/// Default cap `ξ` for the FR family.
pub const DEFAULT_FR_XI: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaFamily {
    Fr,
    Cd,
    Dy,
    Prp,
    Hs,
}

impl BetaFamily {
    pub const ALL: [BetaFamily; 5] = [
        BetaFamily::Fr,
        BetaFamily::Cd,
        BetaFamily::Dy,
        BetaFamily::Prp,
        BetaFamily::Hs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BetaFamily::Fr => "fr",
            BetaFamily::Cd => "cd",
            BetaFamily::Dy => "dy",
            BetaFamily::Prp => "prp",
            BetaFamily::Hs => "hs",
        }
    }
}

impl fmt::Display for BetaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BetaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BetaFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown beta family `{s}` (expected fr, cd, dy, prp or hs)")))
    }
}

/// A `β` family plus the modifiers that the convergence results require.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaRule {
    pub family: BetaFamily,
    /// Enforce `|β_k| <= ξ β_k^FR`, `ξ ∈ (0, 1)`.
    pub fr_cap_xi: Option<f64>,
    /// Multiply the DY value by `η >= 0`. For DY rules handed to the solver
    /// `None` means "pick `η` from the strong convexity constant".
    pub dy_scale_eta: Option<f64>,
    /// `β = max{β, 0}`; always on for PRP and HS.
    pub clamp_nonneg: bool,
}

impl BetaRule {
    /// The unmodified family formula (PRP and HS are still clamped).
    pub fn plain(family: BetaFamily) -> Self {
        Self {
            family,
            fr_cap_xi: None,
            dy_scale_eta: None,
            clamp_nonneg: matches!(family, BetaFamily::Prp | BetaFamily::Hs),
        }
    }

    /// The configuration covered by the global convergence results:
    /// FR capped at `ξ = 0.9`, CD as is, DY scaled by an `η` chosen at solve
    /// time, PRP and HS clamped at zero.
    pub fn theorem(family: BetaFamily) -> Self {
        let mut rule = Self::plain(family);
        if family == BetaFamily::Fr {
            rule.fr_cap_xi = Some(DEFAULT_FR_XI);
        }
        rule
    }

    pub fn with_fr_cap(mut self, xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::invalid(format!("FR cap ξ must lie in (0, 1), got {xi}")));
        }
        self.fr_cap_xi = Some(xi);
        Ok(self)
    }

    pub fn with_dy_scale(mut self, eta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("DY scale η must be >= 0, got {eta}")));
        }
        self.dy_scale_eta = Some(eta);
        Ok(self)
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp_nonneg = clamp || matches!(self.family, BetaFamily::Prp | BetaFamily::Hs);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(xi) = self.fr_cap_xi {
            if !(xi > 0.0 && xi < 1.0) {
                return Err(Error::invalid(format!("FR cap ξ must lie in (0, 1), got {xi}")));
            }
        }
        if let Some(eta) = self.dy_scale_eta {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::invalid(format!("DY scale η must be >= 0, got {eta}")));
            }
            if self.family != BetaFamily::Dy {
                return Err(Error::invalid("η only applies to the dy family"));
            }
        }
        if matches!(self.family, BetaFamily::Prp | BetaFamily::Hs) && !self.clamp_nonneg {
            return Err(Error::invalid(format!(
                "{} requires clamp_nonneg",
                self.family
            )));
        }
        Ok(())
    }
}

/// Upper end of the admissible DY scale interval, `(1 - c) / (1 + c)` with
/// `c = 1 - μδ/a_max`.
pub fn dy_scale_bound(mu: f64, delta: f64, a_max: f64) -> f64 {
    let c = 1.0 - mu * delta / a_max;
    (1.0 - c) / (1.0 + c)
}

/// The `ψ` values entering the `β` formulas at iteration `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaInputs {
    /// `ψ(x^k, v(x^k))`
    pub psi_k_vk: f64,
    /// `ψ(x^{k-1}, v(x^{k-1}))`
    pub psi_km1_vkm1: f64,
    /// `ψ(x^{k-1}, d^{k-1})`
    pub psi_km1_dkm1: f64,
    /// `ψ(x^k, d^{k-1})`
    pub psi_k_dkm1: f64,
    /// `ψ(x^{k-1}, v(x^k))`
    pub psi_km1_vk: f64,
}

impl BetaInputs {
    /// `β^FR`, or `None` if its denominator is degenerate.
    pub fn fletcher_reeves(&self) -> Option<f64> {
        ratio(self.psi_k_vk, self.psi_km1_vkm1)
    }

    pub fn raw(&self, family: BetaFamily) -> Option<f64> {
        let dy_den = self.psi_k_dkm1 - self.psi_km1_dkm1;
        let prp_num = -self.psi_k_vk + self.psi_km1_vk;
        match family {
            BetaFamily::Fr => ratio(self.psi_k_vk, self.psi_km1_vkm1),
            BetaFamily::Cd => ratio(self.psi_k_vk, self.psi_km1_dkm1),
            BetaFamily::Dy => ratio(-self.psi_k_vk, dy_den),
            BetaFamily::Prp => ratio(prp_num, -self.psi_km1_vkm1),
            BetaFamily::Hs => ratio(prp_num, dy_den),
        }
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den.abs() >= DEGENERATE_DENOMINATOR).then(|| num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartCause {
    /// A denominator in the selected formula vanished.
    DegenerateDenominator,
    /// CD produced `β <= 0`, outside the hypothesis of its convergence result.
    NonPositiveCd,
    /// The combined direction was not a descent direction.
    DescentGuard,
}

/// Value of `β_k` plus how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta {
    /// Value used in the direction update.
    pub value: f64,
    /// Family formula before modifiers (`NaN` if degenerate).
    pub raw: f64,
    /// `β^FR` for the same inputs (`NaN` if degenerate).
    pub fr: f64,
    pub restart: Option<RestartCause>,
}

impl Beta {
    fn restart(raw: f64, fr: f64, cause: RestartCause) -> Self {
        Self {
            value: 0.0,
            raw,
            fr,
            restart: Some(cause),
        }
    }
}

/// Evaluates the rule. Degenerate denominators and non-positive CD values
/// yield `β = 0` with a restart cause rather than an error.
pub fn compute_beta(rule: &BetaRule, inputs: &BetaInputs) -> Beta {
    let fr = inputs.fletcher_reeves().unwrap_or(f64::NAN);
    let Some(raw) = inputs.raw(rule.family) else {
        return Beta::restart(f64::NAN, fr, RestartCause::DegenerateDenominator);
    };
    if rule.family == BetaFamily::Cd && raw <= 0.0 {
        return Beta::restart(raw, fr, RestartCause::NonPositiveCd);
    }
    let mut value = raw;
    if rule.family == BetaFamily::Dy {
        if let Some(eta) = rule.dy_scale_eta {
            value *= eta;
        }
    }
    if rule.clamp_nonneg {
        value = value.max(0.0);
    }
    if let Some(xi) = rule.fr_cap_xi {
        if fr.is_nan() {
            return Beta::restart(raw, fr, RestartCause::DegenerateDenominator);
        }
        let cap = xi * fr.abs();
        value = value.clamp(-cap, cap);
    }
    Beta {
        value,
        raw,
        fr,
        restart: None,
    }
}

/// `d^0 = v^0`; `d^k = v^k + β d^{k-1}` for `k >= 1`.
pub fn update_direction(v: &[f64], beta: f64, d_prev: Option<&[f64]>, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(v.to_vec());
    }
    let d_prev = d_prev.ok_or_else(|| {
        Error::Contract(format!("iteration {k} needs the previous direction"))
    })?;
    if d_prev.len() != v.len() {
        return Err(Error::Dimension {
            expected: v.len(),
            actual: d_prev.len(),
        });
    }
    Ok(v.iter().zip(d_prev).map(|(a, b)| a + beta * b).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuardPolicy {
    /// Restart whenever `ψ(x^k, d^k) >= 0`.
    #[default]
    Strict,
    /// Never restart. A non-descent direction then ends the run with an error.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guard {
    Keep,
    Restart,
}

/// Decides whether `d^k` may be used at a non-critical iterate (`psi_v < 0`).
pub fn descent_guard(psi_d: f64, psi_v: f64, policy: GuardPolicy) -> Guard {
    debug_assert!(psi_v <= 0.0);
    match policy {
        GuardPolicy::Strict if !(psi_d < 0.0) => Guard::Restart,
        _ => Guard::Keep,
    }
}
