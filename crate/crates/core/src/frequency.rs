//! Rotation numbers built from continued fractions, and torus arithmetic.
//!
//! Torus points are plain `f64` values kept in `[0, 1)`. Orbit points
//! `θ + kω` are formed with an error-free product so that long orbits do not
//! drift.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Convergent denominators are tabulated up to this size; beyond it the
/// double-precision value of ω no longer resolves `|qω − p|`.
const MAX_TABULATED_DENOMINATOR: u64 = 10_000_000;

/// Partial quotients are expanded until the convergent denominator passes this
/// bound, which pins the value to full double precision.
const VALUE_DENOMINATOR: f64 = 1e18;

const MAX_EXPANSION_TERMS: usize = 400;

/// Reduce a real number into `[0, 1)`.
#[inline]
pub fn reduce(theta: f64) -> f64 {
    let r = theta.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed distance from `a` to `b` on the circle, in `[-1/2, 1/2)`.
#[inline]
pub fn circle_offset(a: f64, b: f64) -> f64 {
    let mut x = (b - a).rem_euclid(1.0);
    if x >= 0.5 {
        x -= 1.0;
    }
    x
}

/// Diophantine constants `κ, τ` with `|nω − p| ≥ κ/|n|^τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diophantine {
    pub kappa: f64,
    pub tau: f64,
}

/// An irrational rotation number in `(0, 1)` with its continued-fraction data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    value: f64,
    partial_quotients: Vec<u64>,
    periodic: bool,
    convergents: Vec<(u64, u64)>,
    diophantine: Option<Diophantine>,
}

impl Frequency {
    /// The golden mean `(√5 − 1)/2 = [0; 1, 1, 1, ...]`.
    pub fn golden_mean() -> Self {
        Self::from_continued_fraction(&[1], true).expect("golden mean expansion is valid")
    }

    /// Build `[0; a1, a2, ...]`. With `periodic` set, the listed quotients
    /// repeat forever; otherwise the expansion is truncated after them.
    pub fn from_continued_fraction(quotients: &[u64], periodic: bool) -> Result<Self> {
        if quotients.is_empty() {
            return Err(LabError::InvalidInput(
                "continued fraction needs at least one partial quotient after ';'".into(),
            ));
        }
        if quotients.iter().any(|&a| a == 0) {
            return Err(LabError::InvalidInput(
                "partial quotients after ';' must be positive".into(),
            ));
        }

        let mut expanded = Vec::new();
        let (mut q_prev, mut q) = (0.0_f64, 1.0_f64);
        let mut i = 0;
        loop {
            let a = if periodic {
                quotients[i % quotients.len()]
            } else if i < quotients.len() {
                quotients[i]
            } else {
                break;
            };
            expanded.push(a);
            let q_next = a as f64 * q + q_prev;
            q_prev = q;
            q = q_next;
            i += 1;
            if periodic && (q > VALUE_DENOMINATOR || expanded.len() >= MAX_EXPANSION_TERMS) {
                break;
            }
        }

        // Backward evaluation is the numerically stable way to sum a continued fraction.
        let mut x = *expanded.last().unwrap() as f64;
        for &a in expanded.iter().rev().skip(1) {
            x = a as f64 + 1.0 / x;
        }
        let value = 1.0 / x;

        let mut convergents = Vec::new();
        let (mut p_prev, mut p_cur) = (1_u64, 0_u64);
        let (mut q_prev, mut q_cur) = (0_u64, 1_u64);
        for &a in &expanded {
            let p_next = a.checked_mul(p_cur).and_then(|v| v.checked_add(p_prev));
            let q_next = a.checked_mul(q_cur).and_then(|v| v.checked_add(q_prev));
            match (p_next, q_next) {
                (Some(p), Some(qn)) if qn <= MAX_TABULATED_DENOMINATOR => {
                    convergents.push((p, qn));
                    p_prev = p_cur;
                    p_cur = p;
                    q_prev = q_cur;
                    q_cur = qn;
                }
                _ => break,
            }
        }

        if !(value > 0.0 && value < 1.0) {
            return Err(LabError::InvalidInput(format!(
                "frequency {value} is not in (0, 1)"
            )));
        }

        Ok(Self {
            value,
            partial_quotients: quotients.to_vec(),
            periodic,
            convergents,
            diophantine: None,
        })
    }

    /// Parse `[0; a1, a2, ...]`. Items may be written `a^m` to repeat `a`
    /// `m` times, and a trailing `...` makes the listed tail periodic.
    /// `golden` is accepted as shorthand for `[0; 1, ...]`.
    pub fn parse(text: &str) -> Result<Self> {
        let s = text.trim();
        if s.eq_ignore_ascii_case("golden") {
            return Ok(Self::golden_mean());
        }
        let bad = |why: &str| LabError::InvalidInput(format!("frequency '{text}': {why}"));
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| bad("expected '[0; a1, a2, ...]'"))?;
        let (head, tail) = inner.split_once(';').ok_or_else(|| bad("missing ';'"))?;
        if head.trim() != "0" {
            return Err(bad("integer part must be 0 so that ω lies in (0, 1)"));
        }
        let mut quotients = Vec::new();
        let mut periodic = false;
        let items: Vec<&str> = tail.split(',').map(str::trim).collect();
        for (k, item) in items.iter().enumerate() {
            if *item == "..." {
                if k + 1 != items.len() {
                    return Err(bad("'...' must be the last item"));
                }
                periodic = true;
                continue;
            }
            let (value, count) = match item.split_once('^') {
                Some((v, m)) => (v.trim(), m.trim().parse::<usize>().map_err(|_| bad("bad repeat count"))?),
                None => (*item, 1),
            };
            let a = value
                .parse::<u64>()
                .map_err(|_| bad(&format!("bad partial quotient '{value}'")))?;
            quotients.extend(std::iter::repeat_n(a, count));
        }
        Self::from_continued_fraction(&quotients, periodic)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn partial_quotients(&self) -> &[u64] {
        &self.partial_quotients
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Convergents `(p_k, q_k)` with `q_k ≤ 10⁷`.
    pub fn convergents(&self) -> &[(u64, u64)] {
        &self.convergents
    }

    pub fn diophantine(&self) -> Option<Diophantine> {
        self.diophantine
    }

    /// `|q·ω − p|` evaluated with a fused multiply-add.
    pub fn approximation_error(&self, p: u64, q: u64) -> f64 {
        (q as f64).mul_add(self.value, -(p as f64)).abs()
    }

    /// Check `|q_k ω − p_k| ≥ κ/q_k^τ` on every tabulated convergent.
    pub fn satisfies_diophantine(&self, kappa: f64, tau: f64) -> bool {
        self.convergents
            .iter()
            .all(|&(p, q)| self.approximation_error(p, q) >= kappa / (q as f64).powf(tau))
    }

    /// Attach Diophantine constants after checking them on the convergents.
    pub fn with_diophantine(mut self, kappa: f64, tau: f64) -> Result<Self> {
        if !(kappa > 0.0) || !(tau >= 1.0) {
            return Err(LabError::InvalidInput(format!(
                "Diophantine constants need kappa > 0 and tau >= 1, got ({kappa}, {tau})"
            )));
        }
        if !self.satisfies_diophantine(kappa, tau) {
            return Err(LabError::InvalidInput(format!(
                "convergents violate |qω − p| ≥ {kappa}/q^{tau}"
            )));
        }
        self.diophantine = Some(Diophantine { kappa, tau });
        Ok(self)
    }

    /// Smallest tabulated convergent denominator that is at least `n`, or `n`
    /// itself past the table. Orbits of that length have the lowest discrepancy.
    pub fn good_orbit_length(&self, n: usize) -> usize {
        self.convergents
            .iter()
            .map(|&(_, q)| q as usize)
            .find(|&q| q >= n)
            .unwrap_or(n)
    }

    /// The orbit point `θ + kω` reduced into `[0, 1)`.
    #[inline]
    pub fn shift(&self, theta: f64, k: i64) -> f64 {
        let kf = k as f64;
        let p = kf * self.value;
        let err = kf.mul_add(self.value, -p);
        reduce(theta + (p - p.floor()) + err)
    }
}
