//! q-analogue primitives: q-numbers, q-factorials, q-Pochhammer symbols,
//! q-binomials, the q-Gamma function and the generalized q-power
//!
//! ```text
//! (x^p - y^p)^(α)_{q^p} = x^{pα} (y^p/x^p; q^p)_∞ / (q^{pα} y^p/x^p; q^p)_∞
//! ```
//!
//! Every infinite product goes through [`q_pochhammer_infinite`], whose
//! truncation is governed by a [`SeriesControl`].

use crate::error::{QError, Result};

/// The deformation pair `(q, p)`: `0 < q < 1`, `p > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: f64,
    p: f64,
}

impl QParams {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        check_q(q)?;
        if !(p > 0.0 && p.is_finite()) {
            return Err(QError::domain(format!("p must be positive and finite, got {p}")));
        }
        Ok(Self { q, p })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The operator base `q^p`.
    pub fn qp(&self) -> f64 {
        self.q.powf(self.p)
    }

    /// `[p]_q`, the scale factor appearing in every operator normalisation.
    pub fn p_number(&self) -> f64 {
        q_num(self.p, self.q)
    }
}

/// Truncation policy for infinite sums and products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
    pub consecutive_small: usize,
}

impl SeriesControl {
    pub fn new(abs_tol: f64, rel_tol: f64, max_terms: usize, consecutive_small: usize) -> Result<Self> {
        let ctrl = Self {
            abs_tol,
            rel_tol,
            max_terms,
            consecutive_small,
        };
        ctrl.validate()?;
        Ok(ctrl)
    }

    /// Defaults for infinite products.
    pub fn products() -> Self {
        Self {
            abs_tol: 1e-17,
            rel_tol: 1e-15,
            max_terms: 10_000,
            consecutive_small: 3,
        }
    }

    /// Defaults for Jackson sums.
    pub fn integration() -> Self {
        Self {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_terms: 5_000,
            consecutive_small: 3,
        }
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms.max(self.consecutive_small);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) {
            return Err(QError::domain("tolerances must be non-negative"));
        }
        if self.abs_tol == 0.0 && self.rel_tol == 0.0 {
            return Err(QError::domain("abs_tol and rel_tol cannot both be zero"));
        }
        if self.consecutive_small == 0 {
            return Err(QError::domain("consecutive_small must be positive"));
        }
        if self.max_terms < self.consecutive_small {
            return Err(QError::domain("max_terms must be at least consecutive_small"));
        }
        Ok(())
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(QError::domain(format!("q must lie in (0, 1), got {q}")))
    }
}

#[inline]
pub(crate) fn q_num(a: f64, q: f64) -> f64 {
    (1.0 - q.powf(a)) / (1.0 - q)
}

/// `[a]_q = (1 - q^a) / (1 - q)`.
pub fn q_number(a: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(q_num(a, q))
}

/// `[n]_q! = [n]_q [n-1]_q ... [1]_q`, with `[0]_q! = 1`.
pub fn q_factorial(n: u32, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok((1..=n).map(|k| q_num(f64::from(k), q)).product())
}

/// `(a; q)_n = prod_{j<n} (1 - q^j a)`.
pub fn q_pochhammer_finite(a: f64, q: f64, n: u32) -> Result<f64> {
    check_q(q)?;
    let mut prod = 1.0;
    let mut qj = 1.0;
    for _ in 0..n {
        prod *= 1.0 - qj * a;
        qj *= q;
    }
    Ok(prod)
}

/// `(a; q)_∞`, truncated once `|q^j a|` drops below `abs_tol` for
/// `consecutive_small` successive factors and the geometric bound on the
/// remaining log-tail is within tolerance.
pub fn q_pochhammer_infinite(a: f64, q: f64, ctrl: &SeriesControl) -> Result<f64> {
    check_q(q)?;
    pochhammer_inf(a, q, ctrl).map(|(prod, _)| prod)
}

/// Returns the product together with the smallest factor magnitude seen,
/// so callers dividing by the product can detect poles.
fn pochhammer_inf(a: f64, q: f64, ctrl: &SeriesControl) -> Result<(f64, f64)> {
    let tail_tol = ctrl.abs_tol.max(ctrl.rel_tol);
    let mut prod = 1.0;
    let mut min_factor = f64::INFINITY;
    let mut qj = 1.0;
    let mut small = 0;
    for _ in 0..ctrl.max_terms {
        let dev = a * qj;
        let factor = 1.0 - dev;
        min_factor = min_factor.min(factor.abs());
        prod *= factor;
        if factor == 0.0 {
            return Ok((0.0, 0.0));
        }
        qj *= q;
        let next = (a * qj).abs();
        let tail = if next < 1.0 {
            next / ((1.0 - q) * (1.0 - next))
        } else {
            f64::INFINITY
        };
        if dev.abs() < ctrl.abs_tol && tail <= tail_tol {
            small += 1;
            if small >= ctrl.consecutive_small {
                return Ok((prod, min_factor));
            }
        } else {
            small = 0;
        }
    }
    Err(QError::NonConvergence {
        what: "infinite q-Pochhammer product",
        terms: ctrl.max_terms,
    })
}

/// Gaussian binomial `(q;q)_n / ((q;q)_{n-k} (q;q)_k)`.
pub fn q_binomial(n: u32, k: u32, q: f64) -> Result<f64> {
    check_q(q)?;
    if k > n {
        return Err(QError::domain(format!("q_binomial requires k <= n, got n={n}, k={k}")));
    }
    let num = q_pochhammer_finite(q, q, n)?;
    let den = q_pochhammer_finite(q, q, n - k)? * q_pochhammer_finite(q, q, k)?;
    Ok(num / den)
}

/// q-Gamma function in product form
/// `Γ_q(t) = (q;q)_∞ / (q^t;q)_∞ · (1-q)^{1-t}`.
///
/// Non-positive integers are poles. Other negative arguments are accepted.
pub fn q_gamma(t: f64, q: f64, ctrl: &SeriesControl) -> Result<f64> {
    check_q(q)?;
    if !t.is_finite() {
        return Err(QError::domain(format!("q_gamma argument must be finite, got {t}")));
    }
    if t <= 0.0 && (t - t.round()).abs() < 1e-12 {
        return Err(QError::Pole(format!("q_gamma has a pole at t = {t}")));
    }
    let num = pochhammer_inf(q, q, ctrl)?.0;
    let (den, min_factor) = pochhammer_inf(q.powf(t), q, ctrl)?;
    if min_factor < 1e-14 {
        return Err(QError::Pole(format!("q_gamma near a pole at t = {t}")));
    }
    Ok(num / den * (1.0 - q).powf(1.0 - t))
}

/// q-Gamma through the generalized q-power: `(1-q)^{(t-1)} / (1-q)^{t-1}`.
pub fn q_gamma_via_power(t: f64, q: f64, ctrl: &SeriesControl) -> Result<f64> {
    let unit = QParams::new(q, 1.0)?;
    let power = q_power_general(1.0, q, t - 1.0, &unit, ctrl)?;
    Ok(power / (1.0 - q).powf(t - 1.0))
}

/// Generalized q-power `(x^p - y^p)^(α)_{q^p}` via the quotient of infinite
/// products. `y = x` gives exactly zero; `y > x` is rejected.
pub fn q_power_general(x: f64, y: f64, alpha: f64, params: &QParams, ctrl: &SeriesControl) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(QError::domain(format!("q_power_general requires x > 0, got {x}")));
    }
    if !(y >= 0.0) {
        return Err(QError::domain(format!("q_power_general requires y >= 0, got {y}")));
    }
    if y > x {
        return Err(QError::domain(format!("q_power_general requires y <= x, got x={x}, y={y}")));
    }
    if y == x {
        return Ok(0.0);
    }
    let base = params.qp();
    let ratio = (y / x).powf(params.p());
    let (num, _) = pochhammer_inf(ratio, base, ctrl)?;
    if num == 0.0 {
        return Ok(0.0);
    }
    let (den, min_factor) = pochhammer_inf(base.powf(alpha) * ratio, base, ctrl)?;
    if min_factor < 1e-14 {
        return Err(QError::Pole(format!(
            "q_power_general denominator vanishes (x={x}, y={y}, alpha={alpha})"
        )));
    }
    Ok(x.powf(params.p() * alpha) * num / den)
}
