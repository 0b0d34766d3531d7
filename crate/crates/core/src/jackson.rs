//! Jackson q-integration, the q-derivative, q-lattices and the sup norm.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{QError, Result};
use crate::special::{check_q, SeriesControl};

/// A real function the operators act on.
///
/// Implemented for every `Fn(f64) -> f64`; wrap fallible closures in
/// [`Fallible`]. Implementations must be deterministic.
pub trait ScalarFunction {
    fn eval(&self, x: f64) -> Result<f64>;
}

impl<F: Fn(f64) -> f64> ScalarFunction for F {
    fn eval(&self, x: f64) -> Result<f64> {
        Ok(self(x))
    }
}

/// Adapter for closures returning `Result<f64>`.
pub struct Fallible<F>(pub F);

impl<F: Fn(f64) -> Result<f64>> ScalarFunction for Fallible<F> {
    fn eval(&self, x: f64) -> Result<f64> {
        (self.0)(x)
    }
}

/// The geometric node set `{b q^k : 0 <= k < depth, b q^k > floor_a}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLattice {
    pub b: f64,
    pub q: f64,
    pub depth: usize,
    pub floor_a: f64,
}

impl QLattice {
    pub fn new(b: f64, q: f64, depth: usize, floor_a: f64) -> Result<Self> {
        check_q(q)?;
        if !(b > 0.0 && b.is_finite()) {
            return Err(QError::domain(format!("lattice base must be positive, got {b}")));
        }
        if depth == 0 {
            return Err(QError::domain("lattice depth must be at least 1"));
        }
        if !(floor_a >= 0.0 && floor_a < b) {
            return Err(QError::domain(format!(
                "lattice floor must satisfy 0 <= a < b, got a={floor_a}, b={b}"
            )));
        }
        Ok(Self { b, q, depth, floor_a })
    }

    pub fn node(&self, k: usize) -> f64 {
        self.b * self.q.powi(k as i32)
    }

    /// Nodes in decreasing order, excluding those at or below the floor.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.depth)
            .map(|k| self.node(k))
            .take_while(|&x| x > self.floor_a)
            .collect()
    }
}

/// `D_q f(x) = (f(x) - f(qx)) / ((1 - q) x)`.
pub fn q_derivative<F: ScalarFunction + ?Sized>(f: &F, x: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    if !(x > 0.0) {
        return Err(QError::domain(format!("q_derivative requires x > 0, got {x}")));
    }
    Ok((f.eval(x)? - f.eval(q * x)?) / ((1.0 - q) * x))
}

/// `(1 - q) b Σ_i q^i g(i, b q^i)` with the series stopping rule applied to
/// the individual terms. `g` receives the node index alongside the node.
pub(crate) fn jackson_sum_indexed<G>(b: f64, q: f64, ctrl: &SeriesControl, mut g: G) -> Result<f64>
where
    G: FnMut(usize, f64) -> Result<f64>,
{
    if b == 0.0 {
        return Ok(0.0);
    }
    let scale = (1.0 - q) * b;
    let mut sum = 0.0;
    let mut small = 0;
    for i in 0..ctrl.max_terms {
        let weight = q.powi(i as i32);
        let node = b * weight;
        let value = g(i, node)?;
        let term = scale * weight * value;
        if !term.is_finite() {
            return Err(QError::NonFinite { node });
        }
        sum += term;
        if term.abs() < ctrl.abs_tol.max(ctrl.rel_tol * sum.abs()) {
            small += 1;
            if small >= ctrl.consecutive_small {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(QError::NonConvergence {
        what: "Jackson integral",
        terms: ctrl.max_terms,
    })
}

/// `∫_0^b f(x) d_q x = (1 - q) b Σ q^i f(q^i b)`.
pub fn jackson_integral_zero<F: ScalarFunction + ?Sized>(
    f: &F,
    b: f64,
    q: f64,
    ctrl: &SeriesControl,
) -> Result<f64> {
    check_q(q)?;
    if !(b >= 0.0 && b.is_finite()) {
        return Err(QError::domain(format!("Jackson upper limit must be >= 0, got {b}")));
    }
    jackson_sum_indexed(b, q, ctrl, |_, x| f.eval(x))
}

/// `∫_a^b f d_q x = ∫_0^b f d_q x - ∫_0^a f d_q x`.
pub fn jackson_integral<F: ScalarFunction + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    q: f64,
    ctrl: &SeriesControl,
) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(QError::domain(format!("Jackson lower limit must be >= 0, got {a}")));
    }
    if a == b {
        return Ok(0.0);
    }
    let upper = jackson_integral_zero(f, b, q, ctrl)?;
    let lower = if a > 0.0 {
        jackson_integral_zero(f, a, q, ctrl)?
    } else {
        0.0
    };
    Ok(upper - lower)
}

/// Maximum of `|f|` over the lattice nodes.
pub fn sup_norm<F: ScalarFunction + ?Sized>(f: &F, lattice: &QLattice) -> Result<f64> {
    lattice
        .nodes()
        .into_iter()
        .try_fold(0.0f64, |acc, x| Ok(acc.max(f.eval(x)?.abs())))
}

/// Caches a function's values on the lattice `{base q^j}`.
///
/// Points that are not lattice nodes (to 1e-10 relative) are evaluated
/// directly. Lattice nodes are evaluated at the canonical point `base q^j`.
pub struct LatticeMemo<'a, F: ?Sized> {
    inner: &'a F,
    base: f64,
    q: f64,
    cache: RefCell<HashMap<i64, f64>>,
}

impl<'a, F: ScalarFunction + ?Sized> LatticeMemo<'a, F> {
    pub fn new(inner: &'a F, base: f64, q: f64) -> Self {
        Self {
            inner,
            base,
            q,
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn lattice_index(&self, x: f64) -> Option<i64> {
        if !(x > 0.0) {
            return None;
        }
        let j = ((x / self.base).ln() / self.q.ln()).round();
        if !j.is_finite() || j.abs() > 1e6 {
            return None;
        }
        let j = j as i64;
        let node = self.base * self.q.powi(j as i32);
        ((x - node).abs() <= 1e-10 * x).then_some(j)
    }
}

impl<F: ScalarFunction + ?Sized> ScalarFunction for LatticeMemo<'_, F> {
    fn eval(&self, x: f64) -> Result<f64> {
        let Some(j) = self.lattice_index(x) else {
            return self.inner.eval(x);
        };
        if let Some(&v) = self.cache.borrow().get(&j) {
            return Ok(v);
        }
        let v = self.inner.eval(self.base * self.q.powi(j as i32))?;
        self.cache.borrow_mut().insert(j, v);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctrl() -> SeriesControl {
        SeriesControl::integration()
    }

    #[test]
    fn q_derivative_examples() {
        assert_eq!(q_derivative(&|_x: f64| 4.2, 1.0, 0.5).unwrap(), 0.0);
        assert!((q_derivative(&|x: f64| x * x, 2.0, 0.5).unwrap() - 3.0).abs() < 1e-15);
        assert!((q_derivative(&|x: f64| x * x * x, 1.0, 0.5).unwrap() - 1.75).abs() < 1e-15);
        assert!(q_derivative(&|x: f64| x, 0.0, 0.5).is_err());
    }

    #[test]
    fn jackson_zero_examples() {
        let one = jackson_integral_zero(&|_x: f64| 1.0, 1.0, 0.5, &ctrl()).unwrap();
        assert!((one - 1.0).abs() < 1e-13);
        // 200-term direct sum oracle for f(x) = x on [0, 1]
        let oracle: f64 = (0..200).map(|i| 0.5 * 0.5f64.powi(i) * 0.5f64.powi(i)).sum();
        let lin = jackson_integral_zero(&|x: f64| x, 1.0, 0.5, &ctrl()).unwrap();
        assert!((lin - oracle).abs() < 1e-13);
        assert!((lin - 2.0 / 3.0).abs() < 1e-13);
        let lin2 = jackson_integral_zero(&|x: f64| x, 2.0, 0.5, &ctrl()).unwrap();
        assert!((lin2 - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn jackson_interval_examples() {
        let f = |x: f64| x.sin();
        assert_eq!(jackson_integral(&f, 0.7, 0.7, 0.5, &ctrl()).unwrap(), 0.0);
        let c = jackson_integral(&|_x: f64| 1.0, 0.5, 1.0, 0.5, &ctrl()).unwrap();
        assert!((c - 0.5).abs() < 1e-13);
        let l = jackson_integral(&|x: f64| x, 1.0, 2.0, 0.5, &ctrl()).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jackson_non_convergence_and_non_finite() {
        let short = SeriesControl::new(1e-15, 1e-13, 5, 3).unwrap();
        assert!(matches!(
            jackson_integral_zero(&|_x: f64| 1.0, 1.0, 0.9, &short),
            Err(QError::NonConvergence { .. })
        ));
        let singular = |x: f64| if x < 0.1 { f64::NAN } else { 1.0 };
        assert!(matches!(
            jackson_integral_zero(&singular, 1.0, 0.5, &ctrl()),
            Err(QError::NonFinite { .. })
        ));
    }

    #[test]
    fn fundamental_theorem_for_polynomials() {
        let f = |x: f64| 3.0 * x.powi(4) - x * x + 2.0 * x + 5.0;
        for &q in &[0.3, 0.5, 0.9] {
            let dq = Fallible(|x: f64| q_derivative(&f, x, q));
            for &(a, b) in &[(0.0, 1.0), (0.2, 1.5), (0.5, 2.0)] {
                let lhs = jackson_integral(&dq, a, b, q, &ctrl()).unwrap();
                assert!((lhs - (f(b) - f(a))).abs() < 1e-9, "q={q} a={a} b={b}");
            }
        }
    }

    #[test]
    fn double_integral_interchange() {
        let q = 0.5;
        let g = |s: f64, v: f64| (s + 1.0) * v.cos() + s * s * v;
        let x = 1.3;
        let c = ctrl();
        let inner_sv = |v: f64| jackson_integral(&|s: f64| g(s, v), 0.0, v, q, &c).unwrap();
        let left = jackson_integral(&inner_sv, 0.0, x, q, &c).unwrap();
        let inner_vs = |s: f64| jackson_integral(&|v: f64| g(s, v), q * s, x, q, &c).unwrap();
        let right = jackson_integral(&inner_vs, 0.0, x, q, &c).unwrap();
        assert!((left - right).abs() <= 1e-8 * left.abs(), "{left} vs {right}");
    }

    #[test]
    fn linearity() {
        let f1 = |x: f64| x.exp();
        let f2 = |x: f64| x * x - 3.0;
        let combo = |x: f64| 2.5 * f1(x) - 0.75 * f2(x);
        let i1 = jackson_integral(&f1, 0.1, 1.7, 0.6, &ctrl()).unwrap();
        let i2 = jackson_integral(&f2, 0.1, 1.7, 0.6, &ctrl()).unwrap();
        let ic = jackson_integral(&combo, 0.1, 1.7, 0.6, &ctrl()).unwrap();
        let expected = 2.5 * i1 - 0.75 * i2;
        assert!((ic - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn doubling_max_terms_is_stable() {
        let f = |x: f64| 1.0 / (1.0 + x);
        let c = ctrl();
        let base = jackson_integral_zero(&f, 2.0, 0.9, &c).unwrap();
        let doubled = jackson_integral_zero(&f, 2.0, 0.9, &c.with_max_terms(2 * c.max_terms)).unwrap();
        assert!((base - doubled).abs() <= c.rel_tol * base.abs());
    }

    #[test]
    fn sup_norm_examples() {
        let lat = QLattice::new(1.0, 0.5, 10, 0.0).unwrap();
        assert_eq!(sup_norm(&|_x: f64| 0.0, &lat).unwrap(), 0.0);
        assert_eq!(sup_norm(&|x: f64| x, &lat).unwrap(), 1.0);
        let lat20 = QLattice::new(1.0, 0.5, 20, 0.0).unwrap();
        assert_eq!(sup_norm(&|x: f64| x * (1.0 - x), &lat20).unwrap(), 0.25);
    }

    #[test]
    fn lattice_respects_floor() {
        let lat = QLattice::new(1.0, 0.5, 10, 0.125).unwrap();
        assert_eq!(lat.nodes(), vec![1.0, 0.5, 0.25]);
        assert!(QLattice::new(1.0, 0.5, 0, 0.0).is_err());
        assert!(QLattice::new(1.0, 0.5, 3, 1.0).is_err());
    }

    #[test]
    fn memo_returns_same_values() {
        let calls = std::cell::Cell::new(0);
        let f = |x: f64| {
            calls.set(calls.get() + 1);
            x.ln()
        };
        let memo = LatticeMemo::new(&f, 1.0, 0.5);
        let a = memo.eval(0.25).unwrap();
        let b = memo.eval(1.0 * 0.5 * 0.5).unwrap();
        assert_eq!(a, b);
        assert_eq!(calls.get(), 1);
        assert_eq!(memo.eval(0.3).unwrap(), 0.3f64.ln());
    }
}
