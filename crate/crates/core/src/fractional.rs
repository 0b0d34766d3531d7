//! Generalized q-fractional integral, Riemann–Liouville-type and Caputo-type
//! q-fractional derivatives.
//!
//! With `Q = q^p` and lower limit `a`, the operators are
//!
//! ```text
//! J^α f(x)  = [p]^{1-α} / Γ_Q(α) · ∫_a^x w^{p-1} f(w) (x^p - (wq)^p)^(α-1) d_q w
//! D^α f(x)  = x^{1-p} D_q (J^{1-α} f)(x)
//! ᶜD^α f(x) = D^α (f - f(a))(x)
//!           = [p]^α / Γ_Q(1-α) · ∫_a^x (D_q f)(w) (x^p - (wq)^p)^(-α) d_q w
//! ```
//!
//! All integrals over `[a, x]` are the difference of two zero-based Jackson
//! sums. Derivatives are formed from the inner integral at `x` and `qx`.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{QError, Result};
use crate::jackson::{jackson_sum_indexed, Fallible, LatticeMemo, QLattice, ScalarFunction};
use crate::special::{q_gamma, q_num, q_power_general, QParams, SeriesControl};

/// Relative slack used when deciding whether a point sits on the lower limit.
const BOUNDARY_EPS: f64 = 1e-12;

/// Fractional order `α ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(QError::domain(format!("fractional order must lie in (0, 1), got {alpha}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Parameters shared by all operators: `(q, p)`, the lower limit `a` and
/// truncation controls for Jackson sums and infinite products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorContext {
    pub params: QParams,
    pub a: f64,
    pub ctrl: SeriesControl,
    pub products: SeriesControl,
}

impl OperatorContext {
    pub fn new(params: QParams, a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(QError::domain(format!("lower limit must be >= 0, got {a}")));
        }
        Ok(Self {
            params,
            a,
            ctrl: SeriesControl::integration(),
            products: SeriesControl::products(),
        })
    }

    pub fn with_controls(mut self, ctrl: SeriesControl, products: SeriesControl) -> Result<Self> {
        ctrl.validate()?;
        products.validate()?;
        self.ctrl = ctrl;
        self.products = products;
        Ok(self)
    }

    fn at_or_below_floor(&self, x: f64) -> bool {
        x <= self.a * (1.0 + BOUNDARY_EPS)
    }
}

/// Operator evaluator that caches the lattice kernels
/// `κ_i(β) = (1 - Q^{i+1})^(β)_Q` between calls.
///
/// Use one instance for a batch of related evaluations; the free functions
/// in this module build a fresh one per call.
pub struct FracOperators {
    ctx: OperatorContext,
    kernels: RefCell<HashMap<u64, Vec<f64>>>,
}

impl FracOperators {
    pub fn new(ctx: OperatorContext) -> Self {
        Self {
            ctx,
            kernels: RefCell::new(HashMap::new()),
        }
    }

    pub fn context(&self) -> &OperatorContext {
        &self.ctx
    }

    fn params(&self) -> &QParams {
        &self.ctx.params
    }

    /// `Γ_{q^p}(t)`.
    pub fn gamma(&self, t: f64) -> Result<f64> {
        q_gamma(t, self.params().qp(), &self.ctx.products)
    }

    /// Normalisation `[p]_q^{1-α} / Γ_{q^p}(α)` of `J^α`.
    pub fn integral_coefficient(&self, alpha: f64) -> Result<f64> {
        Ok(self.params().p_number().powf(1.0 - alpha) / self.gamma(alpha)?)
    }

    /// `(x^p - y^p)^(β)_{q^p}` with this context's controls.
    pub fn q_power(&self, x: f64, y: f64, beta: f64) -> Result<f64> {
        q_power_general(x, y, beta, self.params(), &self.ctx.products)
    }

    pub(crate) fn lattice_kernel(&self, beta: f64, i: usize) -> Result<f64> {
        let key = beta.to_bits();
        if let Some(&v) = self.kernels.borrow().get(&key).and_then(|t| t.get(i)) {
            return Ok(v);
        }
        let mut kernels = self.kernels.borrow_mut();
        let table = kernels.entry(key).or_default();
        let q = self.params().q();
        while table.len() <= i {
            let j = table.len() as i32;
            table.push(q_power_general(
                1.0,
                q.powi(j + 1),
                beta,
                self.params(),
                &self.ctx.products,
            )?);
        }
        Ok(table[i])
    }

    /// `∫_a^x w^{p-1} f(w) (x^p - (wq)^p)^(β)_{q^p} d_q w`.
    ///
    /// On the upper sum the nodes are `w = x q^i`, so the kernel is
    /// `x^{pβ} κ_i(β)`; the lower sum (nodes `a q^i`) evaluates the kernel
    /// directly.
    pub fn kernel_integral<F: ScalarFunction + ?Sized>(&self, f: &F, x: f64, beta: f64) -> Result<f64> {
        self.kernel_integral_with(f, x, beta, &self.ctx.ctrl)
    }

    fn kernel_integral_with<F: ScalarFunction + ?Sized>(
        &self,
        f: &F,
        x: f64,
        beta: f64,
        ctrl: &SeriesControl,
    ) -> Result<f64> {
        let p = self.params().p();
        let q = self.params().q();
        let upper = jackson_sum_indexed(x, q, ctrl, |i, w| {
            let fw = f.eval(w)?;
            if fw == 0.0 {
                return Ok(0.0);
            }
            Ok(w.powf(p - 1.0) * fw * self.lattice_kernel(beta, i)?)
        })? * x.powf(p * beta);
        let lower = if self.ctx.a > 0.0 {
            jackson_sum_indexed(self.ctx.a, q, ctrl, |_, w| {
                let fw = f.eval(w)?;
                if fw == 0.0 {
                    return Ok(0.0);
                }
                Ok(w.powf(p - 1.0) * fw * self.q_power(x, w * q, beta)?)
            })?
        } else {
            0.0
        };
        Ok(upper - lower)
    }

    /// `J^α f(x)` for any order `α > 0`.
    pub fn integral_of_order<F: ScalarFunction + ?Sized>(&self, f: &F, x: f64, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(QError::domain(format!("integral order must be positive, got {alpha}")));
        }
        if !(x > self.ctx.a) {
            return Err(QError::domain(format!(
                "fractional integral requires x > a, got x={x}, a={}",
                self.ctx.a
            )));
        }
        Ok(self.integral_coefficient(alpha)? * self.kernel_integral(f, x, alpha - 1.0)?)
    }

    pub fn integral<F: ScalarFunction + ?Sized>(&self, f: &F, x: f64, order: FracOrder) -> Result<f64> {
        self.integral_of_order(f, x, order.value())
    }

    /// `x^{1-p} D_q` applied to `y ↦ inner(y)` at `x`, where `inner` vanishes
    /// at the lower limit. Requires `qx >= a`.
    ///
    /// `inner` receives a control whose absolute tolerance is shrunk by the
    /// stencil factor `(1 - q) x^p`, so the absolute tolerance applies to the
    /// derivative rather than to the two integrals.
    fn outer_difference<G>(&self, x: f64, inner: G) -> Result<f64>
    where
        G: Fn(f64, &SeriesControl) -> Result<f64>,
    {
        let a = self.ctx.a;
        let q = self.params().q();
        if !(x > a) {
            return Err(QError::domain(format!("derivative requires x > a, got x={x}, a={a}")));
        }
        let qx = q * x;
        if qx < a * (1.0 - BOUNDARY_EPS) {
            return Err(QError::domain(format!(
                "q-difference stencil leaves the domain: qx={qx} < a={a}"
            )));
        }
        let mut ctrl = self.ctx.ctrl;
        ctrl.abs_tol *= ((1.0 - q) * x.powf(self.params().p())).min(1.0);
        let at_x = inner(x, &ctrl)?;
        let at_qx = if self.ctx.at_or_below_floor(qx) { 0.0 } else { inner(qx, &ctrl)? };
        Ok(x.powf(1.0 - self.params().p()) * (at_x - at_qx) / ((1.0 - q) * x))
    }

    /// Riemann–Liouville-type derivative `D^α f(x) = x^{1-p} D_q (J^{1-α} f)(x)`.
    pub fn rl_derivative<F: ScalarFunction + ?Sized>(&self, f: &F, x: f64, order: FracOrder) -> Result<f64> {
        let alpha = order.value();
        let coeff = self.integral_coefficient(1.0 - alpha)?;
        Ok(coeff * self.outer_difference(x, |y, ctrl| self.kernel_integral_with(f, y, -alpha, ctrl))?)
    }

    /// Caputo-type derivative: `D^α` applied to `f - f(a)`.
    pub fn caputo<F: ScalarFunction + ?Sized>(&self, f: &F, x: f64, order: FracOrder) -> Result<f64> {
        let fa = f.eval(self.ctx.a)?;
        let shifted = Fallible(|w: f64| Ok(f.eval(w)? - fa));
        self.rl_derivative(&shifted, x, order)
    }

    /// Caputo derivative in integral form,
    /// `[p]^α / Γ_Q(1-α) ∫_a^x (D_q f)(w) (x^p - (wq)^p)^(-α) d_q w`,
    /// where `dqf` is the q-derivative of `f`.
    pub fn caputo_simplified<F: ScalarFunction + ?Sized>(&self, dqf: &F, x: f64, order: FracOrder) -> Result<f64> {
        if !(x > self.ctx.a) {
            return Err(QError::domain(format!(
                "derivative requires x > a, got x={x}, a={}",
                self.ctx.a
            )));
        }
        let alpha = order.value();
        let p = self.params().p();
        let weighted = Fallible(|w: f64| Ok(w.powf(1.0 - p) * dqf.eval(w)?));
        Ok(self.integral_coefficient(1.0 - alpha)? * self.kernel_integral(&weighted, x, -alpha)?)
    }

    /// Caputo derivative through the Riemann–Liouville operator of order
    /// `α - 1`: `x^{1-p} D_q J^{2-α}(w^{1-p} D_q f)(x)`.
    pub fn caputo_corollary<F: ScalarFunction + ?Sized>(&self, dqf: &F, x: f64, order: FracOrder) -> Result<f64> {
        let alpha = order.value();
        let p = self.params().p();
        let weighted = Fallible(|w: f64| Ok(w.powf(1.0 - p) * dqf.eval(w)?));
        let coeff = self.integral_coefficient(2.0 - alpha)?;
        Ok(coeff * self.outer_difference(x, |y, ctrl| self.kernel_integral_with(&weighted, y, 1.0 - alpha, ctrl))?)
    }

    /// `D^α f(x) - ᶜD^α f(x) - f(a) [p]^α / Γ_Q(1-α) (x^p - a^p)^(-α)`; zero
    /// when the two derivative types are consistent.
    pub fn caputo_rl_relation_residual<F: ScalarFunction + ?Sized>(
        &self,
        f: &F,
        x: f64,
        order: FracOrder,
    ) -> Result<f64> {
        let alpha = order.value();
        let rl = self.rl_derivative(f, x, order)?;
        let caputo = self.caputo(f, x, order)?;
        let fa = f.eval(self.ctx.a)?;
        let correction = fa * self.integral_coefficient(1.0 - alpha)? * self.q_power(x, self.ctx.a, -alpha)?;
        Ok(rl - caputo - correction)
    }

    /// Operator-norm bound of `J^α` on `C_q[a, b]`:
    /// `[p]^{1-α} / ([pα]_q Γ_Q(α)) · max_lattice |(x^p - a^p)^(α)|`.
    pub fn bound_constant(&self, order: FracOrder, b: f64) -> Result<f64> {
        let a = self.ctx.a;
        if !(b > a) {
            return Err(QError::domain(format!("bound requires b > a, got b={b}, a={a}")));
        }
        let alpha = order.value();
        let p = self.params().p();
        let q = self.params().q();
        let coeff = self.params().p_number().powf(1.0 - alpha) / (q_num(p * alpha, q) * self.gamma(alpha)?);
        let mut best = 0.0f64;
        for k in 0..self.ctx.ctrl.max_terms {
            let node = b * q.powi(k as i32);
            if node <= a {
                break;
            }
            best = best.max(self.q_power(node, a, alpha)?.abs());
            if a == 0.0 {
                // x^{pα} is decreasing along the lattice
                break;
            }
        }
        Ok(coeff * best)
    }

    /// `(max |ᶜD^α J^α f - f|, max |J^α ᶜD^α f - (f - f(a))|)` over the
    /// lattice nodes `x` with `qx >= a`.
    ///
    /// For `a > 0` the identities hold when `a` lies on the lattice.
    pub fn inversion_residuals<F: ScalarFunction + ?Sized>(
        &self,
        f: &F,
        lattice: &QLattice,
        order: FracOrder,
    ) -> Result<(f64, f64)> {
        let a = self.ctx.a;
        let q = self.params().q();
        let nodes: Vec<f64> = lattice
            .nodes()
            .into_iter()
            .filter(|&x| x > a && q * x >= a * (1.0 - BOUNDARY_EPS))
            .collect();
        let fa = f.eval(a)?;

        let integrated = Fallible(|w: f64| {
            if self.ctx.at_or_below_floor(w) {
                Ok(0.0)
            } else {
                self.integral(f, w, order)
            }
        });
        let integrated = LatticeMemo::new(&integrated, lattice.b, q);
        let mut first = 0.0f64;
        for &x in &nodes {
            let back = self.caputo(&integrated, x, order)?;
            first = first.max((back - f.eval(x)?).abs());
        }

        let derived = Fallible(|w: f64| {
            if self.ctx.at_or_below_floor(w) {
                Ok(0.0)
            } else {
                self.caputo(f, w, order)
            }
        });
        let derived = LatticeMemo::new(&derived, lattice.b, q);
        let mut second = 0.0f64;
        for &x in &nodes {
            let back = self.integral(&derived, x, order)?;
            second = second.max((back - (f.eval(x)? - fa)).abs());
        }
        Ok((first, second))
    }
}

pub fn frac_integral<F: ScalarFunction + ?Sized>(f: &F, x: f64, order: FracOrder, ctx: &OperatorContext) -> Result<f64> {
    FracOperators::new(*ctx).integral(f, x, order)
}

pub fn frac_derivative_rl<F: ScalarFunction + ?Sized>(
    f: &F,
    x: f64,
    order: FracOrder,
    ctx: &OperatorContext,
) -> Result<f64> {
    FracOperators::new(*ctx).rl_derivative(f, x, order)
}

pub fn caputo_derivative<F: ScalarFunction + ?Sized>(
    f: &F,
    x: f64,
    order: FracOrder,
    ctx: &OperatorContext,
) -> Result<f64> {
    FracOperators::new(*ctx).caputo(f, x, order)
}

pub fn caputo_derivative_simplified<F: ScalarFunction + ?Sized>(
    dqf: &F,
    x: f64,
    order: FracOrder,
    ctx: &OperatorContext,
) -> Result<f64> {
    FracOperators::new(*ctx).caputo_simplified(dqf, x, order)
}

pub fn caputo_rl_relation_residual<F: ScalarFunction + ?Sized>(
    f: &F,
    x: f64,
    order: FracOrder,
    ctx: &OperatorContext,
) -> Result<f64> {
    FracOperators::new(*ctx).caputo_rl_relation_residual(f, x, order)
}

pub fn bound_constant(order: FracOrder, ctx: &OperatorContext, b: f64) -> Result<f64> {
    FracOperators::new(*ctx).bound_constant(order, b)
}

pub fn inversion_residuals<F: ScalarFunction + ?Sized>(
    f: &F,
    lattice: &QLattice,
    order: FracOrder,
    ctx: &OperatorContext,
) -> Result<(f64, f64)> {
    FracOperators::new(*ctx).inversion_residuals(f, lattice, order)
}

/// Closed form of the beta-type q-integral
///
/// ```text
/// ∫_a^x t^{p-1} (x^p - (qt)^p)^(α-1) (t^p - a^p)^(λ) d_q t
///     = 1/[p]_q · Γ_Q(α) Γ_Q(λ+1) / Γ_Q(α+λ+1) · (x^p - a^p)^(α+λ)
/// ```
///
/// for `α > 0`, `λ > -1`, `x >= a >= 0`.
pub fn lemma_beta_integral(
    a: f64,
    x: f64,
    alpha: f64,
    lambda: f64,
    params: &QParams,
    ctrl: &SeriesControl,
) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(QError::domain(format!("lemma requires alpha > 0, got {alpha}")));
    }
    if !(lambda > -1.0) {
        return Err(QError::domain(format!("lemma requires lambda > -1, got {lambda}")));
    }
    if !(a >= 0.0 && x >= a) {
        return Err(QError::domain(format!("lemma requires x >= a >= 0, got x={x}, a={a}")));
    }
    let base = params.qp();
    let gammas = q_gamma(alpha, base, ctrl)? * q_gamma(lambda + 1.0, base, ctrl)?
        / q_gamma(alpha + lambda + 1.0, base, ctrl)?;
    let power = if x == a {
        0.0
    } else {
        q_power_general(x, a, alpha + lambda, params, ctrl)?
    };
    Ok(gammas * power / params.p_number())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jackson::{jackson_integral, q_derivative};

    fn ctx(q: f64, p: f64, a: f64) -> OperatorContext {
        OperatorContext::new(QParams::new(q, p).unwrap(), a).unwrap()
    }

    fn order(alpha: f64) -> FracOrder {
        FracOrder::new(alpha).unwrap()
    }

    fn gq(t: f64, base: f64) -> f64 {
        q_gamma(t, base, &SeriesControl::products()).unwrap()
    }

    #[test]
    fn order_validation() {
        assert!(FracOrder::new(0.0).is_err());
        assert!(FracOrder::new(1.0).is_err());
        assert!(FracOrder::new(0.3).is_ok());
    }

    #[test]
    fn integral_of_one() {
        for &(q, p, alpha) in &[(0.5, 1.0, 0.5), (0.3, 2.0, 0.25), (0.9, 1.5, 0.75)] {
            let c = ctx(q, p, 0.0);
            let base = c.params.qp();
            for &x in &[1.0, 0.5, 2.0] {
                let got = frac_integral(&|_w: f64| 1.0, x, order(alpha), &c).unwrap();
                let expected = c.params.p_number().powf(-alpha) / gq(alpha + 1.0, base) * x.powf(p * alpha);
                assert!((got - expected).abs() <= 1e-11 * expected, "{got} vs {expected}");
            }
        }
    }

    #[test]
    fn integral_of_zero_and_domain() {
        let c = ctx(0.5, 1.0, 0.2);
        assert_eq!(frac_integral(&|_w: f64| 0.0, 1.0, order(0.4), &c).unwrap(), 0.0);
        assert!(frac_integral(&|_w: f64| 1.0, 0.2, order(0.4), &c).is_err());
    }

    #[test]
    fn integral_of_q_power_matches_lemma() {
        let (q, p, alpha, lambda, x) = (0.5, 2.0, 0.5, 0.5, 1.0);
        let c = ctx(q, p, 0.0);
        let ops = FracOperators::new(c);
        let f = Fallible(|w: f64| ops.q_power(w, 0.0, lambda));
        let got = ops.integral(&f, x, order(alpha)).unwrap();
        let base = c.params.qp();
        let expected = c.params.p_number().powf(-alpha) * gq(lambda + 1.0, base) / gq(alpha + lambda + 1.0, base)
            * ops.q_power(x, 0.0, alpha + lambda).unwrap();
        assert!((got - expected).abs() <= 1e-11 * expected);
    }

    #[test]
    fn lemma_examples() {
        let unit = QParams::new(0.5, 1.0).unwrap();
        let prod = SeriesControl::products();
        for &x in &[0.5, 1.0, 3.0] {
            let v = lemma_beta_integral(0.0, x, 1.0, 0.0, &unit, &prod).unwrap();
            assert!((v - x).abs() < 1e-13 * x);
        }
        let closed = lemma_beta_integral(0.0, 1.0, 0.5, 0.0, &unit, &prod).unwrap();
        let expected = gq(0.5, 0.5) * gq(1.0, 0.5) / gq(1.5, 0.5);
        assert!((closed - expected).abs() < 1e-14);
        let params = unit;
        let numeric = jackson_integral(
            &Fallible(|t: f64| q_power_general(1.0, 0.5 * t, -0.5, &params, &prod)),
            0.0,
            1.0,
            0.5,
            &SeriesControl::integration(),
        )
        .unwrap();
        assert!((numeric - closed).abs() < 1e-9);
        assert_eq!(lemma_beta_integral(0.7, 0.7, 0.5, 0.5, &unit, &prod).unwrap(), 0.0);
        assert!(lemma_beta_integral(0.0, 1.0, 0.5, -1.0, &unit, &prod).is_err());
    }

    #[test]
    fn rl_derivative_of_constant() {
        // D^α 1 = [p]^α / Γ_Q(1-α) x^{-pα}
        for &(q, p, alpha) in &[(0.5, 1.0, 0.5), (0.3, 2.0, 0.25)] {
            let c = ctx(q, p, 0.0);
            let x = 0.75;
            let got = frac_derivative_rl(&|_w: f64| 1.0, x, order(alpha), &c).unwrap();
            let expected = c.params.p_number().powf(alpha) / gq(1.0 - alpha, c.params.qp()) * x.powf(-p * alpha);
            assert!((got - expected).abs() <= 1e-11 * expected, "{got} vs {expected}");
        }
    }

    #[test]
    fn rl_derivative_of_power() {
        // D^α x^{pλ} = [p]^α Γ_Q(λ+1) / Γ_Q(λ+1-α) x^{p(λ-α)}
        let (q, p, alpha, lambda) = (0.5, 2.0, 0.3, 0.8);
        let c = ctx(q, p, 0.0);
        let x = 1.2;
        let got = frac_derivative_rl(&|w: f64| w.powf(p * lambda), x, order(alpha), &c).unwrap();
        let base = c.params.qp();
        let expected = c.params.p_number().powf(alpha) * gq(lambda + 1.0, base) / gq(lambda + 1.0 - alpha, base)
            * x.powf(p * (lambda - alpha));
        assert!((got - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn rl_stencil_domain() {
        let c = ctx(0.5, 1.0, 0.4);
        assert!(frac_derivative_rl(&|w: f64| w, 0.6, order(0.5), &c).is_err());
        assert!(frac_derivative_rl(&|w: f64| w, 0.8, order(0.5), &c).is_ok());
    }

    #[test]
    fn caputo_examples() {
        let c = ctx(0.5, 1.0, 0.25);
        assert_eq!(caputo_derivative(&|_w: f64| 3.0, 1.0, order(0.5), &c).unwrap(), 0.0);
        let simplified = caputo_derivative_simplified(&|_w: f64| 0.0, 1.0, order(0.5), &c).unwrap();
        assert_eq!(simplified, 0.0);
        // f(w) = w, a = 0, p = 1: Γ_q(2) / Γ_q(2-α) x^{1-α}
        let c0 = ctx(0.5, 1.0, 0.0);
        let x: f64 = 0.8;
        let expected = gq(2.0, 0.5) / gq(1.5, 0.5) * x.powf(0.5);
        let direct = caputo_derivative(&|w: f64| w, x, order(0.5), &c0).unwrap();
        let simple = caputo_derivative_simplified(&|_w: f64| 1.0, x, order(0.5), &c0).unwrap();
        assert!((direct - expected).abs() < 1e-12);
        assert!((simple - expected).abs() < 1e-12);
    }

    #[test]
    fn caputo_of_integral_recovers_function() {
        let c = ctx(0.5, 1.0, 0.0);
        let ops = FracOperators::new(c);
        let g = |w: f64| 1.0 + w * w;
        let jg = Fallible(|w: f64| if w <= 0.0 { Ok(0.0) } else { ops.integral(&g, w, order(0.5)) });
        let back = ops.caputo(&jg, 0.5, order(0.5)).unwrap();
        assert!((back - g(0.5)).abs() < 1e-10);
    }

    #[test]
    fn unshifted_kernel_disagrees() {
        // The kernel (x^p - w^p)^(-α) (no q shift) scales monomials by Q^λ.
        let (q, p, alpha, k) = (0.5, 2.0, 0.5, 2);
        let c = ctx(q, p, 0.0);
        let ops = FracOperators::new(c);
        let x = 1.0;
        let dqf = |w: f64| q_num(f64::from(k), q) * w.powi(k - 1);
        let shifted = ops.caputo_simplified(&dqf, x, order(alpha)).unwrap();
        let unshifted = ops.integral_coefficient(1.0 - alpha).unwrap()
            * jackson_integral(
                &Fallible(|w: f64| Ok(dqf(w) * ops.q_power(x, w, -alpha)?)),
                0.0,
                x,
                q,
                &SeriesControl::integration(),
            )
            .unwrap();
        let lambda = f64::from(k) / p;
        assert!((unshifted - shifted * c.params.qp().powf(lambda)).abs() < 1e-12);
        assert!((unshifted - shifted).abs() > 0.1);
    }

    #[test]
    fn caputo_forms_agree_with_positive_lower_limit() {
        let c = ctx(0.5, 1.5, 0.3);
        let ops = FracOperators::new(c);
        let f = |w: f64| w.powi(3) - 2.0 * w;
        let dqf = |w: f64| q_derivative(&f, w, 0.5).unwrap();
        for &x in &[1.0, 0.8, 0.65] {
            let d = ops.caputo(&f, x, order(0.4)).unwrap();
            let s = ops.caputo_simplified(&dqf, x, order(0.4)).unwrap();
            let r = ops.caputo_corollary(&dqf, x, order(0.4)).unwrap();
            assert!((d - s).abs() < 1e-10, "{d} vs {s}");
            assert!((d - r).abs() < 1e-10, "{d} vs {r}");
        }
    }

    #[test]
    fn relation_residual_vanishes() {
        let f = |w: f64| w;
        let c = ctx(0.5, 1.0, 0.25);
        assert!(caputo_rl_relation_residual(&f, 1.0, order(0.5), &c).unwrap().abs() < 1e-8);
        let c0 = ctx(0.5, 1.0, 0.0);
        assert!(caputo_rl_relation_residual(&f, 1.0, order(0.5), &c0).unwrap().abs() < 1e-12);
        let constant = |_w: f64| 2.0;
        assert!(caputo_rl_relation_residual(&constant, 0.9, order(0.3), &c).unwrap().abs() < 1e-10);
    }

    #[test]
    fn bound_constant_examples() {
        let c = ctx(0.5, 1.0, 0.0);
        for &alpha in &[0.25, 0.5, 0.75] {
            let got = bound_constant(order(alpha), &c, 1.0).unwrap();
            let expected = 1.0 / gq(alpha + 1.0, 0.5);
            assert!((got - expected).abs() < 1e-13);
        }
        let c2 = ctx(0.5, 2.0, 0.0);
        let v = bound_constant(order(0.5), &c2, 1.0).unwrap();
        // lattice enumeration oracle
        let p_num = q_num(2.0, 0.5);
        let enumerated = (0..40)
            .map(|k| 0.5f64.powi(k).powf(2.0 * 0.5))
            .fold(0.0, f64::max)
            * p_num.powf(0.5)
            / (q_num(1.0, 0.5) * gq(0.5, 0.25));
        assert!(v.is_finite() && v > 0.0);
        assert!((v - enumerated).abs() < 1e-13);
        let ca = ctx(0.5, 1.0, 0.1);
        let small = bound_constant(order(0.5), &ca, 0.5).unwrap();
        let large = bound_constant(order(0.5), &ca, 2.0).unwrap();
        assert!(small <= large);
    }

    #[test]
    fn inversion_examples() {
        let lattice = QLattice::new(1.0, 0.5, 12, 0.0).unwrap();
        let c = ctx(0.5, 1.0, 0.0);
        let (r1, r2) = inversion_residuals(&|_w: f64| 0.0, &lattice, order(0.5), &c).unwrap();
        assert_eq!((r1, r2), (0.0, 0.0));
        let (r1, r2) = inversion_residuals(&|_w: f64| 2.5, &lattice, order(0.5), &c).unwrap();
        assert!(r1 < 1e-10 && r2 < 1e-12);
        let (r1, r2) = inversion_residuals(&|w: f64| w * w, &lattice, order(0.5), &c).unwrap();
        assert!(r1 < 1e-7 && r2 < 1e-7, "{r1} {r2}");
    }

    #[test]
    fn inversion_with_lower_limit_on_lattice() {
        let q: f64 = 0.5;
        let a = q.powi(5);
        let lattice = QLattice::new(1.0, q, 12, a).unwrap();
        let c = ctx(q, 1.0, a);
        let (r1, r2) = inversion_residuals(&|w: f64| 1.0 + w * w, &lattice, order(0.5), &c).unwrap();
        assert!(r1 < 1e-7 && r2 < 1e-7, "{r1} {r2}");
    }
}
