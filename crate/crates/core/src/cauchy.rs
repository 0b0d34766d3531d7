//! Successive approximations for the Caputo q-fractional Cauchy problem
//!
//! ```text
//! ᶜD^α u(t) = f(t, u(t)),  a < t < b,   u(a) = ζ
//! ```
//!
//! through its integral form `u = ζ + J^α f(·, u)`. Iterates live on the
//! q-lattice `{b q^k} ∩ (a, b]`, which is closed under `t ↦ qt` down to the
//! floor, so every Jackson node of the integral at a lattice point is itself
//! a lattice point. Below the floor (or below the deepest tabulated node when
//! `a = 0`) iterates are extended by the constant `ζ`.

use crate::error::{QError, Result};
use crate::fractional::{FracOperators, FracOrder, OperatorContext};
use crate::jackson::{jackson_sum_indexed, QLattice};
use crate::special::{q_gamma, q_num, QParams, SeriesControl};

/// Kernel weight below which nodes of the `a = 0` table are dropped.
const TABLE_CUTOFF: f64 = 1e-18;

/// The initial value problem `ᶜD^α u = f(t, u)`, `u(a) = ζ`, with the
/// trust region `|u - ζ| <= r` and an optional Lipschitz constant.
#[derive(Debug, Clone)]
pub struct CauchyProblem<R> {
    pub rhs: R,
    pub a: f64,
    pub b: f64,
    pub zeta: f64,
    pub order: FracOrder,
    pub params: QParams,
    pub lipschitz_a: Option<f64>,
    pub radius: f64,
}

impl<R> CauchyProblem<R>
where
    R: Fn(f64, f64) -> Result<f64>,
{
    pub fn new(rhs: R, a: f64, b: f64, zeta: f64, order: FracOrder, params: QParams, radius: f64) -> Result<Self> {
        if !(a >= 0.0 && a < b && b.is_finite()) {
            return Err(QError::domain(format!("need 0 <= a < b < inf, got a={a}, b={b}")));
        }
        if !zeta.is_finite() {
            return Err(QError::domain("initial value must be finite"));
        }
        if !(radius > 0.0) {
            return Err(QError::domain(format!("trust radius must be positive, got {radius}")));
        }
        Ok(Self {
            rhs,
            a,
            b,
            zeta,
            order,
            params,
            lipschitz_a: None,
            radius,
        })
    }

    pub fn with_lipschitz(mut self, constant: f64) -> Result<Self> {
        if !(constant > 0.0 && constant.is_finite()) {
            return Err(QError::domain(format!("Lipschitz constant must be positive, got {constant}")));
        }
        self.lipschitz_a = Some(constant);
        Ok(self)
    }

    fn eval_rhs(&self, t: f64, u: f64) -> Result<f64> {
        let v = (self.rhs)(t, u)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QError::NonFinite { node: t })
        }
    }

    fn operator_context(&self, ctrl: &SeriesControl) -> Result<OperatorContext> {
        OperatorContext::new(self.params, self.a)?.with_controls(*ctrl, SeriesControl::products())
    }
}

/// Everything the solver measured, in iteration order.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub lattice: QLattice,
    /// Reported nodes, decreasing; the initial point `a` is not included.
    pub nodes: Vec<f64>,
    /// `iterates[n]` holds φ_{n+1} on `nodes` (φ₁ ≡ starting value).
    pub iterates: Vec<Vec<f64>>,
    /// `residuals[n-1] = max |φ_{n+1} - φ_n|` over the full node table.
    pub residuals: Vec<f64>,
    /// `apriori_bounds[n-1]` is the convergence bound for step `n` at `t = b`.
    pub apriori_bounds: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    pub k_estimate: f64,
    pub lipschitz_a: f64,
    pub lipschitz_estimated: bool,
    /// `max(0, max_n residual_n / bound_n - 1)`.
    pub bound_slack: f64,
    /// `max |ζ + J^α f(·, u) - u|` for the final iterate.
    pub fixed_point_defect: f64,
}

impl SolverReport {
    pub fn solution(&self) -> &[f64] {
        self.iterates.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Precomputed node table and Jackson weights for one problem.
pub struct PicardSolver<'p, R> {
    problem: &'p CauchyProblem<R>,
    lattice: QLattice,
    ctrl: SeriesControl,
    nodes: Vec<f64>,
    reported: usize,
    coefficient: f64,
    /// `(1 - q) q^{ip} κ_i(α - 1)`
    weights: Vec<f64>,
    /// `t^{pα}` per node
    scales: Vec<f64>,
    /// Contribution of nodes outside the table (φ ≡ ζ there), per node.
    fixed: Vec<f64>,
}

impl<'p, R> PicardSolver<'p, R>
where
    R: Fn(f64, f64) -> Result<f64>,
{
    pub fn new(problem: &'p CauchyProblem<R>, lattice: &QLattice, ctrl: &SeriesControl) -> Result<Self> {
        ctrl.validate()?;
        let q = problem.params.q();
        let p = problem.params.p();
        if (lattice.b - problem.b).abs() > 1e-12 * problem.b
            || (lattice.floor_a - problem.a).abs() > 1e-12 * problem.b.max(1.0)
            || (lattice.q - q).abs() > 1e-15
        {
            return Err(QError::domain("lattice must have base b, floor a and the problem's q"));
        }
        let alpha = problem.order.value();
        let ctx = problem.operator_context(ctrl)?;
        let ops = FracOperators::new(ctx);

        let a = problem.a;
        let above_floor = |x: f64| x > a * (1.0 + 1e-12);
        let table_len = if a > 0.0 {
            (0..ctrl.max_terms)
                .take_while(|&k| above_floor(lattice.node(k)))
                .count()
        } else {
            let needed = (TABLE_CUTOFF.ln() / problem.params.qp().ln()).ceil() as usize;
            needed.max(lattice.depth).min(ctrl.max_terms)
        };
        if table_len == 0 {
            return Err(QError::domain("lattice has no nodes above the initial point"));
        }
        let nodes: Vec<f64> = (0..table_len).map(|k| lattice.node(k)).collect();
        let reported = lattice.depth.min(table_len);

        let weights = (0..table_len)
            .map(|i| Ok((1.0 - q) * q.powf(i as f64 * p) * ops.lattice_kernel(alpha - 1.0, i)?))
            .collect::<Result<Vec<_>>>()?;
        let scales: Vec<f64> = nodes.iter().map(|t| t.powf(p * alpha)).collect();

        let zeta = problem.zeta;
        let fixed = nodes
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                // nodes t q^i with k + i >= table_len
                let start = table_len - k;
                let tail_base = t * q.powi(start as i32);
                let tail = jackson_sum_indexed(tail_base, q, ctrl, |j, w| {
                    let fw = problem.eval_rhs(w, zeta)?;
                    Ok(w.powf(p - 1.0) * fw * ops.lattice_kernel(alpha - 1.0, start + j)?)
                })? * t.powf(p * (alpha - 1.0));
                let below_a = if a > 0.0 {
                    jackson_sum_indexed(a, q, ctrl, |_, w| {
                        let fw = problem.eval_rhs(w, zeta)?;
                        Ok(w.powf(p - 1.0) * fw * ops.q_power(t, w * q, alpha - 1.0)?)
                    })?
                } else {
                    0.0
                };
                Ok(tail - below_a)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            problem,
            lattice: *lattice,
            ctrl: *ctrl,
            coefficient: ops.integral_coefficient(alpha)?,
            nodes,
            reported,
            weights,
            scales,
            fixed,
        })
    }

    /// All tabulated nodes (decreasing), including those below the reported depth.
    pub fn table_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn reported_nodes(&self) -> &[f64] {
        &self.nodes[..self.reported]
    }

    /// One successive approximation:
    /// `φ_n(t) = ζ + [p]^{1-α}/Γ_Q(α) ∫_a^t w^{p-1} f(w, φ_{n-1}(w)) (t^p - (wq)^p)^(α-1) d_q w`.
    pub fn iterate(&self, prev: &[f64]) -> Result<Vec<f64>> {
        if prev.len() != self.nodes.len() {
            return Err(QError::domain(format!(
                "iterate needs {} node values, got {}",
                self.nodes.len(),
                prev.len()
            )));
        }
        let zeta = self.problem.zeta;
        let radius = self.problem.radius;
        let values = self
            .nodes
            .iter()
            .zip(prev)
            .map(|(&t, &u)| {
                if (u - zeta).abs() > radius {
                    return Err(QError::TrustRegion {
                        node: t,
                        value: u,
                        zeta,
                        radius,
                    });
                }
                self.problem.eval_rhs(t, u)
            })
            .collect::<Result<Vec<_>>>()?;

        let n = self.nodes.len();
        Ok((0..n)
            .map(|k| {
                let inner: f64 = self.weights[..n - k]
                    .iter()
                    .zip(&values[k..])
                    .map(|(w, v)| w * v)
                    .sum();
                zeta + self.coefficient * (self.scales[k] * inner + self.fixed[k])
            })
            .collect())
    }

    pub fn solve(&self, tol: f64, max_iter: usize) -> Result<SolverReport> {
        self.solve_from(self.problem.zeta, tol, max_iter)
    }

    /// Iterates from the constant start `φ₁ ≡ start` until the sup-norm of
    /// successive differences drops below `tol` or `max_iter` steps ran.
    pub fn solve_from(&self, start: f64, tol: f64, max_iter: usize) -> Result<SolverReport> {
        if !(tol > 0.0) {
            return Err(QError::domain(format!("solver tolerance must be positive, got {tol}")));
        }
        if max_iter == 0 {
            return Err(QError::domain("max_iter must be at least 1"));
        }
        let problem = self.problem;
        let k_estimate = estimate_sup_rhs(problem, self.reported_nodes(), 21)?;
        let (lipschitz_a, lipschitz_estimated) = match problem.lipschitz_a {
            Some(constant) => (constant, false),
            None => (estimate_lipschitz(problem, 21)?, true),
        };
        let ops = FracOperators::new(problem.operator_context(&self.ctrl)?);
        let growth = bound_growth(&ops, problem, problem.b)?;

        let mut current = vec![start; self.nodes.len()];
        let mut iterates = vec![current[..self.reported].to_vec()];
        let mut residuals = Vec::new();
        let mut apriori_bounds = Vec::new();
        let mut converged = false;
        for step in 1..=max_iter {
            let next = self.iterate(&current)?;
            let residual = sup_diff(&next, &current);
            residuals.push(residual);
            apriori_bounds.push(bound_from_growth(growth, step, lipschitz_a, k_estimate));
            iterates.push(next[..self.reported].to_vec());
            current = next;
            if residual < tol {
                converged = true;
                break;
            }
        }
        let fixed_point_defect = sup_diff(&self.iterate(&current)?, &current);
        let bound_slack = residuals
            .iter()
            .zip(&apriori_bounds)
            .map(|(&r, &bound)| if r <= bound { 0.0 } else if bound > 0.0 { r / bound - 1.0 } else { f64::INFINITY })
            .fold(0.0, f64::max);
        Ok(SolverReport {
            lattice: self.lattice,
            nodes: self.reported_nodes().to_vec(),
            iterates,
            iterations_used: residuals.len(),
            residuals,
            apriori_bounds,
            converged,
            k_estimate,
            lipschitz_a,
            lipschitz_estimated,
            bound_slack,
            fixed_point_defect,
        })
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Solves from `φ₁ ≡ ζ`. A run that exhausts `max_iter` returns a report with
/// `converged = false`; leaving the trust region is an error.
pub fn solve<R>(
    problem: &CauchyProblem<R>,
    lattice: &QLattice,
    tol: f64,
    max_iter: usize,
    ctrl: &SeriesControl,
) -> Result<SolverReport>
where
    R: Fn(f64, f64) -> Result<f64>,
{
    PicardSolver::new(problem, lattice, ctrl)?.solve(tol, max_iter)
}

/// `C(t) = [p]^{1-α} / ([pα]_q Γ_Q(α)) · (t^p - a^p)^(α)`
fn bound_growth<R>(ops: &FracOperators, problem: &CauchyProblem<R>, t: f64) -> Result<f64> {
    let alpha = problem.order.value();
    let p = problem.params.p();
    let q = problem.params.q();
    let power = if t <= problem.a { 0.0 } else { ops.q_power(t, problem.a, alpha)? };
    Ok(problem.params.p_number().powf(1.0 - alpha) / (q_num(p * alpha, q) * ops.gamma(alpha)?) * power)
}

fn bound_from_growth(growth: f64, n: usize, lipschitz: f64, k: f64) -> f64 {
    growth.powi(n as i32) * lipschitz.powi(n as i32 - 1) * k
}

/// Bound on `|φ_{n+1}(t) - φ_n(t)|`: `C(t)^n A^{n-1} K`.
pub fn apriori_bound<R>(n: usize, t: f64, problem: &CauchyProblem<R>, k: f64, ctrl: &SeriesControl) -> Result<f64>
where
    R: Fn(f64, f64) -> Result<f64>,
{
    if n == 0 {
        return Err(QError::domain("apriori_bound needs n >= 1"));
    }
    let lipschitz = problem.lipschitz_a.ok_or(QError::MissingLipschitz)?;
    let ops = FracOperators::new(problem.operator_context(ctrl)?);
    let growth = bound_growth(&ops, problem, t)?;
    Ok(bound_from_growth(growth, n, lipschitz, k))
}

/// Partial sum `Σ_{n=0}^{m} [p]^{-nα} / Γ_Q(nα+1) · x^{pnα}` of the
/// q-Mittag-Leffler series.
pub fn q_mittag_leffler(x: f64, m: usize, order: FracOrder, params: &QParams, ctrl: &SeriesControl) -> Result<f64> {
    mittag_leffler_partial_sum(x, m, order.value(), params, ctrl)
}

/// [`q_mittag_leffler`] for any exponent `α > 0`, including the endpoint
/// `α = 1` where the series is a q-exponential.
pub fn mittag_leffler_partial_sum(x: f64, m: usize, alpha: f64, params: &QParams, ctrl: &SeriesControl) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(QError::domain(format!("q_mittag_leffler requires x >= 0, got {x}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(QError::domain(format!("series exponent must be positive, got {alpha}")));
    }
    let p = params.p();
    let p_num = params.p_number();
    (0..=m).try_fold(0.0, |acc, n| {
        let s = n as f64 * alpha;
        let term = p_num.powf(-s) / q_gamma(s + 1.0, params.qp(), ctrl)? * x.powf(p * s);
        Ok(acc + term)
    })
}

fn grid(lo: f64, hi: f64, samples: usize) -> impl Iterator<Item = f64> {
    let n = samples.max(2);
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn sample_points<R>(problem: &CauchyProblem<R>, samples: usize) -> Vec<f64> {
    let q = problem.params.q();
    let mut points: Vec<f64> = (0..samples.max(2))
        .map(|k| problem.b * q.powi(k as i32))
        .take_while(|&w| w > problem.a)
        .collect();
    points.push(problem.a);
    points
}

/// Sampled lower estimate of the Lipschitz constant of `f` in `u` over the
/// lattice of `[a, b]` and the trust region. Not a certificate.
pub fn estimate_lipschitz<R>(problem: &CauchyProblem<R>, samples: usize) -> Result<f64>
where
    R: Fn(f64, f64) -> Result<f64>,
{
    let ys: Vec<f64> = grid(problem.zeta - problem.radius, problem.zeta + problem.radius, samples).collect();
    let mut best = 0.0f64;
    for w in sample_points(problem, samples) {
        let fs = ys
            .iter()
            .map(|&y| problem.eval_rhs(w, y))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..ys.len() {
            for j in i + 1..ys.len() {
                best = best.max(((fs[i] - fs[j]) / (ys[i] - ys[j])).abs());
            }
        }
    }
    Ok(best)
}

/// Sampled `sup |f(w, y)|` over the given nodes plus `a`, and `|y - ζ| <= r`.
fn estimate_sup_rhs<R>(problem: &CauchyProblem<R>, nodes: &[f64], samples: usize) -> Result<f64>
where
    R: Fn(f64, f64) -> Result<f64>,
{
    let mut best = 0.0f64;
    for &w in nodes.iter().chain(std::iter::once(&problem.a)) {
        for y in grid(problem.zeta - problem.radius, problem.zeta + problem.radius, samples) {
            best = best.max(problem.eval_rhs(w, y)?.abs());
        }
    }
    Ok(best)
}
