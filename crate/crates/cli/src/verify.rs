//! Registry of numerical identities checked by `qfrac verify`.

use serde::Serialize;

use qfrac_core::fractional::{lemma_beta_integral, FracOperators};
use qfrac_core::jackson::{jackson_integral, q_derivative, sup_norm};
use qfrac_core::{q_number, q_power_general, FracOrder, OperatorContext, QLattice, QParams, Result, SeriesControl};

/// Parameter grid the identities sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub qs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Orders in (0, 1) for the operator identities.
    pub alphas: Vec<f64>,
    /// Exponents for the beta integral and the q-power differences (may exceed 1).
    pub lemma_alphas: Vec<f64>,
    pub depth: usize,
    pub ctrl: SeriesControl,
    pub products: SeriesControl,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            qs: vec![0.3, 0.5, 0.9],
            ps: vec![1.0, 2.0],
            alphas: vec![0.25, 0.5, 0.75],
            lemma_alphas: vec![0.3, 0.7, 1.2],
            depth: 12,
            ctrl: SeriesControl::integration(),
            products: SeriesControl::products(),
        }
    }
}

impl Grid {
    pub fn restrict(mut self, q: Option<f64>, p: Option<f64>, alpha: Option<f64>) -> Self {
        if let Some(q) = q {
            self.qs = vec![q];
        }
        if let Some(p) = p {
            self.ps = vec![p];
        }
        if let Some(alpha) = alpha {
            self.alphas = vec![alpha];
            self.lemma_alphas = vec![alpha];
        }
        self
    }

    fn contexts(&self) -> Result<Vec<(QParams, f64)>> {
        let mut out = Vec::new();
        for &q in &self.qs {
            for &p in &self.ps {
                out.push((QParams::new(q, p)?, q));
            }
        }
        Ok(out)
    }

    fn ops(&self, params: QParams, a: f64) -> Result<FracOperators> {
        Ok(FracOperators::new(OperatorContext::new(params, a)?.with_controls(self.ctrl, self.products)?))
    }

    fn lattice(&self, q: f64, a: f64) -> Result<QLattice> {
        QLattice::new(1.0, q, self.depth, a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResult {
    pub name: &'static str,
    pub description: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub passed: bool,
}

type Check = fn(&Grid) -> Result<(f64, usize)>;

pub struct Identity {
    pub name: &'static str,
    pub description: &'static str,
    pub tolerance: f64,
    check: Check,
}

pub fn registry() -> Vec<Identity> {
    vec![
        Identity {
            name: "beta_integral",
            description: "Jackson sum of t^{p-1}(x^p-(qt)^p)^(α-1)(t^p)^(λ) against its gamma closed form (relative)",
            tolerance: 1e-9,
            check: beta_integral,
        },
        Identity {
            name: "q_power_x_difference",
            description: "q-difference in x of (x^p-y^p)^(α) equals x^{p-1}[pα](x^p-y^p)^(α-1) (relative)",
            tolerance: 1e-8,
            check: q_power_x_difference,
        },
        Identity {
            name: "q_power_y_difference",
            description: "q-difference in y of (x^p-y^p)^(α) equals -y^{p-1}[pα](x^p-(yq)^p)^(α-1) (relative)",
            tolerance: 1e-8,
            check: q_power_y_difference,
        },
        Identity {
            name: "caputo_rl_relation",
            description: "D^α f - ᶜD^α f = f(a)[p]^α/Γ(1-α)(x^p-a^p)^(-α) (scaled absolute)",
            tolerance: 1e-8,
            check: caputo_rl_relation,
        },
        Identity {
            name: "caputo_equivalence",
            description: "Caputo derivative from its definition equals the integral form with D_q f (absolute)",
            tolerance: 1e-8,
            check: caputo_equivalence,
        },
        Identity {
            name: "caputo_corollary",
            description: "ᶜD^α f = x^{1-p} D_q J^{2-α}(w^{1-p} D_q f) (absolute)",
            tolerance: 1e-8,
            check: caputo_corollary,
        },
        Identity {
            name: "boundedness",
            description: "sup |J^α f| <= bound_constant · sup |f| on the lattice (relative excess)",
            tolerance: 1e-12,
            check: boundedness,
        },
        Identity {
            name: "caputo_of_integral",
            description: "ᶜD^α J^α f = f on the lattice (absolute)",
            tolerance: 1e-7,
            check: |g| inversion(g, 0),
        },
        Identity {
            name: "integral_of_caputo",
            description: "J^α ᶜD^α f = f - f(a) on the lattice (absolute)",
            tolerance: 1e-7,
            check: |g| inversion(g, 1),
        },
    ]
}

pub fn identity_names() -> Vec<&'static str> {
    registry().iter().map(|i| i.name).collect()
}

/// Runs every identity; `fault` perturbs the named identity's error by a
/// thousand times its tolerance.
pub fn run_all(grid: &Grid, fault: Option<&str>) -> Result<Vec<IdentityResult>> {
    registry()
        .into_iter()
        .map(|identity| {
            let (mut max_error, cases) = (identity.check)(grid)?;
            if fault == Some(identity.name) {
                max_error += 1e3 * identity.tolerance;
            }
            Ok(IdentityResult {
                name: identity.name,
                description: identity.description,
                max_error,
                tolerance: identity.tolerance,
                cases,
                passed: max_error <= identity.tolerance,
            })
        })
        .collect()
}

fn rel_err(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1e-300)
}

/// Lower limits used for the operator identities: zero and a lattice point.
fn lower_limits(q: f64) -> [f64; 2] {
    [0.0, q.powi(4)]
}

/// Test functions: monomials of degree <= 4 and shifted q-powers.
fn test_functions(params: QParams, a: f64, products: SeriesControl) -> Vec<Box<dyn Fn(f64) -> Result<f64>>> {
    let mut out: Vec<Box<dyn Fn(f64) -> Result<f64>>> = (0..=4).map(|k| Box::new(move |w: f64| Ok(w.powi(k))) as Box<_>).collect();
    for lambda in [0.5, 1.5] {
        out.push(Box::new(move |w: f64| {
            if w <= a {
                Ok(0.0)
            } else {
                q_power_general(w, a, lambda, &params, &products)
            }
        }));
    }
    out
}

fn beta_integral(grid: &Grid) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (params, q) in grid.contexts()? {
        let p = params.p();
        for &alpha in &grid.lemma_alphas {
            for lambda in [0.0, 0.5, 1.0] {
                for x in [0.5, 1.0, 2.0] {
                    let integrand = qfrac_core::Fallible(|t: f64| {
                        if t == 0.0 {
                            return Ok(0.0);
                        }
                        Ok(t.powf(p - 1.0)
                            * q_power_general(x, q * t, alpha - 1.0, &params, &grid.products)?
                            * q_power_general(t, 0.0, lambda, &params, &grid.products)?)
                    });
                    let numeric = jackson_integral(&integrand, 0.0, x, q, &grid.ctrl)?;
                    let closed = lemma_beta_integral(0.0, x, alpha, lambda, &params, &grid.products)?;
                    worst = worst.max(rel_err(numeric, closed));
                    cases += 1;
                }
            }
        }
    }
    Ok((worst, cases))
}

fn q_power_x_difference(grid: &Grid) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (params, q) in grid.contexts()? {
        let p = params.p();
        for &alpha in grid.lemma_alphas.iter().chain(&[2.5]) {
            for x in [0.6, 1.4] {
                for frac in [0.0, 0.35, 0.7] {
                    let y = frac * q * x;
                    let f = qfrac_core::Fallible(|s: f64| q_power_general(s, y, alpha, &params, &grid.products));
                    let lhs = q_derivative(&f, x, q)?;
                    let rhs = x.powf(p - 1.0)
                        * q_number(p * alpha, q)?
                        * q_power_general(x, y, alpha - 1.0, &params, &grid.products)?;
                    worst = worst.max(rel_err(lhs, rhs));
                    cases += 1;
                }
            }
        }
    }
    Ok((worst, cases))
}

fn q_power_y_difference(grid: &Grid) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (params, q) in grid.contexts()? {
        let p = params.p();
        for &alpha in grid.lemma_alphas.iter().chain(&[2.5]) {
            for x in [0.6, 1.4] {
                for frac in [0.1, 0.5, 1.0] {
                    let y = frac * x;
                    let g = qfrac_core::Fallible(|s: f64| q_power_general(x, s, alpha, &params, &grid.products));
                    let lhs = q_derivative(&g, y, q)?;
                    let rhs = -y.powf(p - 1.0)
                        * q_number(p * alpha, q)?
                        * q_power_general(x, y * q, alpha - 1.0, &params, &grid.products)?;
                    worst = worst.max(rel_err(lhs, rhs));
                    cases += 1;
                }
            }
        }
    }
    Ok((worst, cases))
}

/// Nodes where both `x` and `qx` lie in `[a, b]`.
fn derivative_nodes(lattice: &QLattice, a: f64) -> Vec<f64> {
    lattice
        .nodes()
        .into_iter()
        .filter(|&x| lattice.q * x >= a * (1.0 - 1e-12))
        .collect()
}

fn caputo_rl_relation(grid: &Grid) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (params, q) in grid.contexts()? {
        for a in [0.0, 0.2] {
            let ops = grid.ops(params, a)?;
            let lattice = grid.lattice(q, a)?;
            for &alpha in &grid.alphas {
                let order = FracOrder::new(alpha)?;
                let polys: [fn(f64) -> f64; 3] = [|_| 1.0, |w| 1.0 + w, |w| 2.0 - w + 0.5 * w * w * w];
                for f in polys {
                    for x in derivative_nodes(&lattice, a) {
                        let residual = ops.caputo_rl_relation_residual(&f, x, order)?;
                        let scale = ops.rl_derivative(&f, x, order)?.abs().max(1.0);
                        worst = worst.max(residual.abs() / scale);
                        cases += 1;
                    }
                }
            }
        }
    }
    Ok((worst, cases))
}

fn caputo_forms(grid: &Grid, corollary: bool) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (params, q) in grid.contexts()? {
        for a in lower_limits(q) {
            let ops = grid.ops(params, a)?;
            let lattice = grid.lattice(q, a)?;
            for &alpha in &grid.alphas {
                let order = FracOrder::new(alpha)?;
                for f in test_functions(params, a, grid.products) {
                    let f = qfrac_core::Fallible(f);
                    let dqf = qfrac_core::Fallible(|w: f64| q_derivative(&f, w, q));
                    for x in derivative_nodes(&lattice, a) {
                        let reference = ops.caputo(&f, x, order)?;
                        let other = if corollary {
                            ops.caputo_corollary(&dqf, x, order)?
                        } else {
                            ops.caputo_simplified(&dqf, x, order)?
                        };
                        worst = worst.max((reference - other).abs());
                        cases += 1;
                    }
                }
            }
        }
    }
    Ok((worst, cases))
}

fn caputo_equivalence(grid: &Grid) -> Result<(f64, usize)> {
    caputo_forms(grid, false)
}

fn caputo_corollary(grid: &Grid) -> Result<(f64, usize)> {
    caputo_forms(grid, true)
}

/// Deterministic coefficients in [-5, 5] for the `index`-th test polynomial.
pub fn polynomial_coefficients(index: usize) -> Vec<f64> {
    let degree = index % 5;
    (0..=degree)
        .map(|j| 5.0 * ((index as f64 + 1.0) * 12.9898 + j as f64 * 78.233).sin())
        .collect()
}

fn boundedness(grid: &Grid) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (params, q) in grid.contexts()? {
        for a in [0.0, q.powi(3)] {
            let ops = grid.ops(params, a)?;
            let lattice = grid.lattice(q, a)?;
            for &alpha in &grid.alphas {
                let order = FracOrder::new(alpha)?;
                let constant = ops.bound_constant(order, lattice.b)?;
                for index in 0..50 {
                    let coeffs = polynomial_coefficients(index);
                    let f = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
                    let jf = qfrac_core::Fallible(|x: f64| ops.integral(&f, x, order));
                    let lhs = sup_norm(&jf, &lattice)?;
                    let rhs = constant * sup_norm(&f, &lattice)?;
                    if rhs > 0.0 {
                        worst = worst.max(lhs / rhs - 1.0);
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok((worst.max(0.0), cases))
}

fn inversion(grid: &Grid, which: usize) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (params, q) in grid.contexts()? {
        for a in lower_limits(q) {
            let ops = grid.ops(params, a)?;
            let lattice = grid.lattice(q, a)?;
            for &alpha in &grid.alphas {
                let order = FracOrder::new(alpha)?;
                for f in test_functions(params, a, grid.products) {
                    let f = qfrac_core::Fallible(f);
                    let residuals = ops.inversion_residuals(&f, &lattice, order)?;
                    worst = worst.max(if which == 0 { residuals.0 } else { residuals.1 });
                    cases += 1;
                }
            }
        }
    }
    Ok((worst, cases))
}
