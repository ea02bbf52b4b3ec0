//! Grid-based checks of the tail assumptions, LSI-constant estimation,
//! Poincaré-regime classification and sampling diagnostics.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::TransformedPotential;
use crate::error::{invalid, Result, TulaError};
use crate::quadrature::{integrate, integrate_finite, simpson};
use crate::sampler::ChainRun;
use crate::targets::IsotropicPotential;
use crate::transform::geometric_grid;

// Relative slack applied to fitted constants so the strict inequalities hold
// at the extremal grid point.
const FIT_SLACK: f64 = 1e-9;
const REL_EQ: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Assumption {
    #[serde(rename = "A1_dissipativity")]
    A1Dissipativity,
    #[serde(rename = "A2_degenerate_convexity")]
    A2DegenerateConvexity,
    #[serde(rename = "A3_strong_convexity")]
    A3StrongConvexity,
    #[serde(rename = "A4_gradient_lipschitz")]
    A4GradientLipschitz,
    #[serde(rename = "A5_tail")]
    A5Tail,
}

impl Assumption {
    pub const ALL: [Assumption; 5] = [
        Assumption::A1Dissipativity,
        Assumption::A2DegenerateConvexity,
        Assumption::A3StrongConvexity,
        Assumption::A4GradientLipschitz,
        Assumption::A5Tail,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Assumption::A1Dissipativity => "A1_dissipativity",
            Assumption::A2DegenerateConvexity => "A2_degenerate_convexity",
            Assumption::A3StrongConvexity => "A3_strong_convexity",
            Assumption::A4GradientLipschitz => "A4_gradient_lipschitz",
            Assumption::A5Tail => "A5_tail",
        }
    }

    fn constant_names(&self) -> &'static [&'static str] {
        match self {
            Assumption::A1Dissipativity => &["A", "B", "alpha"],
            Assumption::A2DegenerateConvexity => &["mu", "theta"],
            Assumption::A3StrongConvexity => &["rho"],
            Assumption::A4GradientLipschitz => &["L"],
            Assumption::A5Tail => &["m", "alpha1", "C_tail"],
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Assumption {
    type Err = TulaError;

    /// Accepts `A1`..`A5`, the full tags, or the bare descriptive names.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let found = match key.as_str() {
            "a1" | "a1_dissipativity" | "dissipativity" => Assumption::A1Dissipativity,
            "a2" | "a2_degenerate_convexity" | "degenerate_convexity" => {
                Assumption::A2DegenerateConvexity
            }
            "a3" | "a3_strong_convexity" | "strong_convexity" => Assumption::A3StrongConvexity,
            "a4" | "a4_gradient_lipschitz" | "gradient_lipschitz" => {
                Assumption::A4GradientLipschitz
            }
            "a5" | "a5_tail" | "tail" => Assumption::A5Tail,
            _ => return invalid(format!("unknown assumption '{s}'")),
        };
        Ok(found)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub grid: Vec<f64>,
    /// Left-hand side at each grid radius. For the two-sided curvature
    /// conditions this is the binding one of the two eigenvalues; for the
    /// tail condition it is the log tail probability.
    pub lhs: Vec<f64>,
    pub fitted_constants: BTreeMap<String, f64>,
    pub satisfied_from_radius: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Default radii: 512 log-spaced points on `[max(knot, 0.1), 100]`.
pub fn default_grid(tp: &TransformedPotential) -> Vec<f64> {
    let lo = tp.transform.knot().max(0.1);
    let hi = 100.0_f64.max(2.0 * lo);
    geometric_grid(lo, hi, 512)
}

fn tail_beta(tp: &TransformedPotential) -> f64 {
    tp.transform
        .exponential_params()
        .map_or(2.0, |(_, beta)| beta)
}

// Smallest index k such that `holds` is true at every index >= k.
fn suffix_start(holds: &[bool]) -> Option<usize> {
    let mut k = holds.len();
    while k > 0 && holds[k - 1] {
        k -= 1;
    }
    (k < holds.len()).then_some(k)
}

fn upper_half(v: &[f64]) -> &[f64] {
    &v[v.len() / 2..]
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluates one of the tail assumptions on `grid` (default:
/// [`default_grid`]). Constants missing from `candidate` are fitted from
/// the grid: infima over the upper half of the grid for lower bounds, suprema
/// for upper bounds.
pub fn check_assumption(
    tp: &TransformedPotential,
    which: Assumption,
    grid: Option<&[f64]>,
    candidate: &BTreeMap<String, f64>,
) -> Result<AssumptionReport> {
    for key in candidate.keys() {
        if !which.constant_names().contains(&key.as_str()) {
            return invalid(format!("constant '{key}' does not belong to {which}"));
        }
    }
    if let Some((k, v)) = candidate.iter().find(|(_, v)| !v.is_finite()) {
        return invalid(format!("constant '{k}' must be finite, got {v}"));
    }
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(tp),
    };
    if grid.is_empty() {
        return invalid("grid is empty");
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("grid must be strictly increasing");
    }
    let knot = tp.transform.knot();
    if grid[0] < knot * (1.0 - 1e-12) {
        return invalid(format!("grid starts at {} below the knot {knot}", grid[0]));
    }
    let c = |k: &str| candidate.get(k).copied();
    let mut fitted = BTreeMap::new();
    let mut note = None;
    let beta = tail_beta(tp);

    let (lhs, holds, ok) = match which {
        Assumption::A1Dissipativity => {
            let alpha = c("alpha").unwrap_or(beta);
            if !(1.0..=2.0).contains(&alpha) {
                return invalid(format!("alpha must lie in [1, 2], got {alpha}"));
            }
            let lhs: Vec<f64> = grid
                .par_iter()
                .map(|&r| tp.radial_derivs(r)[1] * r)
                .collect();
            let a = match c("A") {
                Some(a) => a,
                None => {
                    let ratios: Vec<f64> = grid
                        .iter()
                        .zip(&lhs)
                        .map(|(r, v)| v / r.powf(alpha))
                        .collect();
                    let inf = min_of(upper_half(&ratios));
                    inf - FIT_SLACK * inf.abs()
                }
            };
            let b = match c("B") {
                Some(b) => b,
                None => {
                    let sup = grid
                        .iter()
                        .zip(&lhs)
                        .map(|(r, v)| a * r.powf(alpha) - v)
                        .fold(0.0, f64::max);
                    sup + FIT_SLACK * (1.0 + sup)
                }
            };
            fitted.insert("A".into(), a);
            fitted.insert("B".into(), b);
            fitted.insert("alpha".into(), alpha);
            let holds: Vec<bool> = grid
                .iter()
                .zip(&lhs)
                .map(|(r, v)| *v > a * r.powf(alpha) - b)
                .collect();
            (lhs, holds, a > 0.0 && b > 0.0)
        }
        Assumption::A2DegenerateConvexity => {
            let theta = c("theta").unwrap_or(2.0 - beta);
            if theta < 0.0 {
                return invalid(format!("theta must be nonnegative, got {theta}"));
            }
            let lhs = min_eigenvalues(tp, &grid)?;
            let weight = |r: f64| (1.0 + 0.25 * r * r).powf(theta / 2.0);
            let mu = match c("mu") {
                Some(mu) => mu,
                None => {
                    let scaled: Vec<f64> =
                        grid.iter().zip(&lhs).map(|(r, v)| v * weight(*r)).collect();
                    let inf = min_of(upper_half(&scaled));
                    inf - FIT_SLACK * inf.abs()
                }
            };
            fitted.insert("mu".into(), mu);
            fitted.insert("theta".into(), theta);
            let holds: Vec<bool> = grid
                .iter()
                .zip(&lhs)
                .map(|(r, v)| *v > mu / weight(*r))
                .collect();
            (lhs, holds, mu > 0.0)
        }
        Assumption::A3StrongConvexity => {
            let lhs = min_eigenvalues(tp, &grid)?;
            let rho = c("rho").unwrap_or_else(|| {
                let inf = min_of(upper_half(&lhs));
                inf - FIT_SLACK * inf.abs()
            });
            fitted.insert("rho".into(), rho);
            let holds: Vec<bool> = lhs.iter().map(|v| *v > rho).collect();
            (lhs, holds, rho > 0.0)
        }
        Assumption::A4GradientLipschitz => {
            let lhs: Vec<f64> = grid
                .par_iter()
                .map(|&r| tp.hessian_eigenvalues(r).map(|e| e.max()))
                .collect::<Result<_>>()?;
            let mut ok = true;
            let l = match c("L") {
                Some(l) => l,
                None => {
                    let sup = max_of(upper_half(&lhs));
                    let last = lhs[lhs.len() - 1];
                    let mid = lhs[lhs.len() / 2];
                    if !sup.is_finite()
                        || (last >= sup && last > 2.0 * mid.abs().max(f64::MIN_POSITIVE))
                    {
                        ok = false;
                        note = Some("largest eigenvalue grows without bound on the grid".into());
                    }
                    sup + FIT_SLACK * sup.abs()
                }
            };
            fitted.insert("L".into(), l);
            let holds: Vec<bool> = lhs.iter().map(|v| *v < l).collect();
            (lhs, holds, ok && l.is_finite() && l > 0.0)
        }
        Assumption::A5Tail => {
            let m = c("m").unwrap_or(0.0);
            let alpha1 = c("alpha1").unwrap_or(1.0);
            if m < 0.0 {
                return invalid(format!("m must be nonnegative, got {m}"));
            }
            if !(0.0..=1.0).contains(&alpha1) {
                return invalid(format!("alpha1 must lie in [0, 1], got {alpha1}"));
            }
            let reference = RadialReference::new(&tp.target)?;
            let lhs: Vec<f64> = grid
                .par_iter()
                .map(|&r| {
                    let l0 = tp.transform.log_g(r);
                    let log_s = if m > 0.0 {
                        l0 + (m * (-l0).exp()).ln_1p()
                    } else {
                        l0
                    };
                    reference.log_tail_probability(log_s)
                })
                .collect::<Result<_>>()?;
            let ln2 = std::f64::consts::LN_2;
            let c_tail = match c("C_tail") {
                Some(v) => v,
                None if alpha1 > 0.0 => {
                    let sup = grid
                        .iter()
                        .zip(&lhs)
                        .map(|(r, v)| r / (ln2 - v).powf(1.0 / alpha1))
                        .fold(0.0, f64::max);
                    sup * (1.0 + FIT_SLACK)
                }
                None => 1.0,
            };
            fitted.insert("m".into(), m);
            fitted.insert("alpha1".into(), alpha1);
            fitted.insert("C_tail".into(), c_tail);
            let holds: Vec<bool> = grid
                .iter()
                .zip(&lhs)
                .map(|(r, v)| *v <= ln2 - (r / c_tail).powf(alpha1))
                .collect();
            (lhs, holds, c_tail > 0.0 && c_tail.is_finite())
        }
    };

    let start = suffix_start(&holds);
    let satisfied_from_radius = start.map(|k| grid[k]);
    if let Some(r) = satisfied_from_radius {
        let key = match which {
            Assumption::A1Dissipativity => "N1",
            Assumption::A2DegenerateConvexity => "N2",
            Assumption::A3StrongConvexity => "N3",
            Assumption::A4GradientLipschitz => "N4",
            Assumption::A5Tail => "N5_radius",
        };
        fitted.insert(key.into(), r);
    }
    let pass = ok && satisfied_from_radius.is_some();
    Ok(AssumptionReport {
        assumption: which,
        grid,
        lhs,
        fitted_constants: fitted,
        satisfied_from_radius,
        pass,
        note,
    })
}

fn min_eigenvalues(tp: &TransformedPotential, grid: &[f64]) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&r| tp.hessian_eigenvalues(r).map(|e| e.min()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsiEstimate {
    /// Uniform radii on `[0, r_max]`.
    pub grid: Vec<f64>,
    pub lambda_radial: Vec<f64>,
    pub lambda_tangential: Vec<f64>,
    /// `β̄(r) = inf_{s ≥ r} min(λ1(s), λ2(s))`, nondecreasing in `r`.
    pub beta_bar: Vec<f64>,
    /// Smallest eigenvalue seen on `(r_max, 100 r_max]`, folded into `beta_bar`.
    pub tail_floor: f64,
    pub a0: f64,
    pub bound: f64,
    /// `|∫₀^{a0} β̄ − 2/a0|`.
    pub root_residual: f64,
}

impl LsiEstimate {
    /// `r,lambda_radial,lambda_tangential,beta_bar` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,lambda_radial,lambda_tangential,beta_bar\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.grid[i], self.lambda_radial[i], self.lambda_tangential[i], self.beta_bar[i]
            ));
        }
        out
    }
}

/// Tabulates `β̄` and evaluates the LSI bound
/// `a0²·exp(∫₀^{a0} r β̄(r) dr − 1)` where `∫₀^{a0} β̄ = 2/a0`.
pub fn estimate_lsi(
    tp: &TransformedPotential,
    r_max: f64,
    grid_size: usize,
) -> Result<LsiEstimate> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return invalid(format!("r_max must be positive and finite, got {r_max}"));
    }
    if grid_size < 3 {
        return invalid("grid_size must be at least 3");
    }
    let h = r_max / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 * h).collect();
    // At the origin both eigenvalues equal F''(0); evaluate just off it.
    let r0 = (1e-3 * h).min(1e-6);
    let eig: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&r| {
            tp.hessian_eigenvalues(r.max(r0))
                .map(|e| (e.lambda_radial, e.lambda_tangential))
        })
        .collect::<Result<_>>()?;
    let (lambda_radial, lambda_tangential): (Vec<f64>, Vec<f64>) = eig.into_iter().unzip();
    if lambda_radial
        .iter()
        .chain(&lambda_tangential)
        .any(|v| v.is_nan())
    {
        return Err(TulaError::NotApplicable(
            "Hessian eigenvalue is NaN on the grid".into(),
        ));
    }
    let tail_floor = geometric_grid(r_max * 1.01, 100.0 * r_max, 64)
        .into_iter()
        .filter_map(|r| tp.hessian_eigenvalues(r).ok().map(|e| e.min()))
        .filter(|v| !v.is_nan())
        .fold(f64::INFINITY, f64::min);

    let mut beta_bar = vec![0.0; grid_size];
    let mut running = tail_floor;
    for i in (0..grid_size).rev() {
        running = running.min(lambda_radial[i].min(lambda_tangential[i]));
        beta_bar[i] = running;
    }
    if let Some(i) = beta_bar.iter().position(|v| !(*v > 0.0)) {
        return Err(TulaError::NotApplicable(format!(
            "smallest Hessian eigenvalue is nonpositive beyond r = {}",
            grid[i]
        )));
    }
    let (a0, bound, root_residual) = corollary_bound(&grid, &beta_bar, 2 * grid_size)?;
    Ok(LsiEstimate {
        grid,
        lambda_radial,
        lambda_tangential,
        beta_bar,
        tail_floor,
        a0,
        bound,
        root_residual,
    })
}

/// Solves `∫₀^a β̄ = 2/a` by bisection for a tabulated, positive `β̄`
/// (linearly interpolated, held constant past the last radius) and returns
/// `(a0, a0²·exp(∫₀^{a0} r β̄ − 1), residual)`. Integrals use composite
/// Simpson with `panels` subintervals.
pub fn corollary_bound(grid: &[f64], beta_bar: &[f64], panels: usize) -> Result<(f64, f64, f64)> {
    if grid.len() < 2 || grid.len() != beta_bar.len() {
        return invalid("grid and beta_bar must have equal length of at least 2");
    }
    if grid[0] != 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("grid must start at 0 and be strictly increasing");
    }
    if beta_bar.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(TulaError::NotApplicable(
            "beta_bar must be positive and finite".into(),
        ));
    }
    let interp = |r: f64| -> f64 {
        let last = grid.len() - 1;
        if r >= grid[last] {
            return beta_bar[last];
        }
        let k = grid.partition_point(|g| *g <= r).clamp(1, last);
        let (x0, x1) = (grid[k - 1], grid[k]);
        let t = (r - x0) / (x1 - x0);
        beta_bar[k - 1] + t * (beta_bar[k] - beta_bar[k - 1])
    };
    let integral = |a: f64| simpson(interp, 0.0, a, panels);
    let phi = |a: f64| a * integral(a) - 2.0;

    let mut hi = grid[grid.len() - 1];
    let mut doublings = 0;
    while phi(hi) < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(TulaError::NotApplicable(
                "root of the LSI equation not bracketed".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a0 = 0.5 * (lo + hi);
    let residual = (integral(a0) - 2.0 / a0).abs();
    let moment = simpson(|r| r * interp(r), 0.0, a0, panels);
    Ok((a0, a0 * a0 * (moment - 1.0).exp(), residual))
}

/// Regime-classifier input: which tail condition holds, with its constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "assumption", rename_all = "snake_case")]
pub enum RegimeInput {
    Dissipativity {
        alpha: f64,
        beta: f64,
        b: f64,
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B", default)]
        b_const: Option<f64>,
    },
    DegenerateConvexity {
        mu: f64,
        theta: f64,
        beta: f64,
        b: f64,
    },
    StrongConvexity {
        rho: f64,
        beta: f64,
        b: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SuperPoincare,
    Poincare,
    WeakPoincare,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SuperPoincare => "super_poincare",
            Regime::Poincare => "poincare",
            Regime::WeakPoincare => "weak_poincare",
        })
    }
}

/// Exponents of `ω(x) = C 2^{-(d+ϑ)} |x|^{c·log^e|x| + s} · log^{-k}|x|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaWitness {
    pub coefficient: f64,
    pub log_power: f64,
    pub shift: f64,
    /// `None` when the input does not carry the constant that sets it.
    pub log_decay: Option<f64>,
}

impl fmt::Display for OmegaWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C 2^-(d+vartheta) |x|^({} log^{}|x| + {})",
            self.coefficient, self.log_power, self.shift
        )?;
        match self.log_decay {
            Some(k) => write!(f, " log^-{k}|x|"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    pub witness: Option<OmegaWitness>,
    pub rule_fired: String,
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_EQ * a.abs().max(b.abs())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

/// Classifies the Poincaré-type inequality satisfied by the heavy-tailed
/// target with index `vartheta`. Boundary equalities are tested to
/// `1e-12` relative.
pub fn classify_regime(input: &RegimeInput, vartheta: f64, d: usize) -> Result<RegimeVerdict> {
    check_positive("vartheta", vartheta)?;
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    let (beta, b) = match *input {
        RegimeInput::Dissipativity { beta, b, .. }
        | RegimeInput::DegenerateConvexity { beta, b, .. }
        | RegimeInput::StrongConvexity { beta, b, .. } => (beta, b),
    };
    if !(beta > 1.0 && beta <= 2.0) {
        return invalid(format!("beta must lie in (1, 2], got {beta}"));
    }
    check_positive("b", b)?;
    let df = d as f64;
    let verdict = |regime, witness, rule: &str| RegimeVerdict {
        regime,
        witness,
        rule_fired: rule.to_string(),
    };

    match *input {
        RegimeInput::Dissipativity {
            alpha, a, b_const, ..
        } => {
            if !(1.0..=2.0).contains(&alpha) {
                return invalid(format!("alpha must lie in [1, 2], got {alpha}"));
            }
            check_positive("A", a)?;
            if let Some(bc) = b_const {
                if !(bc >= 0.0 && bc.is_finite()) {
                    return invalid(format!("B must be nonnegative, got {bc}"));
                }
            }
            let witness = || OmegaWitness {
                coefficient: a / (alpha * b.powf(alpha / beta)),
                log_power: alpha / beta - 1.0,
                shift: -vartheta,
                log_decay: b_const.map(|bc| bc / beta),
            };
            let threshold = a / (beta * b);
            if approx_eq(alpha, beta) {
                if vartheta < threshold && !approx_eq(vartheta, threshold) {
                    Ok(verdict(
                        Regime::SuperPoincare,
                        Some(witness()),
                        "dissipativity.super.alpha_eq_beta",
                    ))
                } else {
                    Ok(verdict(
                        Regime::WeakPoincare,
                        None,
                        "dissipativity.weak.alpha_eq_beta",
                    ))
                }
            } else if alpha > beta {
                Ok(verdict(
                    Regime::SuperPoincare,
                    Some(witness()),
                    "dissipativity.super.alpha_gt_beta",
                ))
            } else {
                Err(TulaError::NotApplicable(format!(
                    "no regime is established for dissipativity with alpha = {alpha} < beta = {beta}"
                )))
            }
        }
        RegimeInput::DegenerateConvexity { mu, theta, .. } => {
            check_positive("mu", mu)?;
            if !(theta >= 0.0 && theta.is_finite()) {
                return invalid(format!("theta must be nonnegative, got {theta}"));
            }
            let critical = 2.0 - beta;
            let threshold = mu / (beta * b);
            let decay = (df - beta) / beta;
            if approx_eq(theta, critical) || (theta == 0.0 && critical == 0.0) {
                if vartheta < threshold && !approx_eq(vartheta, threshold) {
                    let w = OmegaWitness {
                        coefficient: mu / (beta * b.powf((2.0 - theta) / beta)),
                        log_power: (2.0 - theta) / beta - 1.0,
                        shift: -vartheta,
                        log_decay: Some(decay),
                    };
                    Ok(verdict(
                        Regime::SuperPoincare,
                        Some(w),
                        "degenerate_convexity.super.theta_critical",
                    ))
                } else {
                    Ok(verdict(
                        Regime::WeakPoincare,
                        None,
                        "degenerate_convexity.weak.theta_critical",
                    ))
                }
            } else if theta < critical {
                let w = OmegaWitness {
                    coefficient: mu
                        / ((1.0 - theta) * (2.0 - theta) * b.powf((2.0 - theta) / beta)),
                    log_power: (2.0 - theta) / beta - 1.0,
                    shift: 1.0 - (df + vartheta),
                    log_decay: Some(decay),
                };
                Ok(verdict(
                    Regime::SuperPoincare,
                    Some(w),
                    "degenerate_convexity.super.theta_subcritical",
                ))
            } else {
                Ok(verdict(
                    Regime::WeakPoincare,
                    None,
                    "degenerate_convexity.weak.theta_supercritical",
                ))
            }
        }
        RegimeInput::StrongConvexity { rho, .. } => {
            check_positive("rho", rho)?;
            let witness = || OmegaWitness {
                coefficient: 0.5 * rho / b.powf(2.0 / beta),
                log_power: 2.0 / beta - 1.0,
                shift: -vartheta,
                log_decay: Some((df - beta) / beta),
            };
            if !approx_eq(beta, 2.0) {
                return Ok(verdict(
                    Regime::SuperPoincare,
                    Some(witness()),
                    "strong_convexity.super.beta_lt_2",
                ));
            }
            let threshold = 0.5 * rho / b;
            if approx_eq(vartheta, threshold) {
                if d <= 2 {
                    Ok(verdict(
                        Regime::Poincare,
                        None,
                        "strong_convexity.poincare.critical_low_dim",
                    ))
                } else {
                    Ok(verdict(
                        Regime::WeakPoincare,
                        None,
                        "strong_convexity.weak.critical_high_dim",
                    ))
                }
            } else if vartheta < threshold {
                Ok(verdict(
                    Regime::SuperPoincare,
                    Some(witness()),
                    "strong_convexity.super.beta_eq_2",
                ))
            } else {
                Ok(verdict(
                    Regime::WeakPoincare,
                    None,
                    "strong_convexity.weak.supercritical",
                ))
            }
        }
    }
}

/// Log-space quadrature oracle for the radial law of an isotropic target,
/// parametrised by `u = log |x|`.
#[derive(Debug, Clone)]
pub struct RadialReference<'a> {
    p: &'a IsotropicPotential,
    mode: f64,
    shift: f64,
    log_z: f64,
}

const SCAN_LO: f64 = -60.0;
const SCAN_HI: f64 = 60.0;
const SCAN_STEP: f64 = 0.01;

fn scan_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = ((SCAN_HI - SCAN_LO) / SCAN_STEP) as usize;
    let mut best = (SCAN_LO, f64::NEG_INFINITY);
    for i in 0..=n {
        let u = SCAN_LO + i as f64 * SCAN_STEP;
        let v = f(u);
        if v > best.1 {
            best = (u, v);
        }
    }
    best
}

// log ∫ exp(f) over the real line, split at the scanned mode.
fn log_integral_line(f: impl Fn(f64) -> f64 + Copy) -> Result<(f64, f64)> {
    let (mode, shift) = scan_max(f);
    if !shift.is_finite() {
        return Err(TulaError::Quadrature(
            "log density is not finite anywhere on the scan".into(),
        ));
    }
    let g = move |u: f64| (f(u) - shift).exp();
    let left = integrate(g, f64::NEG_INFINITY, mode, 1e-14, 1e-12)?;
    let right = integrate(g, mode, f64::INFINITY, 1e-14, 1e-12)?;
    Ok((mode, shift + (left.value + right.value).ln()))
}

impl<'a> RadialReference<'a> {
    pub fn new(p: &'a IsotropicPotential) -> Result<Self> {
        let ell = |u: f64| p.log_radius_log_density(u);
        let (mode, log_z) = log_integral_line(ell)?;
        if !log_z.is_finite() {
            return Err(TulaError::Quadrature(
                "radial density is not normalizable".into(),
            ));
        }
        let shift = ell(mode);
        Ok(Self {
            p,
            mode,
            shift,
            log_z,
        })
    }

    fn ell(&self, u: f64) -> f64 {
        self.p.log_radius_log_density(u)
    }

    /// `log P(|x| ≥ e^{log_s})`.
    pub fn log_tail_probability(&self, log_s: f64) -> Result<f64> {
        if log_s == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if log_s <= self.mode {
            let g = |u: f64| (self.ell(u) - self.shift).exp();
            let mid = integrate_finite(g, log_s, self.mode, 1e-14, 1e-12)?;
            let right = integrate(g, self.mode, f64::INFINITY, 1e-14, 1e-12)?;
            return Ok((self.shift + (mid.value + right.value).ln() - self.log_z).min(0.0));
        }
        // Re-centre on the local maximum so far-tail values do not underflow.
        let local = (0..=400)
            .map(|i| self.ell(log_s + i as f64 * 0.05))
            .fold(f64::NEG_INFINITY, f64::max);
        let g = |u: f64| (self.ell(u) - local).exp();
        let tail = integrate(g, log_s, f64::INFINITY, 1e-300, 1e-10)?;
        if !(tail.value > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok((local + tail.value.ln() - self.log_z).min(0.0))
    }

    pub fn tail_probability(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(1.0);
        }
        self.log_tail_probability(s.ln()).map(f64::exp)
    }

    /// `E|x|^q`; errors when `q` is not below the tail index.
    pub fn moment(&self, q: f64) -> Result<f64> {
        if let Some(k) = self.p.tail_index() {
            if q >= k {
                return Err(TulaError::MomentDoesNotExist {
                    order: q,
                    tail_index: k,
                });
            }
        }
        let (_, log_m) = log_integral_line(|u| self.ell(u) + q * u)?;
        Ok((log_m - self.log_z).exp())
    }

    /// CDF of `|x|` tabulated in `u = log |x|` by the trapezoid rule.
    pub fn cdf_table(&self, intervals: usize) -> CdfTable {
        let cut = self.shift - 60.0;
        let mut lo = self.mode;
        while lo > SCAN_LO - 200.0 && self.ell(lo) > cut {
            lo -= 0.05;
        }
        let mut hi = self.mode;
        while hi < SCAN_HI + 200.0 && self.ell(hi) > cut {
            hi += 0.05;
        }
        let n = intervals.max(16);
        let h = (hi - lo) / n as f64;
        let dens: Vec<f64> = (0..=n)
            .map(|i| (self.ell(lo + i as f64 * h) - self.shift).exp())
            .collect();
        let mut cum = vec![0.0; n + 1];
        for i in 1..=n {
            cum[i] = cum[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
        }
        let total = cum[n];
        cum.iter_mut().for_each(|c| *c /= total);
        CdfTable { lo, h, values: cum }
    }
}

#[derive(Debug, Clone)]
pub struct CdfTable {
    lo: f64,
    h: f64,
    values: Vec<f64>,
}

impl CdfTable {
    /// `P(|x| ≤ r)`.
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let t = (r.ln() - self.lo) / self.h;
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.values.len() - 1;
        if t >= last as f64 {
            return 1.0;
        }
        let k = t.floor() as usize;
        let w = t - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }
}

/// Effective sample size by Geyer's initial monotone sequence estimator.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |k: usize| {
        c[..n - k]
            .iter()
            .zip(&c[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / nf
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        return nf;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while k + 1 < n {
        let pair = (autocov(k) + autocov(k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 2;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / nf);
    (nf / tau).min(nf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub order: f64,
    pub empirical: f64,
    pub reference: f64,
    pub mcse: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub threshold: f64,
    pub empirical: f64,
    pub reference: f64,
    pub mcse: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialDiagnostics {
    pub samples: usize,
    pub chains: usize,
    /// ESS of the probability-integral transform `F(|x|)`, summed over chains.
    pub effective_sample_size: f64,
    pub ks_statistic: f64,
    /// `1.6276 / sqrt(ESS)`, the asymptotic 1% Kolmogorov quantile.
    pub ks_critical_1pct: f64,
    pub ks_pass: bool,
    pub moments: Vec<MomentCheck>,
    pub tail_frequencies: Vec<TailCheck>,
}

const KS_QUANTILE_1PCT: f64 = 1.627_624_3;

// Pooled mean over chains with its Monte-Carlo standard error.
fn pooled_mean(series: &[Vec<f64>]) -> (f64, f64) {
    let total: usize = series.iter().map(Vec::len).sum();
    let nt = total as f64;
    let mut mean = 0.0;
    let mut var = 0.0;
    for s in series.iter().filter(|s| !s.is_empty()) {
        let n = s.len() as f64;
        let m = s.iter().sum::<f64>() / n;
        let v = s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        let ess = effective_sample_size(s);
        mean += m * n / nt;
        var += (n / nt).powi(2) * v / ess;
    }
    (mean, var.sqrt())
}

/// Compares post-burn-in `|x|` samples of `run` with quadrature of the
/// target's radial law: a KS statistic, the moments `E|x|^q` for `q` in
/// `moments`, and `P(|x| > t)` for `t` in `thresholds`.
pub fn radial_diagnostics(
    run: &ChainRun,
    p: &IsotropicPotential,
    burn_in: usize,
    moments: &[f64],
    thresholds: &[f64],
) -> Result<RadialDiagnostics> {
    if run.dimension != p.dimension() {
        return invalid(format!(
            "run has dimension {} but target {}",
            run.dimension,
            p.dimension()
        ));
    }
    if let Some(k) = p.tail_index() {
        if let Some(q) = moments.iter().find(|q| **q >= k) {
            return Err(TulaError::MomentDoesNotExist {
                order: *q,
                tail_index: k,
            });
        }
    }
    let radii = run.x_radii(burn_in);
    let samples: usize = radii.iter().map(Vec::len).sum();
    if samples == 0 {
        return invalid(format!("no samples remain after burn-in {burn_in}"));
    }
    let reference = RadialReference::new(p)?;
    let table = reference.cdf_table(1 << 16);

    let pit: Vec<Vec<f64>> = radii
        .iter()
        .map(|c| c.iter().map(|r| table.cdf(*r)).collect())
        .collect();
    let mut all: Vec<f64> = pit.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let n = all.len() as f64;
    let ks_statistic = all
        .iter()
        .enumerate()
        .map(|(i, f)| ((i + 1) as f64 / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max);
    let ess: f64 = pit
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| effective_sample_size(c))
        .sum();
    let ks_critical_1pct = KS_QUANTILE_1PCT / ess.sqrt();

    let mut moment_checks = Vec::with_capacity(moments.len());
    for &q in moments {
        let series: Vec<Vec<f64>> = radii
            .iter()
            .map(|c| c.iter().map(|r| r.powf(q)).collect())
            .collect();
        let (empirical, mcse) = pooled_mean(&series);
        let reference = reference.moment(q)?;
        moment_checks.push(MomentCheck {
            order: q,
            empirical,
            reference,
            mcse,
            z_score: (empirical - reference) / mcse,
        });
    }
    let mut tail_checks = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let series: Vec<Vec<f64>> = radii
            .iter()
            .map(|c| c.iter().map(|r| f64::from(u8::from(*r > t))).collect())
            .collect();
        let (empirical, mcse) = pooled_mean(&series);
        let reference = reference.tail_probability(t)?;
        tail_checks.push(TailCheck {
            threshold: t,
            empirical,
            reference,
            mcse,
            z_score: (empirical - reference) / mcse,
        });
    }
    Ok(RadialDiagnostics {
        samples,
        chains: radii.len(),
        effective_sample_size: ess,
        ks_statistic,
        ks_critical_1pct,
        ks_pass: ks_statistic < ks_critical_1pct,
        moments: moment_checks,
        tail_frequencies: tail_checks,
    })
}

fn scan_domain(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const N: usize = 4000;
    let point = |t: f64| match (lo.is_finite(), hi.is_finite()) {
        (true, true) => lo + (hi - lo) * t,
        (false, false) => {
            let s = 2.0 * t - 1.0;
            s / (1.0 - s * s)
        }
        (true, false) => lo + t / (1.0 - t),
        (false, true) => hi - (1.0 - t) / t,
    };
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for i in 1..N {
        let x = point(i as f64 / N as f64);
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

// ∫ exp(f − shift) · w over [lo, hi], split at `mode`.
fn split_integral(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, mode: f64) -> Result<f64> {
    let left = integrate(g, lo, mode, 1e-14, 1e-12)?;
    let right = integrate(g, mode, hi, 1e-14, 1e-12)?;
    Ok(left.value + right.value)
}

/// `KL(a‖b)` for unnormalized log densities on `[lo, hi]` (endpoints may be
/// infinite). Both densities are normalized numerically.
pub fn kl_quadrature_1d(
    log_a: &dyn Fn(f64) -> f64,
    log_b: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(lo < hi) {
        return invalid(format!("empty domain [{lo}, {hi}]"));
    }
    let (mode_a, sa) = scan_domain(log_a, lo, hi);
    let (mode_b, sb) = scan_domain(log_b, lo, hi);
    if !(sa.is_finite() && sb.is_finite()) {
        return Err(TulaError::Quadrature(
            "log density is not finite on the domain".into(),
        ));
    }
    let wa = |x: f64| (log_a(x) - sa).exp();
    let wb = |x: f64| (log_b(x) - sb).exp();
    let za = split_integral(&wa, lo, hi, mode_a)?;
    let zb = split_integral(&wb, lo, hi, mode_b)?;
    let cross = |x: f64| {
        let w = wa(x);
        if w == 0.0 {
            0.0
        } else {
            w * (log_a(x) - log_b(x))
        }
    };
    let e = split_integral(&cross, lo, hi, mode_a)?;
    let kl = e / za - (sa + za.ln()) + (sb + zb.ln());
    if !kl.is_finite() {
        return Err(TulaError::Quadrature("divergence is not finite".into()));
    }
    Ok(kl)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub points: usize,
    pub max_gradient_rel_error: f64,
    pub max_eigenvalue_rel_error: f64,
    pub worst_gradient_radius: f64,
    pub worst_eigenvalue_radius: f64,
}

/// Central-difference oracle for `∇f_h` and the two Hessian eigenvalues at
/// `points` random `y` with `|y| ∈ [r_min, r_max]`, skipping a shell of
/// half-width `1e-3` around the knot. Errors are relative to
/// `max(|reference|, 1)`.
pub fn gradient_check(
    tp: &TransformedPotential,
    points: usize,
    r_min: f64,
    r_max: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    if !(r_min > 0.0 && r_max > r_min) {
        return invalid(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]"));
    }
    let d = tp.dimension();
    let knot = tp.transform.knot();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        points: 0,
        max_gradient_rel_error: 0.0,
        max_eigenvalue_rel_error: 0.0,
        worst_gradient_radius: 0.0,
        worst_eigenvalue_radius: 0.0,
    };
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    while report.points < points {
        let r = rng.random_range(r_min..r_max);
        if (r - knot).abs() < 1e-3 {
            continue;
        }
        let mut y: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = crate::transform::norm(&y);
        if !(n > 0.0) {
            continue;
        }
        y.iter_mut().for_each(|v| *v *= r / n);
        report.points += 1;

        let grad = tp.transformed_gradient(&y);
        let h = 1e-5 * r.max(1.0);
        let mut yp = y.clone();
        for i in 0..d {
            yp[i] = y[i] + h;
            let fp = tp.transformed_value(&yp);
            yp[i] = y[i] - h;
            let fm = tp.transformed_value(&yp);
            yp[i] = y[i];
            let e = rel(grad[i], (fp - fm) / (2.0 * h));
            if e > report.max_gradient_rel_error {
                report.max_gradient_rel_error = e;
                report.worst_gradient_radius = r;
            }
        }

        let eig = tp.hessian_eigenvalues(r)?;
        let h2 = 1e-4 * r.max(1.0);
        let (fp, f0, fm) = (
            tp.value_at_radius(r + h2),
            tp.value_at_radius(r),
            tp.value_at_radius(r - h2),
        );
        let radial = (fp - 2.0 * f0 + fm) / (h2 * h2);
        let tangential = (fp - fm) / (2.0 * h2 * r);
        for e in [
            rel(eig.lambda_radial, radial),
            rel(eig.lambda_tangential, tangential),
        ] {
            if e > report.max_eigenvalue_rel_error {
                report.max_eigenvalue_rel_error = e;
                report.worst_eigenvalue_radius = r;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{run_tula, SamplerConfig};
    use crate::targets::{make_example, make_multivariate_t, ZooExample};
    use crate::transform::RadialTransform;
    use proptest::prelude::*;
    use rand::Rng;

    fn t_potential(d: usize, kappa: f64, b: f64) -> TransformedPotential {
        let p = make_multivariate_t(d, kappa).unwrap();
        let t = RadialTransform::exponential(b, 2.0, d).unwrap();
        TransformedPotential::new(p, t).unwrap()
    }

    fn example(e: ZooExample, d: usize) -> TransformedPotential {
        let z = make_example(e, d, &BTreeMap::new()).unwrap();
        TransformedPotential::new(z.potential, z.transform).unwrap()
    }

    fn consts(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn assumption_names_parse() {
        assert_eq!(
            "A1".parse::<Assumption>().unwrap(),
            Assumption::A1Dissipativity
        );
        assert_eq!(
            "a4_gradient_lipschitz".parse::<Assumption>().unwrap(),
            Assumption::A4GradientLipschitz
        );
        assert_eq!("tail".parse::<Assumption>().unwrap(), Assumption::A5Tail);
        assert!(matches!(
            "A6".parse::<Assumption>(),
            Err(TulaError::InvalidArgument(_))
        ));
        let json = serde_json::to_string(&Assumption::A2DegenerateConvexity).unwrap();
        assert_eq!(json, "\"A2_degenerate_convexity\"");
    }

    #[test]
    fn dissipativity_for_t() {
        let tp = t_potential(3, 2.0, 1.0);
        let r = check_assumption(
            &tp,
            Assumption::A1Dissipativity,
            None,
            &consts(&[("A", 4.0), ("alpha", 2.0)]),
        )
        .unwrap();
        assert!(r.pass);
        assert!(r.fitted_constants["B"] >= 0.0);
        assert!(r.satisfied_from_radius.unwrap() < 10.0);
    }

    #[test]
    fn lipschitz_for_t_and_gaussian() {
        let tp = t_potential(3, 2.0, 1.0);
        let r = check_assumption(
            &tp,
            Assumption::A4GradientLipschitz,
            None,
            &consts(&[("L", 8.0)]),
        )
        .unwrap();
        assert!(r.pass);
        let fitted =
            check_assumption(&tp, Assumption::A4GradientLipschitz, None, &BTreeMap::new()).unwrap();
        assert!(fitted.pass);
        assert!(fitted.fitted_constants["L"] <= 8.0);

        let gauss =
            IsotropicPotential::custom("gauss", 2, None, |r| [r * r, 2.0 * r, 2.0]).unwrap();
        let tp =
            TransformedPotential::new(gauss, RadialTransform::exponential(1.0, 2.0, 2).unwrap())
                .unwrap();
        for l in [10.0, 1e6, 1e300] {
            let r = check_assumption(
                &tp,
                Assumption::A4GradientLipschitz,
                None,
                &consts(&[("L", l)]),
            )
            .unwrap();
            assert!(!r.pass, "L = {l}");
        }
        let fitted =
            check_assumption(&tp, Assumption::A4GradientLipschitz, None, &BTreeMap::new()).unwrap();
        assert!(!fitted.pass);
    }

    #[test]
    fn degenerate_and_strong_convexity_for_t() {
        // λ → 2κb with κ = 2, b = 1
        let tp = t_potential(3, 2.0, 1.0);
        let r = check_assumption(
            &tp,
            Assumption::A2DegenerateConvexity,
            None,
            &consts(&[("mu", 3.9), ("theta", 0.0)]),
        )
        .unwrap();
        assert!(r.pass);
        let bad = check_assumption(
            &tp,
            Assumption::A2DegenerateConvexity,
            None,
            &consts(&[("mu", 4.1), ("theta", 0.0)]),
        )
        .unwrap();
        assert!(!bad.pass);
        let fitted =
            check_assumption(&tp, Assumption::A3StrongConvexity, None, &BTreeMap::new()).unwrap();
        assert!(fitted.pass);
        assert!((fitted.fitted_constants["rho"] - 4.0).abs() < 0.05);
    }

    #[test]
    fn tail_assumption_for_t() {
        let tp = t_potential(2, 3.0, 1.0 / 3.0);
        let r = check_assumption(&tp, Assumption::A5Tail, None, &BTreeMap::new()).unwrap();
        assert!(r.pass);
        assert!(r.lhs.windows(2).all(|w| w[1] <= w[0]));
        // P(|x| ≥ s) = (1 + s²)^{-κ/2} for d = 2.
        let p = make_multivariate_t(2, 3.0).unwrap();
        let reference = RadialReference::new(&p).unwrap();
        for s in [0.5, 2.0, 40.0, 1e6] {
            let exact = -1.5 * (s * s as f64).ln_1p();
            let got = reference.log_tail_probability(s.ln()).unwrap();
            assert!(
                (got - exact).abs() < 1e-8 * exact.abs().max(1.0),
                "s = {s}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn grid_validation() {
        let tp = t_potential(2, 3.0, 1.0);
        let none = BTreeMap::new();
        assert!(
            check_assumption(&tp, Assumption::A3StrongConvexity, Some(&[2.0, 1.5]), &none).is_err()
        );
        assert!(
            check_assumption(&tp, Assumption::A3StrongConvexity, Some(&[0.5, 1.5]), &none).is_err()
        );
        assert!(check_assumption(&tp, Assumption::A3StrongConvexity, Some(&[]), &none).is_err());
        let wrong = consts(&[("L", 1.0)]);
        assert!(check_assumption(&tp, Assumption::A3StrongConvexity, None, &wrong).is_err());
    }

    #[test]
    fn lsi_examples() {
        for d in [2usize, 4] {
            let e3 = estimate_lsi(&example(ZooExample::Example3, d), 10.0, 2001).unwrap();
            let df = d as f64;
            assert!((e3.a0 - (16.0 / (7.0 * df)).sqrt()).abs() < 1e-3);
            assert!((e3.bound - 16.0 / (7.0 * df)).abs() < 0.01 * 16.0 / (7.0 * df));
            let e6 = estimate_lsi(&example(ZooExample::Example6, d), 10.0, 2001).unwrap();
            assert!((e6.bound - 2.0 / df).abs() < 1e-6 * 2.0 / df);
            assert!(e6.root_residual < 1e-10);
            assert!(e6.beta_bar.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn lsi_rejects_nonconvex() {
        let tp = t_potential(3, 2.0, 1.0);
        assert!(matches!(
            estimate_lsi(&tp, 10.0, 501),
            Err(TulaError::NotApplicable(_))
        ));
    }

    #[test]
    fn classifier_examples() {
        let v = classify_regime(
            &RegimeInput::Dissipativity {
                alpha: 2.0,
                beta: 2.0,
                b: 1.0,
                a: 6.0,
                b_const: None,
            },
            2.0,
            3,
        )
        .unwrap();
        assert_eq!(v.regime, Regime::SuperPoincare);
        assert!(v.witness.is_some());
        let v = classify_regime(
            &RegimeInput::StrongConvexity {
                rho: 4.0,
                beta: 2.0,
                b: 1.0,
            },
            2.0,
            2,
        )
        .unwrap();
        assert_eq!(v.regime, Regime::Poincare);
        let v = classify_regime(
            &RegimeInput::StrongConvexity {
                rho: 4.0,
                beta: 2.0,
                b: 1.0,
            },
            2.0,
            3,
        )
        .unwrap();
        assert_eq!(v.regime, Regime::WeakPoincare);
        let v = classify_regime(
            &RegimeInput::DegenerateConvexity {
                mu: 1.0,
                theta: 0.5,
                beta: 2.0,
                b: 1.0,
            },
            1.0,
            2,
        )
        .unwrap();
        assert_eq!(v.regime, Regime::WeakPoincare);
        assert!(classify_regime(
            &RegimeInput::StrongConvexity {
                rho: -1.0,
                beta: 2.0,
                b: 1.0
            },
            1.0,
            2
        )
        .is_err());
        assert!(classify_regime(
            &RegimeInput::StrongConvexity {
                rho: 1.0,
                beta: 2.5,
                b: 1.0
            },
            1.0,
            2
        )
        .is_err());
    }

    #[test]
    fn regime_input_json() {
        let input = RegimeInput::Dissipativity {
            alpha: 2.0,
            beta: 2.0,
            b: 1.0,
            a: 6.0,
            b_const: Some(0.5),
        };
        let s = serde_json::to_string(&input).unwrap();
        assert!(s.contains("\"assumption\":\"dissipativity\""));
        assert_eq!(serde_json::from_str::<RegimeInput>(&s).unwrap(), input);
    }

    #[test]
    fn kl_gaussians() {
        let a = |x: f64| -0.5 * x * x;
        let b = |x: f64| -0.5 * (x - 1.0) * (x - 1.0);
        let kl = kl_quadrature_1d(&a, &b, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((kl - 0.5).abs() < 1e-8);
        assert!(
            kl_quadrature_1d(&a, &a, f64::NEG_INFINITY, f64::INFINITY)
                .unwrap()
                .abs()
                < 1e-10
        );
        // Scale mismatch: KL(N(0,1)‖N(0,4)) = ln 2 + 1/8 − 1/2.
        let c = |x: f64| -x * x / 8.0;
        let kl = kl_quadrature_1d(&a, &c, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((kl - (std::f64::consts::LN_2 + 0.125 - 0.5)).abs() < 1e-8);
    }

    #[test]
    fn ess_of_iid_and_ar1() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let iid: Vec<f64> = (0..20000)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let e = effective_sample_size(&iid);
        assert!(e > 15000.0 && e <= 20000.0, "{e}");
        // AR(1) with φ = 0.9 has τ = (1 + φ)/(1 − φ) = 19.
        let mut x = 0.0;
        let ar: Vec<f64> = (0..200000)
            .map(|_| {
                x = 0.9 * x + rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        let e = effective_sample_size(&ar);
        assert!((e - 200000.0 / 19.0).abs() < 0.15 * 200000.0 / 19.0, "{e}");
    }

    #[test]
    fn moments_and_cdf_of_t() {
        // d = 1, κ = 3: Student t with 3 dof scaled by 1/√3; E|x| = 2/π.
        let p = make_multivariate_t(1, 3.0).unwrap();
        let reference = RadialReference::new(&p).unwrap();
        assert!((reference.moment(1.0).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-9);
        assert!(matches!(
            reference.moment(3.0),
            Err(TulaError::MomentDoesNotExist { .. })
        ));
        let table = reference.cdf_table(1 << 16);
        // d = 2: P(|x| ≤ s) = 1 − (1 + s²)^{-3/2}
        let p2 = make_multivariate_t(2, 3.0).unwrap();
        let table2 = RadialReference::new(&p2).unwrap().cdf_table(1 << 16);
        for s in [0.1, 1.0, 5.0] {
            let exact = 1.0 - (1.0 + s * s as f64).powf(-1.5);
            assert!((table2.cdf(s) - exact).abs() < 1e-6);
        }
        assert_eq!(table.cdf(0.0), 0.0);
    }

    #[test]
    fn diagnostics_errors() {
        let tp = t_potential(2, 3.0, 1.0 / 3.0);
        let run = run_tula(&tp, &SamplerConfig::new(0.01, 20, 1)).unwrap();
        assert!(matches!(
            radial_diagnostics(&run, &tp.target, 100, &[], &[]),
            Err(TulaError::InvalidArgument(_))
        ));
        assert!(matches!(
            radial_diagnostics(&run, &tp.target, 0, &[4.0], &[]),
            Err(TulaError::MomentDoesNotExist { .. })
        ));
        let ok = radial_diagnostics(&run, &tp.target, 5, &[1.0], &[5.0]).unwrap();
        assert_eq!(ok.samples, 15);
    }

    #[test]
    fn gradcheck_on_examples() {
        for e in [ZooExample::Example3, ZooExample::Example6] {
            let rep = gradient_check(&example(e, 2), 200, 0.05, 4.0, 7).unwrap();
            assert!(rep.max_gradient_rel_error < 1e-5, "{rep:?}");
            assert!(rep.max_eigenvalue_rel_error < 1e-4, "{rep:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn constant_beta_bar_closed_form(c in 0.01f64..100.0, n in 3usize..200) {
            let grid: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
            let (a0, bound, res) = corollary_bound(&grid, &vec![c; n], 2 * n).unwrap();
            prop_assert!((a0 - (2.0 / c).sqrt()).abs() < 1e-10 * (2.0 / c).sqrt().max(1.0));
            prop_assert!((bound - 2.0 / c).abs() < 1e-10 * (2.0 / c).max(1.0));
            prop_assert!(res < 1e-10);
        }

        #[test]
        fn classifier_is_deterministic(
            rho in 0.1f64..10.0, b in 0.1f64..5.0, beta in 1.05f64..2.0, vt in 0.05f64..10.0, d in 1usize..10,
        ) {
            for beta in [beta, 2.0] {
                let input = RegimeInput::StrongConvexity { rho, beta, b };
                let v1 = classify_regime(&input, vt, d).unwrap();
                let v2 = classify_regime(&input, vt, d).unwrap();
                prop_assert_eq!(&v1, &v2);
                prop_assert_eq!(v1.witness.is_some(), v1.regime == Regime::SuperPoincare);
            }
        }

        #[test]
        fn t_regime_matches_tail_index(kappa in 0.1f64..10.0, vt in 0.1f64..10.0, b in 0.1f64..3.0) {
            prop_assume!((kappa - vt).abs() > 1e-6);
            let input = RegimeInput::Dissipativity { alpha: 2.0, beta: 2.0, b, a: 2.0 * b * kappa, b_const: None };
            let v = classify_regime(&input, vt, 3).unwrap();
            let expected = if kappa > vt { Regime::SuperPoincare } else { Regime::WeakPoincare };
            prop_assert_eq!(v.regime, expected);
        }

        #[test]
        fn lipschitz_check_monotone_in_l(l1 in 1.0f64..20.0, l2 in 1.0f64..20.0) {
            let tp = t_potential(3, 2.0, 1.0);
            let grid = geometric_grid(1.0, 30.0, 64);
            let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
            let a = check_assumption(&tp, Assumption::A4GradientLipschitz, Some(&grid), &consts(&[("L", lo)])).unwrap();
            let b = check_assumption(&tp, Assumption::A4GradientLipschitz, Some(&grid), &consts(&[("L", hi)])).unwrap();
            prop_assert!(!a.pass || b.pass);
            if let (Some(ra), Some(rb)) = (a.satisfied_from_radius, b.satisfied_from_radius) {
                prop_assert!(rb <= ra);
            }
        }

        #[test]
        fn dissipativity_check_monotone_in_a(a1 in 0.5f64..8.0, a2 in 0.5f64..8.0) {
            let tp = t_potential(3, 2.0, 1.0);
            let grid = geometric_grid(1.0, 30.0, 64);
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            let c = |a: f64| consts(&[("A", a), ("B", 1.0), ("alpha", 2.0)]);
            let weak = check_assumption(&tp, Assumption::A1Dissipativity, Some(&grid), &c(lo)).unwrap();
            let strong = check_assumption(&tp, Assumption::A1Dissipativity, Some(&grid), &c(hi)).unwrap();
            prop_assert!(!strong.pass || weak.pass);
        }
    }
}
