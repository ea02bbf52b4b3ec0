//! ULA and TULA chains with per-chain ChaCha streams, plus the step-size and
//! iteration planner.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{target_gradient_into, TransformedPotential};
use crate::error::{invalid, Result, TulaError};
use crate::targets::IsotropicPotential;
use crate::transform::RadialTransform;

/// Starting distribution of every chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialPoint {
    /// Gaussian at the origin with scale `1/sqrt(L̂)`, `L̂` the largest
    /// absolute Hessian eigenvalue found on a radial grid.
    #[default]
    Auto,
    Origin,
    Point {
        y: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub step_size: f64,
    pub num_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialPoint,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default = "one")]
    pub num_chains: usize,
}

fn one() -> usize {
    1
}

impl SamplerConfig {
    pub fn new(step_size: f64, num_steps: usize, seed: u64) -> Self {
        Self {
            step_size,
            num_steps,
            seed,
            initial: InitialPoint::Auto,
            thin: 1,
            num_chains: 1,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return invalid(format!(
                "step size must be positive, got {}",
                self.step_size
            ));
        }
        if self.num_steps == 0 {
            return invalid("num_steps must be at least 1");
        }
        if self.thin == 0 {
            return invalid("thin must be at least 1");
        }
        if self.num_chains == 0 {
            return invalid("num_chains must be at least 1");
        }
        match &self.initial {
            InitialPoint::Point { y } if y.len() != d => invalid(format!(
                "initial point has length {}, expected {d}",
                y.len()
            )),
            InitialPoint::Gaussian { mean, scale } => {
                if mean.len() != d {
                    invalid(format!(
                        "initial mean has length {}, expected {d}",
                        mean.len()
                    ))
                } else if !(*scale >= 0.0) {
                    invalid("initial scale must be nonnegative")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// One chain's recorded iterates in the sampling space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub index: usize,
    /// Iteration numbers of the recorded iterates (`thin`, `2·thin`, ...).
    pub steps: Vec<usize>,
    /// Row-major `steps.len() × d` iterates.
    pub y: Vec<f64>,
    /// First step with a non-finite iterate, if any.
    pub diverged_at: Option<usize>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Output of [`run_tula`] or [`run_ula`]. `x` samples are computed from the
/// stored `y` through the transform (identity for ULA).
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub config: SamplerConfig,
    pub dimension: usize,
    pub chains: Vec<Chain>,
    pub divergence_flag: bool,
    transform: Option<RadialTransform>,
}

impl ChainRun {
    pub fn transform(&self) -> Option<&RadialTransform> {
        self.transform.as_ref()
    }

    pub fn y_sample(&self, chain: usize, k: usize) -> &[f64] {
        let d = self.dimension;
        &self.chains[chain].y[k * d..(k + 1) * d]
    }

    /// `x_k = h(y_k)`.
    pub fn x_sample(&self, chain: usize, k: usize) -> Vec<f64> {
        let y = self.y_sample(chain, k);
        match &self.transform {
            Some(t) => t.h_forward(y),
            None => y.to_vec(),
        }
    }

    pub fn y_samples(&self, chain: usize) -> Vec<Vec<f64>> {
        (0..self.chains[chain].len())
            .map(|k| self.y_sample(chain, k).to_vec())
            .collect()
    }

    pub fn x_samples(&self, chain: usize) -> Vec<Vec<f64>> {
        (0..self.chains[chain].len())
            .map(|k| self.x_sample(chain, k))
            .collect()
    }

    /// `|x|` of every recorded iterate after dropping `burn_in` recorded
    /// iterates from each chain, chains concatenated in order.
    pub fn x_radii(&self, burn_in: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .enumerate()
            .map(|(c, ch)| {
                (burn_in.min(ch.len())..ch.len())
                    .map(|k| {
                        let r = crate::transform::norm(self.y_sample(c, k));
                        match &self.transform {
                            Some(t) => t.g(r),
                            None => r,
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `y − γ ∇f_h(y) + sqrt(2γ) ξ`.
pub fn tula_step(
    tp: &TransformedPotential,
    y: &[f64],
    gamma: f64,
    noise: &[f64],
) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return invalid(format!("step size must be positive, got {gamma}"));
    }
    if y.len() != tp.dimension() || noise.len() != y.len() {
        return invalid("state and noise must match the target dimension");
    }
    if y.iter().chain(noise).any(|v| !v.is_finite()) {
        return Err(TulaError::Divergence { step: 1 });
    }
    let mut grad = vec![0.0; y.len()];
    tp.gradient_into(y, &mut grad);
    let s = (2.0 * gamma).sqrt();
    let out: Vec<f64> = y
        .iter()
        .zip(&grad)
        .zip(noise)
        .map(|((y, g), n)| y - gamma * g + s * n)
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(TulaError::Divergence { step: 1 });
    }
    Ok(out)
}

/// Largest `|λ|` of `∇²f_h` over a radial grid on `[1e-4, 10]`.
pub fn curvature_scale(tp: &TransformedPotential) -> f64 {
    crate::transform::geometric_grid(1e-4, 10.0, 200)
        .into_iter()
        .filter_map(|r| tp.hessian_eigenvalues(r).ok())
        .map(|e| e.lambda_radial.abs().max(e.lambda_tangential.abs()))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

fn chain_rng(seed: u64, chain: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var("TULA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    match threads.filter(|&n| n > 0) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

fn run_chains<G>(
    cfg: &SamplerConfig,
    d: usize,
    auto_scale: f64,
    schedule: &(dyn Fn(usize) -> f64 + Sync),
    grad: G,
) -> Vec<Chain>
where
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    let one_chain = |c: usize| -> Chain {
        let mut rng = chain_rng(cfg.seed, c);
        let normal = |rng: &mut ChaCha20Rng| -> f64 { StandardNormal.sample(rng) };
        let mut y: Vec<f64> = match &cfg.initial {
            InitialPoint::Origin => vec![0.0; d],
            InitialPoint::Point { y } => y.clone(),
            InitialPoint::Gaussian { mean, scale } => {
                mean.iter().map(|m| m + scale * normal(&mut rng)).collect()
            }
            InitialPoint::Auto => (0..d).map(|_| auto_scale * normal(&mut rng)).collect(),
        };
        let cap = cfg.num_steps / cfg.thin;
        let mut steps = Vec::with_capacity(cap);
        let mut rec = Vec::with_capacity(cap * d);
        let mut g = vec![0.0; d];
        let mut diverged_at = None;
        for step in 1..=cfg.num_steps {
            let gamma = schedule(step);
            let s = (2.0 * gamma).sqrt();
            grad(&y, &mut g);
            let mut finite = true;
            for (yi, gi) in y.iter_mut().zip(&g) {
                *yi += -gamma * gi + s * normal(&mut rng);
                finite &= yi.is_finite();
            }
            if !finite {
                diverged_at = Some(step);
                break;
            }
            if step % cfg.thin == 0 {
                steps.push(step);
                rec.extend_from_slice(&y);
            }
        }
        Chain {
            index: c,
            steps,
            y: rec,
            diverged_at,
        }
    };
    with_pool(|| (0..cfg.num_chains).into_par_iter().map(one_chain).collect())
}

/// TULA: Langevin steps on `f_h`, samples mapped back by `h`.
pub fn run_tula(tp: &TransformedPotential, cfg: &SamplerConfig) -> Result<ChainRun> {
    let gamma = cfg.step_size;
    run_tula_with_schedule(tp, cfg, &move |_| gamma)
}

/// As [`run_tula`] with step size `schedule(n)` at iteration `n` (1-based);
/// `cfg.step_size` is only validated.
pub fn run_tula_with_schedule(
    tp: &TransformedPotential,
    cfg: &SamplerConfig,
    schedule: &(dyn Fn(usize) -> f64 + Sync),
) -> Result<ChainRun> {
    let d = tp.dimension();
    cfg.validate(d)?;
    let scale = match cfg.initial {
        InitialPoint::Auto => 1.0 / curvature_scale(tp).max(1e-12).sqrt(),
        _ => 0.0,
    };
    let chains = run_chains(cfg, d, scale, schedule, |y, g| tp.gradient_into(y, g));
    Ok(finish(cfg, d, chains, Some(tp.transform.clone())))
}

/// Plain ULA on the untransformed target.
pub fn run_ula(p: &IsotropicPotential, cfg: &SamplerConfig) -> Result<ChainRun> {
    let d = p.dimension();
    cfg.validate(d)?;
    let scale = match cfg.initial {
        InitialPoint::Auto => {
            let l = crate::transform::geometric_grid(1e-4, 10.0, 200)
                .into_iter()
                .map(|r| {
                    let [_, f1, f2] = p.derivs(r);
                    f2.abs().max((f1 / r).abs())
                })
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max);
            1.0 / l.max(1e-12).sqrt()
        }
        _ => 0.0,
    };
    let gamma = cfg.step_size;
    let chains = run_chains(cfg, d, scale, &move |_| gamma, |x, g| {
        target_gradient_into(p, x, g)
    });
    Ok(finish(cfg, d, chains, None))
}

fn finish(
    cfg: &SamplerConfig,
    d: usize,
    chains: Vec<Chain>,
    transform: Option<RadialTransform>,
) -> ChainRun {
    let divergence_flag = chains.iter().any(|c| c.diverged_at.is_some());
    ChainRun {
        config: cfg.clone(),
        dimension: d,
        chains,
        divergence_flag,
        transform,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub gamma: f64,
    pub num_steps: u64,
}

/// `γ = min(1, ε/(4d)) / (2 L_h² C)` and `n = ceil(C/(2γ) · log(2 H0/ε))`,
/// with the hidden constant in the iteration count taken as 1.
pub fn plan_step_size(l_h: f64, c_lsi: f64, d: usize, eps: f64, h0: f64) -> Result<StepPlan> {
    for (name, v) in [("L_h", l_h), ("C_lsi", c_lsi), ("epsilon", eps), ("H0", h0)] {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} must be positive, got {v}"));
        }
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    let gamma = (eps / (4.0 * d as f64)).min(1.0) / (2.0 * l_h * l_h * c_lsi);
    let n = (c_lsi / (2.0 * gamma) * (2.0 * h0 / eps).ln())
        .ceil()
        .max(0.0);
    Ok(StepPlan {
        gamma,
        num_steps: n as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{make_example, make_multivariate_t, ZooExample};
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn ex6(d: usize) -> TransformedPotential {
        let mut p = BTreeMap::new();
        p.insert("vartheta".to_string(), 1.0);
        let e = make_example(ZooExample::Example6, d, &p).unwrap();
        TransformedPotential::new(e.potential, e.transform).unwrap()
    }

    fn t_b1() -> TransformedPotential {
        TransformedPotential::new(
            make_multivariate_t(2, 1.0).unwrap(),
            RadialTransform::exponential(1.0, 2.0, 2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn step_examples() {
        let y = tula_step(&ex6(2), &[1.0, 0.0], 0.1, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(y[0], 0.8, max_relative = 1e-9);
        assert_eq!(y[1], 0.0);
        let u = [0.3, -1.2];
        let y = tula_step(&ex6(2), &[0.0, 0.0], 0.1, &u).unwrap();
        assert_relative_eq!(y[0], 0.2f64.sqrt() * u[0], max_relative = 1e-15);
        let y = tula_step(&t_b1(), &[1.0, 0.0], 0.01, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(y[0], 0.98715217, max_relative = 1e-8);
        let err = tula_step(&ex6(2), &[f64::NAN, 0.0], 0.1, &[0.0, 0.0]).unwrap_err();
        assert_eq!(err, TulaError::Divergence { step: 1 });
    }

    #[test]
    fn single_step_run_is_one_step() {
        let tp = ex6(2);
        let mut cfg = SamplerConfig::new(0.05, 1, 11);
        cfg.initial = InitialPoint::Point { y: vec![0.5, -0.5] };
        let run = run_tula(&tp, &cfg).unwrap();
        let mut rng = chain_rng(11, 0);
        let noise: Vec<f64> = (0..2).map(|_| StandardNormal.sample(&mut rng)).collect();
        let want = tula_step(&tp, &[0.5, -0.5], 0.05, &noise).unwrap();
        assert_eq!(run.y_sample(0, 0), want.as_slice());
    }

    #[test]
    fn reproducible_and_streams_differ() {
        let tp = t_b1();
        let mut cfg = SamplerConfig::new(0.01, 500, 42);
        cfg.num_chains = 3;
        let a = run_tula(&tp, &cfg).unwrap();
        let b = run_tula(&tp, &cfg).unwrap();
        assert_eq!(a.chains, b.chains);
        assert_ne!(a.chains[0].y, a.chains[1].y);
    }

    #[test]
    fn large_step_diverges_with_prefix() {
        let tp = ex6(2);
        let mut cfg = SamplerConfig::new(1e3, 1000, 1);
        cfg.initial = InitialPoint::Point { y: vec![1.0, 0.0] };
        let run = run_tula(&tp, &cfg).unwrap();
        assert!(run.divergence_flag);
        let at = run.chains[0].diverged_at.unwrap();
        assert_eq!(run.chains[0].len(), at - 1);
    }

    #[test]
    fn x_samples_are_images_of_y() {
        let tp = t_b1();
        let mut cfg = SamplerConfig::new(0.01, 300, 3);
        cfg.thin = 7;
        let run = run_tula(&tp, &cfg).unwrap();
        assert_eq!(run.chains[0].steps[0], 7);
        for k in 0..run.chains[0].len() {
            let x = run.x_sample(0, k);
            let want = tp.transform.h_forward(run.y_sample(0, k));
            for (a, b) in x.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn ula_with_constant_potential_is_brownian() {
        let p = IsotropicPotential::custom("flat", 2, None, |_| [0.0, 0.0, 0.0]).unwrap();
        let mut cfg = SamplerConfig::new(0.5, 3, 9);
        cfg.initial = InitialPoint::Origin;
        let run = run_ula(&p, &cfg).unwrap();
        let mut rng = chain_rng(9, 0);
        let mut y = [0.0, 0.0];
        for k in 0..3 {
            for v in y.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += 1.0 * z;
            }
            assert_eq!(run.y_sample(0, k), &y);
        }
        assert_eq!(run.x_sample(0, 0), run.y_sample(0, 0).to_vec());
    }

    #[test]
    fn deterministic_contraction_on_quadratic() {
        let tp = ex6(3);
        let gamma = 0.1;
        let mut y = vec![2.0, -1.0, 0.5];
        let r0 = crate::transform::norm(&y);
        for k in 1..=20 {
            y = tula_step(&tp, &y, gamma, &[0.0; 3]).unwrap();
            let want = r0 * (1.0f64 - gamma * 3.0).abs().powi(k);
            assert_relative_eq!(crate::transform::norm(&y), want, max_relative = 1e-7);
        }
    }

    #[test]
    fn planner_example() {
        let plan = plan_step_size(8.0, 4.0 / 7.0, 4, 0.1, 4.0).unwrap();
        assert_relative_eq!(plan.gamma, 7.0 / 512.0 * (0.1 / 16.0), max_relative = 1e-15);
        let n = ((2.0 / 7.0) / plan.gamma * 80f64.ln()).ceil() as u64;
        assert_eq!(plan.num_steps, n);
        assert_eq!(n, 14653);
        let sat = plan_step_size(8.0, 4.0 / 7.0, 4, 20.0, 40.0).unwrap();
        assert_relative_eq!(sat.gamma, 7.0 / 512.0, max_relative = 1e-15);
        let half = plan_step_size(8.0, 4.0 / 7.0, 4, 0.05, 4.0).unwrap();
        assert_relative_eq!(half.gamma, plan.gamma / 2.0, max_relative = 1e-15);
        assert!(plan_step_size(0.0, 1.0, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let tp = ex6(2);
        assert!(run_tula(&tp, &SamplerConfig::new(0.0, 10, 1)).is_err());
        assert!(run_tula(&tp, &SamplerConfig::new(0.1, 0, 1)).is_err());
        let mut cfg = SamplerConfig::new(0.1, 10, 1);
        cfg.initial = InitialPoint::Point { y: vec![0.0; 3] };
        assert!(run_tula(&tp, &cfg).is_err());
    }

    #[test]
    fn schedule_hook_is_used() {
        let tp = ex6(2);
        let mut cfg = SamplerConfig::new(0.1, 2, 5);
        cfg.initial = InitialPoint::Point { y: vec![1.0, 1.0] };
        let a = run_tula_with_schedule(&tp, &cfg, &|_| 0.1).unwrap();
        let b = run_tula(&tp, &cfg).unwrap();
        assert_eq!(a.chains, b.chains);
        let c = run_tula_with_schedule(&tp, &cfg, &|n| 0.1 / n as f64).unwrap();
        assert_ne!(a.chains[0].y, c.chains[0].y);
    }
}
