//! Isotropic target potentials `f(|x|)` and the example zoo.
//!
//! Every potential exposes its radial derivatives both in `r` and in
//! `u = log r`; the log form lets the transformed potential be evaluated far
//! into the tail where `g(r)` overflows.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::transform::RadialTransform;

pub type RadialFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// `(d/2) r² + w log(1 + r²/2) + c`, or the warm-up form
/// `sqrt(1 + d² r⁴) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm {
    QuadraticLog { d: f64, w: f64, c: f64 },
    WarmUp { d: f64, c: f64 },
}

impl ClosedForm {
    /// `[Φ, Φ', Φ'']` at radius `r`.
    pub fn derivs(&self, r: f64) -> [f64; 3] {
        match *self {
            ClosedForm::QuadraticLog { d, w, c } => {
                let s = 1.0 + 0.5 * r * r;
                [
                    0.5 * d * r * r + w * s.ln() + c,
                    d * r + w * r / s,
                    d + w * (1.0 - 0.5 * r * r) / (s * s),
                ]
            }
            ClosedForm::WarmUp { d, c } => {
                let q = (1.0 + d * d * r.powi(4)).sqrt();
                let d2 = d * d;
                [
                    q + c,
                    2.0 * d2 * r.powi(3) / q,
                    // d/dr of 2d²r³ q^{-1}
                    6.0 * d2 * r * r / q - 4.0 * d2 * d2 * r.powi(6) / q.powi(3),
                ]
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivs(r)[0]
    }
}

/// Tail of Examples 2–6 in `u = log|x|`:
/// `a u + bl log u + cc log(1 + 2b/u) + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LogTail {
    a: f64,
    bl: f64,
    cc: f64,
    k: f64,
    b: f64,
}

impl LogTail {
    fn log_derivs(&self, u: f64) -> [f64; 3] {
        let LogTail { a, bl, cc, k, b } = *self;
        let v = u + 2.0 * b;
        [
            a * u + bl * u.ln() + cc * (2.0 * b / u).ln_1p() + k,
            a + bl / u - 2.0 * b * cc / (u * v),
            -bl / (u * u) + 2.0 * b * cc * (2.0 * u + 2.0 * b) / (u * u * v * v),
        ]
    }
}

#[derive(Clone)]
enum Kind {
    MultivariateT {
        kappa: f64,
    },
    /// Tail in log form above the seam image, pullback `Φ + J` below.
    Piecewise {
        tail: PieceTail,
        phi: ClosedForm,
        transform: Box<RadialTransform>,
    },
    Custom {
        f: RadialFn,
    },
}

#[derive(Clone, Copy)]
enum PieceTail {
    Log(LogTail),
    /// `sqrt(1 + x²) + (d/2) log x`.
    WarmUp {
        d: f64,
    },
}

/// Isotropic potential `f(|x|)` in dimension `d`.
#[derive(Clone)]
pub struct IsotropicPotential {
    dimension: usize,
    name: String,
    kind: Kind,
    tail_index: Option<f64>,
}

impl fmt::Debug for IsotropicPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IsotropicPotential")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("tail_index", &self.tail_index)
            .finish()
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl IsotropicPotential {
    /// Potential from a closure returning `[f, f', f'']` at radius `r`.
    pub fn custom(
        name: impl Into<String>,
        dimension: usize,
        tail_index: Option<f64>,
        f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Result<Self> {
        if dimension == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(Self {
            dimension,
            name: name.into(),
            kind: Kind::Custom { f: Arc::new(f) },
            tail_index,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Moments `E|x|^p` exist iff `p` is below this index; `None` if all do.
    pub fn tail_index(&self) -> Option<f64> {
        self.tail_index
    }

    /// `[f, f', f'']` at radius `r ≥ 0`.
    pub fn derivs(&self, r: f64) -> [f64; 3] {
        let d = self.dimension as f64;
        match &self.kind {
            Kind::MultivariateT { kappa } => {
                let s = 1.0 + r * r;
                let m = d + kappa;
                [
                    0.5 * m * (r * r).ln_1p(),
                    m * r / s,
                    m * (1.0 - r * r) / (s * s),
                ]
            }
            Kind::Custom { f } => f(r),
            Kind::Piecewise {
                tail,
                phi,
                transform,
            } => {
                if r >= transform.knot_image() {
                    let u = r.ln();
                    let [fv, fu, fuu] = tail.log_derivs(u);
                    [fv, fu / r, (fuu - fu) / (r * r)]
                } else {
                    let y = transform.g_inverse(r);
                    let [p0, p1, p2] = phi.derivs(y);
                    let [j0, j1, j2] = transform.log_det_jacobian_derivs(y);
                    let [_, g1, g2, _] = transform.bulk_derivs(y);
                    let a = p1 + j1;
                    [p0 + j0, a / g1, (p2 + j2 - a * g2 / g1) / (g1 * g1)]
                }
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivs(r)[0]
    }

    /// `[F, F', F'']` for `F(u) = f(e^u)`.
    pub fn log_derivs(&self, u: f64) -> [f64; 3] {
        let d = self.dimension as f64;
        match &self.kind {
            Kind::MultivariateT { kappa } => {
                let m = d + kappa;
                let s = logistic(2.0 * u);
                let sc = logistic(-2.0 * u);
                [0.5 * m * softplus(2.0 * u), m * s, 2.0 * m * s * sc]
            }
            Kind::Piecewise { phi, transform, .. } if u < transform.knot_image().ln() => {
                let y = transform.g_inverse_log(u);
                let [p0, p1, p2] = phi.derivs(y);
                let [j0, j1, j2] = transform.log_det_jacobian_derivs(y);
                let [_, l1, l2, _] = transform.log_profile(y);
                let a = p1 + j1;
                [p0 + j0, a / l1, ((p2 + j2) / l1 - a * l2 / (l1 * l1)) / l1]
            }
            Kind::Piecewise { tail, .. } => tail.log_derivs(u),
            Kind::Custom { .. } => {
                let x = u.exp();
                let [f, f1, f2] = self.derivs(x);
                [f, f1 * x, f2 * x * x + f1 * x]
            }
        }
    }

    /// Unnormalized log radial density `(d−1) log r − f(r)`.
    pub fn radial_log_density(&self, r: f64) -> f64 {
        let d = self.dimension as f64;
        let jac = if self.dimension == 1 {
            0.0
        } else {
            (d - 1.0) * r.ln()
        };
        jac - self.value(r)
    }

    /// Unnormalized log density of `u = log r`: `d u − F(u)`.
    pub fn log_radius_log_density(&self, u: f64) -> f64 {
        self.dimension as f64 * u - self.log_derivs(u)[0]
    }
}

impl PieceTail {
    fn log_derivs(&self, u: f64) -> [f64; 3] {
        match self {
            PieceTail::Log(t) => t.log_derivs(u),
            PieceTail::WarmUp { d } => {
                let x2 = (2.0 * u).exp();
                let q = (1.0 + x2).sqrt();
                [
                    q + 0.5 * d * u,
                    x2 / q + 0.5 * d,
                    x2 * (2.0 + x2) / (q * q * q),
                ]
            }
        }
    }
}

/// `f(r) = ((d+κ)/2) log(1 + r²)`.
pub fn make_multivariate_t(d: usize, kappa: f64) -> Result<IsotropicPotential> {
    if d == 0 {
        return invalid("dimension d must be at least 1");
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!(
            "degrees of freedom kappa must be positive, got {kappa}"
        ));
    }
    Ok(IsotropicPotential {
        dimension: d,
        name: format!("t{d}_{kappa}"),
        kind: Kind::MultivariateT { kappa },
        tail_index: Some(kappa),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZooExample {
    WarmUp,
    MultivariateT,
    Example2,
    Example3,
    Example4,
    Example5,
    Example6,
}

impl ZooExample {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "warmup" | "warm_up" => Self::WarmUp,
            "t" | "multivariate_t" => Self::MultivariateT,
            "example2" => Self::Example2,
            "example3" => Self::Example3,
            "example4" => Self::Example4,
            "example5" => Self::Example5,
            "example6" => Self::Example6,
            _ => return None,
        })
    }
}

/// A zoo potential together with the transform it is designed for.
#[derive(Debug, Clone)]
pub struct TargetZooEntry {
    pub potential: IsotropicPotential,
    pub example: ZooExample,
    pub parameters: BTreeMap<String, f64>,
    pub expected_transformed_form: Option<ClosedForm>,
    pub transform: RadialTransform,
}

fn take(params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return invalid(format!(
                "unknown parameter '{k}' (allowed: {})",
                allowed.join(", ")
            ));
        }
    }
    Ok(())
}

fn positive(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key).copied().or(default) {
        None => invalid(format!("parameter '{key}' is required")),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => invalid(format!("parameter '{key}' must be positive, got {v}")),
    }
}

/// Builds a zoo entry. Parameters by example:
/// - `MultivariateT`: `kappa` (required), `b` (default `d/(2κ)`).
/// - `Example2`: `kappa` (default 1), `upsilon` in `(−3/2, 15/2)` (default
///   1/2); `b` is tied to `d/(2κ)`.
/// - `Example3`..`Example6`: `vartheta` (default 1), `b` (default `d/(2ϑ)`).
/// - `WarmUp`: `R` (default 1).
pub fn make_example(
    example: ZooExample,
    d: usize,
    params: &BTreeMap<String, f64>,
) -> Result<TargetZooEntry> {
    if d == 0 {
        return invalid("dimension d must be at least 1");
    }
    let df = d as f64;
    let mut used = BTreeMap::new();
    let entry = match example {
        ZooExample::MultivariateT => {
            take(params, &["kappa", "b"])?;
            let kappa = positive(params, "kappa", None)?;
            let b = positive(params, "b", Some(df / (2.0 * kappa)))?;
            used.insert("kappa".into(), kappa);
            used.insert("b".into(), b);
            used.insert("beta".into(), 2.0);
            TargetZooEntry {
                potential: make_multivariate_t(d, kappa)?,
                example,
                parameters: used,
                expected_transformed_form: None,
                transform: RadialTransform::exponential(b, 2.0, d)?,
            }
        }
        ZooExample::WarmUp => {
            take(params, &["R"])?;
            let r = positive(params, "R", Some(1.0))?;
            used.insert("R".into(), r);
            let transform = RadialTransform::warm_up(d, r)?;
            let phi = ClosedForm::WarmUp {
                d: df,
                c: -0.5 * df * df.ln() - std::f64::consts::LN_2,
            };
            TargetZooEntry {
                potential: IsotropicPotential {
                    dimension: d,
                    name: "warmup".into(),
                    kind: Kind::Piecewise {
                        tail: PieceTail::WarmUp { d: df },
                        phi,
                        transform: Box::new(transform.clone()),
                    },
                    tail_index: None,
                },
                example,
                parameters: used,
                expected_transformed_form: Some(phi),
                transform,
            }
        }
        _ => {
            let ln2 = std::f64::consts::LN_2;
            let (b, theta, tail, phi) = if example == ZooExample::Example2 {
                take(params, &["kappa", "upsilon"])?;
                let kappa = positive(params, "kappa", Some(1.0))?;
                let ups = params.get("upsilon").copied().unwrap_or(0.5);
                if !(ups > -1.5 && ups < 7.5) {
                    return invalid(format!("upsilon must lie in (-3/2, 15/2), got {ups}"));
                }
                let b = df / (2.0 * kappa);
                used.insert("kappa".into(), kappa);
                used.insert("upsilon".into(), ups);
                let w = (0.5 + ups) * df;
                // (d+κ)/2 [log(1+x²) − log(1+x⁻²)] is exactly (d+κ) log x.
                let tail = LogTail {
                    a: df + kappa,
                    bl: ups * df + 1.0,
                    cc: w,
                    k: 0.0,
                    b,
                };
                let c = ups * df * b.ln() + (w - 1.0) * ln2;
                (b, kappa, tail, ClosedForm::QuadraticLog { d: df, w, c })
            } else {
                take(params, &["vartheta", "b"])?;
                let theta = positive(params, "vartheta", Some(1.0))?;
                let b = positive(params, "b", Some(df / (2.0 * theta)))?;
                used.insert("vartheta".into(), theta);
                let a = df * (1.0 + 0.5 / b);
                let (bl, cc, k, w) = match example {
                    ZooExample::Example3 => (
                        0.5 * df + 1.0,
                        df,
                        -(df - 1.0) * ln2 - 0.5 * df * b.ln(),
                        df,
                    ),
                    ZooExample::Example4 => (1.0, 0.5 * df, -(0.5 * df - 1.0) * ln2, 0.5 * df),
                    ZooExample::Example5 => (
                        -(0.25 * df - 1.0),
                        0.25 * df,
                        -(0.25 * df - 1.0) * ln2 + 0.25 * df * b.ln(),
                        0.25 * df,
                    ),
                    _ => (-(0.5 * df - 1.0), 0.0, ln2 + 0.5 * df * b.ln(), 0.0),
                };
                let tail = LogTail { a, bl, cc, k, b };
                (
                    b,
                    df / (2.0 * b),
                    tail,
                    ClosedForm::QuadraticLog { d: df, w, c: 0.0 },
                )
            };
            used.insert("b".into(), b);
            used.insert("beta".into(), 2.0);
            let transform = RadialTransform::exponential(b, 2.0, d)?;
            let name = match example {
                ZooExample::Example2 => "example2",
                ZooExample::Example3 => "example3",
                ZooExample::Example4 => "example4",
                ZooExample::Example5 => "example5",
                _ => "example6",
            };
            TargetZooEntry {
                potential: IsotropicPotential {
                    dimension: d,
                    name: name.into(),
                    kind: Kind::Piecewise {
                        tail: PieceTail::Log(tail),
                        phi,
                        transform: Box::new(transform.clone()),
                    },
                    tail_index: Some(theta),
                },
                example,
                parameters: used,
                expected_transformed_form: Some(phi),
                transform,
            }
        }
    };
    Ok(entry)
}

/// Resolves CLI-style names: `t{d}_{kappa}`, `t`, `example2`..`example6`,
/// `warmup`. `d` and `params` fill in anything the name does not fix.
pub fn zoo_by_name(
    name: &str,
    d: Option<usize>,
    params: &BTreeMap<String, f64>,
) -> Result<TargetZooEntry> {
    if let Some(rest) = name.strip_prefix('t').filter(|r| !r.is_empty()) {
        let (ds, ks) = rest
            .split_once('_')
            .ok_or_else(|| crate::TulaError::InvalidArgument(format!("unknown target '{name}'")))?;
        let dn: usize = ds
            .parse()
            .map_err(|_| crate::TulaError::InvalidArgument(format!("bad dimension in '{name}'")))?;
        let kappa: f64 = ks
            .parse()
            .map_err(|_| crate::TulaError::InvalidArgument(format!("bad kappa in '{name}'")))?;
        if let Some(d) = d.filter(|&d| d != dn) {
            return invalid(format!("target '{name}' fixes d={dn} but d={d} was given"));
        }
        let mut p = params.clone();
        p.insert("kappa".into(), kappa);
        return make_example(ZooExample::MultivariateT, dn, &p);
    }
    let ex = ZooExample::from_name(name)
        .ok_or_else(|| crate::TulaError::InvalidArgument(format!("unknown target '{name}'")))?;
    let d = d.ok_or_else(|| crate::TulaError::InvalidArgument("dimension d is required".into()))?;
    make_example(ex, d, params)
}

/// `(d−1) log r − f(r)`.
pub fn radial_log_density(p: &IsotropicPotential, r: f64) -> f64 {
    p.radial_log_density(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn all_entries(d: usize) -> Vec<TargetZooEntry> {
        let mut out = vec![
            make_example(ZooExample::MultivariateT, d, &params(&[("kappa", 3.0)])).unwrap(),
            make_example(ZooExample::WarmUp, d, &params(&[])).unwrap(),
            make_example(
                ZooExample::Example2,
                d,
                &params(&[("kappa", 2.0), ("upsilon", 1.0)]),
            )
            .unwrap(),
        ];
        for ex in [
            ZooExample::Example3,
            ZooExample::Example4,
            ZooExample::Example5,
            ZooExample::Example6,
        ] {
            out.push(make_example(ex, d, &params(&[("vartheta", 1.5)])).unwrap());
        }
        out
    }

    #[test]
    fn t_examples() {
        let p = make_multivariate_t(2, 1.0).unwrap();
        let [f, f1, f2] = p.derivs(1.0);
        assert_relative_eq!(f, 1.5 * 2f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(f1, 1.5, max_relative = 1e-15);
        assert_eq!(f2, 0.0);
        let [f, f1, _] = p.derivs(0.0);
        assert_eq!((f, f1), (0.0, 0.0));
        let p = make_multivariate_t(3, 2.0).unwrap();
        assert_relative_eq!(p.derivs(1e6)[1] * 1e6, 5.0, max_relative = 1e-10);
        assert!(make_multivariate_t(2, 0.0).is_err());
        assert!(make_multivariate_t(0, 1.0).is_err());
    }

    #[test]
    fn radial_log_density_examples() {
        let p = make_multivariate_t(1, 1.0).unwrap();
        assert_relative_eq!(
            radial_log_density(&p, 1.0),
            -2f64.ln(),
            max_relative = 1e-15
        );
        let p = make_multivariate_t(2, 1.0).unwrap();
        assert_eq!(radial_log_density(&p, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn example6_is_normalizable() {
        let e = make_example(ZooExample::Example6, 2, &params(&[("vartheta", 1.0)])).unwrap();
        let z = crate::quadrature::integrate(
            |u: f64| e.potential.log_radius_log_density(u).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            1e-12,
            1e-10,
        )
        .unwrap();
        assert!(z.value.is_finite() && z.value > 0.0);
    }

    #[test]
    fn expected_forms_from_parameters() {
        let e = make_example(ZooExample::Example6, 2, &params(&[("vartheta", 1.0)])).unwrap();
        let phi = e.expected_transformed_form.unwrap();
        assert_relative_eq!(phi.value(1.7), 1.7 * 1.7, max_relative = 1e-15);
        let e = make_example(ZooExample::Example3, 4, &params(&[])).unwrap();
        let phi = e.expected_transformed_form.unwrap();
        let r: f64 = 0.8;
        assert_relative_eq!(
            phi.value(r),
            2.0 * r * r + 4.0 * (1.0 + r * r / 2.0).ln(),
            max_relative = 1e-15
        );
        let e = make_example(ZooExample::Example2, 2, &params(&[("upsilon", -0.5)])).unwrap();
        let phi = e.expected_transformed_form.unwrap();
        assert_relative_eq!(phi.value(2.0) - phi.value(0.0), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn parameter_ranges() {
        assert!(make_example(ZooExample::Example2, 2, &params(&[("upsilon", 7.5)])).is_err());
        assert!(make_example(ZooExample::Example2, 2, &params(&[("upsilon", -1.5)])).is_err());
        let err =
            make_example(ZooExample::Example3, 2, &params(&[("vartheta", -1.0)])).unwrap_err();
        assert!(err.to_string().contains("vartheta"));
        assert!(make_example(ZooExample::Example3, 2, &params(&[("upsilon", 1.0)])).is_err());
        assert!(make_example(ZooExample::MultivariateT, 2, &params(&[])).is_err());
    }

    #[test]
    fn names_resolve() {
        let e = zoo_by_name("t3_2", None, &BTreeMap::new()).unwrap();
        assert_eq!(e.potential.dimension(), 3);
        assert_eq!(e.parameters["kappa"], 2.0);
        assert!(zoo_by_name("t3_2", Some(4), &BTreeMap::new()).is_err());
        assert!(zoo_by_name("example7", Some(2), &BTreeMap::new()).is_err());
        let e = zoo_by_name("t", Some(2), &params(&[("kappa", 1.0)])).unwrap();
        assert_eq!(e.potential.name(), "t2_1");
        assert_eq!(
            zoo_by_name("warmup", Some(2), &BTreeMap::new())
                .unwrap()
                .example,
            ZooExample::WarmUp
        );
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for d in [1, 2, 5] {
            for e in all_entries(d) {
                let p = &e.potential;
                let seam = e.transform.knot_image();
                for i in 0..200 {
                    let r = 0.05 * 1000f64.powf(i as f64 / 199.0);
                    if (r - seam).abs() < 0.01 {
                        continue;
                    }
                    let h = 1e-5 * r;
                    let [_, f1, f2] = p.derivs(r);
                    let fd1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
                    let fd2 = (p.derivs(r + h)[1] - p.derivs(r - h)[1]) / (2.0 * h);
                    assert!(
                        (f1 - fd1).abs() <= 1e-5 * f1.abs().max(1.0),
                        "{} d={d} r={r}: {f1} vs {fd1}",
                        p.name()
                    );
                    assert!(
                        (f2 - fd2).abs() <= 1e-5 * f2.abs().max(1.0),
                        "{} d={d} r={r}: {f2} vs {fd2}",
                        p.name()
                    );
                }
            }
        }
    }

    #[test]
    fn log_form_agrees_with_radial_form() {
        for e in all_entries(3) {
            let p = &e.potential;
            for &r in &[0.1, 0.9, 2.0, 2.9, 7.0, 40.0] {
                let u = f64::ln(r);
                let [f, f1, f2] = p.derivs(r);
                let [fu, fu1, fu2] = p.log_derivs(u);
                assert_relative_eq!(fu, f, max_relative = 1e-10, epsilon = 1e-12);
                assert_relative_eq!(fu1, f1 * r, max_relative = 1e-9, epsilon = 1e-12);
                assert_relative_eq!(
                    fu2,
                    f2 * r * r + f1 * r,
                    max_relative = 1e-8,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn branches_agree_at_seam() {
        for d in [1, 2, 3, 6] {
            for e in all_entries(d) {
                let p = &e.potential;
                let s = e.transform.knot_image();
                let (lo, hi) = (s * (1.0 - 1e-12), s * (1.0 + 1e-12));
                let (a, b) = (p.derivs(lo), p.derivs(hi));
                for k in 0..2 {
                    assert!(
                        (a[k] - b[k]).abs() <= 1e-6 * b[k].abs().max(1.0),
                        "{} d={d} order {k}: {} vs {}",
                        p.name(),
                        a[k],
                        b[k]
                    );
                }
            }
        }
    }

    #[test]
    fn custom_potential_log_form() {
        let p = IsotropicPotential::custom("gauss", 2, None, |r| [r * r, 2.0 * r, 2.0]).unwrap();
        let [f, f1, f2] = p.log_derivs(0.5);
        let x = 0.5f64.exp();
        assert_relative_eq!(f, x * x, max_relative = 1e-15);
        assert_relative_eq!(f1, 2.0 * x * x, max_relative = 1e-15);
        assert_relative_eq!(f2, 4.0 * x * x, max_relative = 1e-15);
    }
}
