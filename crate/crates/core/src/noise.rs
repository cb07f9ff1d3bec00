//! Symmetric log-concave signal noise.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::numeric::{bisect, quad};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LOG_SPACE_CUTOFF: f64 = 30.0;
const CUSTOM_PDF_FLOOR: f64 = 1e-300;
const CUSTOM_ZTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Normal,
    Laplace,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Normal => "normal",
            Family::Laplace => "laplace",
            Family::Custom => "custom",
        })
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied density, cdf and density derivative.
#[derive(Clone)]
pub struct CustomNoise {
    name: String,
    pdf: ScalarFn,
    cdf: ScalarFn,
    dpdf: ScalarFn,
    zmax: f64,
}

#[derive(Clone)]
enum Kind {
    Normal,
    Laplace,
    Custom(CustomNoise),
}

/// Base noise distribution of the signal, `s = e + sigma * eps`.
#[derive(Clone)]
pub struct NoiseModel {
    kind: Kind,
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Custom(c) => write!(f, "NoiseModel(custom: {})", c.name),
            _ => write!(f, "NoiseModel({})", self.family()),
        }
    }
}

impl NoiseModel {
    pub fn normal() -> Self {
        NoiseModel { kind: Kind::Normal }
    }

    pub fn laplace() -> Self {
        NoiseModel { kind: Kind::Laplace }
    }

    /// Custom symmetric family. The caller supplies `f`, `F` and `f'`.
    pub fn custom<P, C, D>(name: impl Into<String>, pdf: P, cdf: C, dpdf: D) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        C: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut zmax = 1.0;
        while pdf(zmax) >= CUSTOM_PDF_FLOOR && zmax < 1e300 {
            zmax *= 2.0;
        }
        NoiseModel {
            kind: Kind::Custom(CustomNoise {
                name: name.into(),
                pdf: Arc::new(pdf),
                cdf: Arc::new(cdf),
                dpdf: Arc::new(dpdf),
                zmax,
            }),
        }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Normal => Family::Normal,
            Kind::Laplace => Family::Laplace,
            Kind::Custom(_) => Family::Custom,
        }
    }

    pub fn from_family(family: Family) -> Result<Self> {
        match family {
            Family::Normal => Ok(Self::normal()),
            Family::Laplace => Ok(Self::laplace()),
            Family::Custom => Err(Error::Domain(
                "custom noise needs explicit density functions".into(),
            )),
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Normal | Kind::Laplace if z.abs() > LOG_SPACE_CUTOFF => self.ln_pdf(z).exp(),
            Kind::Normal => INV_SQRT_2PI * (-0.5 * z * z).exp(),
            Kind::Laplace => 0.5 * (-z.abs()).exp(),
            Kind::Custom(c) => (c.pdf)(z),
        }
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Normal => -0.5 * z * z - LN_SQRT_2PI,
            Kind::Laplace => -z.abs() - LN_2,
            Kind::Custom(c) => (c.pdf)(z).ln(),
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z == f64::INFINITY {
            return 1.0;
        }
        if z == f64::NEG_INFINITY {
            return 0.0;
        }
        match &self.kind {
            Kind::Normal => 0.5 * erfc(-z / SQRT_2),
            Kind::Laplace => {
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Kind::Custom(c) => (c.cdf)(z),
        }
    }

    /// `ln F(z)`, accurate far into the lower tail.
    pub fn ln_cdf(&self, z: f64) -> f64 {
        if z == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            Kind::Normal if z < -LOG_SPACE_CUTOFF => {
                let x2 = 1.0 / (z * z);
                let series = 1.0 - x2 * (1.0 - 3.0 * x2 * (1.0 - 5.0 * x2 * (1.0 - 7.0 * x2)));
                -0.5 * z * z - (-z).ln() - LN_SQRT_2PI + series.ln()
            }
            Kind::Laplace if z < 0.0 => z - LN_2,
            _ if z > 0.0 => (-self.cdf(-z)).ln_1p(),
            _ => self.cdf(z).ln(),
        }
    }

    /// Density derivative; for the Laplace kink at zero this returns 0.
    pub fn dpdf(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Custom(c) => (c.dpdf)(z),
            _ => self.score(z) * self.pdf(z),
        }
    }

    /// `f'(z) / f(z)`.
    pub fn score(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Normal => -z,
            Kind::Laplace => {
                if z > 0.0 {
                    -1.0
                } else if z < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Custom(c) => (c.dpdf)(z) / (c.pdf)(z),
        }
    }

    /// `f''(z) / f(z)`.
    pub fn curvature(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Normal => z * z - 1.0,
            Kind::Laplace => 1.0,
            Kind::Custom(c) => {
                let h = 1e-5 * z.abs().max(1.0);
                ((c.dpdf)(z + h) - (c.dpdf)(z - h)) / (2.0 * h) / (c.pdf)(z)
            }
        }
    }

    pub fn peak(&self) -> f64 {
        match &self.kind {
            Kind::Normal => INV_SQRT_2PI,
            Kind::Laplace => 0.5,
            Kind::Custom(c) => (c.pdf)(0.0),
        }
    }

    /// Upper-branch inverse density: the `z >= 0` with `f(z) = p`.
    ///
    /// Returns `0` when `p >= f(0)` and `+inf` at `p = 0`.
    pub fn inv_pdf_upper(&self, p: f64) -> Result<ExtReal> {
        if !(p >= 0.0) {
            return Err(Error::Domain(format!("inverse density of negative value {p}")));
        }
        if p == 0.0 {
            return Ok(ExtReal::PosInf);
        }
        if p >= self.peak() {
            return Ok(ExtReal::Finite(0.0));
        }
        let z = match &self.kind {
            Kind::Normal => (-2.0 * (p.ln() + LN_SQRT_2PI)).sqrt(),
            Kind::Laplace => -(2.0 * p).ln(),
            Kind::Custom(c) => {
                if p <= (c.pdf)(c.zmax) {
                    return Ok(ExtReal::Finite(c.zmax));
                }
                let mut hi = 1.0;
                while (c.pdf)(hi) > p && hi < c.zmax {
                    hi *= 2.0;
                }
                let lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
                bisect(|z| (c.pdf)(z) - p, lo, hi.min(c.zmax), CUSTOM_ZTOL).unwrap_or(hi)
            }
        };
        Ok(ExtReal::Finite(z))
    }

    /// `f^{-1}(p)` for strictly positive `p`, always finite.
    pub(crate) fn inv_pdf_positive(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0);
        match self.inv_pdf_upper(p) {
            Ok(ExtReal::Finite(z)) => z,
            _ => f64::INFINITY,
        }
    }

    /// Inverse cdf on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile of {u}")));
        }
        Ok(match &self.kind {
            Kind::Normal => normal_quantile(u),
            Kind::Laplace => {
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            Kind::Custom(c) => {
                let mut w = 1.0;
                while (c.cdf)(-w) > u.min(1.0 - u) && w < c.zmax {
                    w *= 2.0;
                }
                bisect(|z| (c.cdf)(z) - u, -w, w, CUSTOM_ZTOL).unwrap_or(0.0)
            }
        })
    }

    /// `-p / f'(f^{-1}(p))` on `(0, f(0))`.
    pub fn b(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < self.peak()) {
            return Err(Error::Domain(format!(
                "b({p}) requires 0 < p < {}",
                self.peak()
            )));
        }
        let z = self.inv_pdf_positive(p);
        Ok(-1.0 / self.score(z))
    }

    /// `f(z) f''(z) / f'(z)^2`.
    pub fn tail_regularity(&self, z: f64) -> Result<f64> {
        let s = self.score(z);
        if s == 0.0 || !s.is_finite() {
            return Err(Error::Singular(format!("f'({z}) vanishes")));
        }
        Ok(self.curvature(z) / (s * s))
    }

    /// Mechanical check of the noise assumptions on a grid of `resolution` points.
    pub fn validate(&self, resolution: usize) -> NoiseReport {
        validate_noise(self, resolution.max(16))
    }
}

/// Acklam's rational initial guess, polished by Newton steps on the cdf.
fn normal_quantile(u: f64) -> f64 {
    if u > 0.5 {
        return -normal_quantile(1.0 - u);
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let mut x = if u < 0.02425 {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let lnu = u.ln();
    for _ in 0..3 {
        // Newton on ln F keeps the step well scaled in the tail.
        let lnf = -0.5 * x * x - LN_SQRT_2PI;
        let lnc = if x < -LOG_SPACE_CUTOFF {
            NoiseModel::normal().ln_cdf(x)
        } else {
            (0.5 * erfc(-x / SQRT_2)).ln()
        };
        let step = (lnc - lnu) / (lnf - lnc).exp();
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation observed.
    pub worst: f64,
    /// Grid point of the worst violation, if any.
    pub at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub family: Family,
    pub checks: Vec<Check>,
}

impl NoiseReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn worst_of(name: &'static str, tol: f64, it: impl Iterator<Item = (f64, f64)>) -> Check {
    let mut worst = 0.0;
    let mut at = None;
    for (z, viol) in it {
        if viol > worst || viol.is_nan() {
            worst = if viol.is_nan() { f64::INFINITY } else { viol };
            at = Some(z);
        }
    }
    Check {
        name,
        passed: worst <= tol,
        worst,
        at,
    }
}

fn validate_noise(noise: &NoiseModel, n: usize) -> NoiseReport {
    let span = 10.0;
    let grid: Vec<f64> = (0..n)
        .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
        .collect();
    let mut checks = Vec::new();

    checks.push(worst_of(
        "symmetry",
        1e-12,
        grid.iter().map(|&z| {
            let (a, b) = (noise.pdf(z), noise.pdf(-z));
            (z, (a - b).abs() / a.max(b).max(f64::MIN_POSITIVE))
        }),
    ));

    // (-1, 1) -> R via z = t / (1 - t^2)
    let jac = |t: f64| (1.0 + t * t) / ((1.0 - t * t) * (1.0 - t * t));
    let map = |t: f64| t / (1.0 - t * t);
    let mass = quad(|t| noise.pdf(map(t)) * jac(t), -1.0, 1.0, 1e-12);
    checks.push(match mass {
        Ok(m) => Check {
            name: "unit_mass",
            passed: (m - 1.0).abs() <= 1e-8,
            worst: (m - 1.0).abs(),
            at: None,
        },
        Err(_) => Check {
            name: "unit_mass",
            passed: false,
            worst: f64::INFINITY,
            at: None,
        },
    });
    let mean = quad(|t| map(t) * noise.pdf(map(t)) * jac(t), -1.0, 1.0, 1e-12);
    checks.push(match mean {
        Ok(m) => Check {
            name: "zero_mean",
            passed: m.abs() <= 1e-8,
            worst: m.abs(),
            at: None,
        },
        Err(_) => Check {
            name: "zero_mean",
            passed: false,
            worst: f64::INFINITY,
            at: None,
        },
    });

    // score must be non-increasing; skip the Laplace kink at exactly 0
    checks.push(worst_of(
        "log_concavity",
        1e-12,
        grid.windows(2).map(|w| {
            let (s0, s1) = (noise.score(w[0]), noise.score(w[1]));
            let viol = if noise.family() == Family::Laplace && (w[0] == 0.0 || w[1] == 0.0) {
                0.0
            } else {
                s1 - s0
            };
            (w[1], viol)
        }),
    ));

    checks.push(worst_of(
        "diminishing_bad_luck",
        0.0,
        grid.windows(2)
            .filter(|w| w[1] < 0.0 && noise.pdf(w[0]) > 0.0)
            .map(|w| (w[0], if noise.pdf(w[0]) < noise.pdf(w[1]) { 0.0 } else { 1.0 })),
    ));

    let peak = noise.peak();
    let ps: Vec<f64> = (1..n).map(|i| peak * i as f64 / n as f64).collect();
    let zs: Vec<f64> = ps.iter().map(|&p| noise.inv_pdf_positive(p)).collect();
    let roundtrip = worst_of(
        "inverse_consistency",
        1e-10,
        ps.iter()
            .zip(&zs)
            .map(|(&p, &z)| (p, (noise.pdf(z) - p).abs()))
            .chain(zs.windows(2).zip(&ps[1..]).map(|(w, &p)| (p, if w[1] < w[0] { 0.0 } else { 1.0 }))),
    );
    checks.push(roundtrip);

    NoiseReport {
        family: noise.family(),
        checks,
    }
}

/// Cauchy-like density `1 / (pi (1 + z^2))`, which is not log-concave.
pub fn cauchy_like() -> NoiseModel {
    NoiseModel::custom(
        "cauchy",
        |z| 1.0 / (PI * (1.0 + z * z)),
        |z| 0.5 + z.atan() / PI,
        |z| -2.0 * z / (PI * (1.0 + z * z) * (1.0 + z * z)),
    )
}
