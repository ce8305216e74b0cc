//! Benchmark objectives in maximization form, with analytic gradients,
//! standard search boxes and known optima.
//!
//! Standard minimization test functions are negated. Hartmann-3/6 and
//! Goldstein-Price are log-transformed because their raw values span several
//! orders of magnitude over the box: Hartmann becomes `ln(sum a_i exp(..))`
//! and Goldstein-Price becomes `-ln(f)`.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::vector::in_box;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Sphere,
    Rosenbrock,
    SixHumpCamel,
    Branin,
    Hartmann3,
    Hartmann6,
    GoldsteinPrice,
    StyblinskiTang,
    Rastrigin,
    Ackley,
    Griewank,
    Levy,
    Schwefel,
    /// Two Gaussian bumps of heights 1.0 and 0.6, unit width, centers 3 apart.
    TwoBump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub name: String,
    pub family: Family,
    pub dimension: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub known_max: f64,
    /// Known maximizers; may be empty when only the value is known.
    pub known_argmax: Vec<Vec<f64>>,
    pub oscillatory: bool,
    pub log_transformed: bool,
}

const STYBLINSKI_TANG_ARGMAX: f64 = -2.903_534_027_771_177;
const STYBLINSKI_TANG_MIN_PER_DIM: f64 = -39.166_165_703_771_41;
const SCHWEFEL_ARGMAX: f64 = 420.968_746_359_982_03;
const SCHWEFEL_OFFSET: f64 = 418.982_887_272_433_7;

const BRANIN_B: f64 = 5.1 / (4.0 * PI * PI);
const BRANIN_C: f64 = 5.0 / PI;
const BRANIN_T: f64 = 1.0 / (8.0 * PI);

const BUMP_HIGH: [f64; 2] = [-1.5, 0.0];
const BUMP_LOW: [f64; 2] = [1.5, 0.0];
const BUMP_LOW_HEIGHT: f64 = 0.6;

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];
const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

impl BenchmarkSpec {
    fn new(
        name: &str,
        family: Family,
        lower: Vec<f64>,
        upper: Vec<f64>,
        known_max: f64,
        known_argmax: Vec<Vec<f64>>,
    ) -> Self {
        let oscillatory = matches!(
            family,
            Family::Rastrigin | Family::Ackley | Family::Griewank | Family::Levy | Family::Schwefel
        );
        let log_transformed = matches!(
            family,
            Family::Hartmann3 | Family::Hartmann6 | Family::GoldsteinPrice
        );
        Self {
            name: name.to_string(),
            family,
            dimension: lower.len(),
            lower,
            upper,
            known_max,
            known_argmax,
            oscillatory,
            log_transformed,
        }
    }

    fn uniform(
        name: &str,
        family: Family,
        d: usize,
        lo: f64,
        hi: f64,
        known_max: f64,
        argmax: f64,
    ) -> Self {
        Self::new(
            name,
            family,
            vec![lo; d],
            vec![hi; d],
            known_max,
            vec![vec![argmax; d]],
        )
    }

    /// Whether `x` lies inside the standard box. Evaluation outside is allowed.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dimension && in_box(x, &self.lower, &self.upper)
    }

    /// Objective value in maximization form. NaN if a log-transformed function
    /// is evaluated where its inner value is not positive (see [`try_evaluate`](Self::try_evaluate)).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        match self.family {
            Family::Sphere => -x.iter().map(|v| v * v).sum::<f64>(),
            Family::Rosenbrock => -x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum::<f64>(),
            Family::SixHumpCamel => {
                let (a, b) = (x[0], x[1]);
                -((4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a
                    + a * b
                    + (-4.0 + 4.0 * b * b) * b * b)
            }
            Family::Branin => {
                let u = x[1] - BRANIN_B * x[0] * x[0] + BRANIN_C * x[0] - 6.0;
                -(u * u + 10.0 * (1.0 - BRANIN_T) * x[0].cos() + 10.0)
            }
            Family::Hartmann3 => log_or_nan(hartmann(x, &HARTMANN3_A, &HARTMANN3_P, None)),
            Family::Hartmann6 => log_or_nan(hartmann(x, &HARTMANN6_A, &HARTMANN6_P, None)),
            Family::GoldsteinPrice => {
                let f = goldstein_price(x, None);
                if f > 0.0 {
                    -f.ln()
                } else {
                    f64::NAN
                }
            }
            Family::StyblinskiTang => {
                -0.5 * x
                    .iter()
                    .map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v)
                    .sum::<f64>()
            }
            Family::Rastrigin => {
                -(10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>())
            }
            Family::Ackley => {
                let d = x.len() as f64;
                let s = x.iter().map(|v| v * v).sum::<f64>() / d;
                let c = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                -(-20.0 * (-0.2 * s.sqrt()).exp() - c.exp() + 20.0 + E)
            }
            Family::Griewank => {
                let s = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let p: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                -(1.0 + s - p)
            }
            Family::Levy => {
                let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let d = w.len();
                let mut f = (PI * w[0]).sin().powi(2);
                for wi in &w[..d - 1] {
                    f += (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2));
                }
                let wd = w[d - 1];
                f += (wd - 1.0).powi(2) * (1.0 + (2.0 * PI * wd).sin().powi(2));
                -f
            }
            Family::Schwefel => {
                -(SCHWEFEL_OFFSET * x.len() as f64
                    - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>())
            }
            Family::TwoBump => {
                let r1 = (x[0] - BUMP_HIGH[0]).powi(2) + (x[1] - BUMP_HIGH[1]).powi(2);
                let r2 = (x[0] - BUMP_LOW[0]).powi(2) + (x[1] - BUMP_LOW[1]).powi(2);
                (-0.5 * r1).exp() + BUMP_LOW_HEIGHT * (-0.5 * r2).exp()
            }
        }
    }

    /// Like [`evaluate`](Self::evaluate) but reports a non-positive log argument as an error.
    pub fn try_evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let v = self.evaluate(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NumericalDegeneracy(format!(
                "{} is not finite at {x:?}",
                self.name
            )))
        }
    }

    /// Analytic gradient of [`evaluate`](Self::evaluate).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        g
    }

    fn gradient_into(&self, x: &[f64], g: &mut [f64]) {
        let d = x.len();
        match self.family {
            Family::Sphere => {
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = -2.0 * xi;
                }
            }
            Family::Rosenbrock => {
                g.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..d - 1 {
                    let t = x[i + 1] - x[i] * x[i];
                    g[i] -= -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
                    g[i + 1] -= 200.0 * t;
                }
            }
            Family::SixHumpCamel => {
                let (a, b) = (x[0], x[1]);
                g[0] = -(8.0 * a - 8.4 * a.powi(3) + 2.0 * a.powi(5) + b);
                g[1] = -(a - 8.0 * b + 16.0 * b.powi(3));
            }
            Family::Branin => {
                let u = x[1] - BRANIN_B * x[0] * x[0] + BRANIN_C * x[0] - 6.0;
                g[0] = -(2.0 * u * (-2.0 * BRANIN_B * x[0] + BRANIN_C)
                    - 10.0 * (1.0 - BRANIN_T) * x[0].sin());
                g[1] = -2.0 * u;
            }
            Family::Hartmann3 => {
                let s = hartmann(x, &HARTMANN3_A, &HARTMANN3_P, Some(g));
                g.iter_mut().for_each(|v| *v /= s);
            }
            Family::Hartmann6 => {
                let s = hartmann(x, &HARTMANN6_A, &HARTMANN6_P, Some(g));
                g.iter_mut().for_each(|v| *v /= s);
            }
            Family::GoldsteinPrice => {
                let f = goldstein_price(x, Some(g));
                g.iter_mut().for_each(|v| *v = -*v / f);
            }
            Family::StyblinskiTang => {
                for (gi, v) in g.iter_mut().zip(x) {
                    *gi = -0.5 * (4.0 * v.powi(3) - 32.0 * v + 5.0);
                }
            }
            Family::Rastrigin => {
                for (gi, v) in g.iter_mut().zip(x) {
                    *gi = -(2.0 * v + 20.0 * PI * (2.0 * PI * v).sin());
                }
            }
            Family::Ackley => {
                let n = d as f64;
                let r = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
                let c = (x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n).exp();
                let radial = if r > 0.0 {
                    4.0 * (-0.2 * r).exp() / (n * r)
                } else {
                    0.0
                };
                for (gi, v) in g.iter_mut().zip(x) {
                    *gi = -(radial * v + 2.0 * PI * (2.0 * PI * v).sin() * c / n);
                }
            }
            Family::Griewank => {
                let cos: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .collect();
                // product of all cosines except the i-th, via prefix and suffix products
                let mut prefix = vec![1.0; d + 1];
                for i in 0..d {
                    prefix[i + 1] = prefix[i] * cos[i];
                }
                let mut suffix = 1.0;
                for i in (0..d).rev() {
                    let others = prefix[i] * suffix;
                    let sq = ((i + 1) as f64).sqrt();
                    g[i] = -(x[i] / 2000.0 + (x[i] / sq).sin() / sq * others);
                    suffix *= cos[i];
                }
            }
            Family::Levy => {
                let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let mut dw = vec![0.0; d];
                dw[0] += PI * (2.0 * PI * w[0]).sin();
                for i in 0..d - 1 {
                    let wi = w[i];
                    let s = (PI * wi + 1.0).sin();
                    dw[i] += 2.0 * (wi - 1.0) * (1.0 + 10.0 * s * s)
                        + (wi - 1.0).powi(2) * 10.0 * PI * (2.0 * (PI * wi + 1.0)).sin();
                }
                let wd = w[d - 1];
                let s = (2.0 * PI * wd).sin();
                dw[d - 1] += 2.0 * (wd - 1.0) * (1.0 + s * s)
                    + (wd - 1.0).powi(2) * 2.0 * PI * (4.0 * PI * wd).sin();
                for (gi, dwi) in g.iter_mut().zip(&dw) {
                    *gi = -dwi / 4.0;
                }
            }
            Family::Schwefel => {
                for (gi, v) in g.iter_mut().zip(x) {
                    let s = v.abs().sqrt();
                    *gi = s.sin() + 0.5 * s * s.cos();
                }
            }
            Family::TwoBump => {
                let dx1 = [x[0] - BUMP_HIGH[0], x[1] - BUMP_HIGH[1]];
                let dx2 = [x[0] - BUMP_LOW[0], x[1] - BUMP_LOW[1]];
                let e1 = (-0.5 * (dx1[0] * dx1[0] + dx1[1] * dx1[1])).exp();
                let e2 = BUMP_LOW_HEIGHT * (-0.5 * (dx2[0] * dx2[0] + dx2[1] * dx2[1])).exp();
                for i in 0..2 {
                    g[i] = -dx1[i] * e1 - dx2[i] * e2;
                }
            }
        }
    }

    /// Central-difference gradient with spacing `h * (1 + |x_i|)`.
    pub fn fd_gradient(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let mut p = x.to_vec();
        for i in 0..x.len() {
            let hi = h * (1.0 + x[i].abs());
            p[i] = x[i] + hi;
            let fp = self.evaluate(&p);
            p[i] = x[i] - hi;
            let fm = self.evaluate(&p);
            p[i] = x[i];
            g[i] = (fp - fm) / (2.0 * hi);
        }
        g
    }
}

impl Objective for BenchmarkSpec {
    fn dim(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.gradient_into(x, grad);
    }
}

fn log_or_nan(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NAN
    }
}

/// `sum_i a_i exp(-sum_j A_ij (x_j - P_ij)^2)`, optionally accumulating its gradient.
fn hartmann<const D: usize>(
    x: &[f64],
    a: &[[f64; D]; 4],
    p: &[[f64; D]; 4],
    mut grad: Option<&mut [f64]>,
) -> f64 {
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut total = 0.0;
    for i in 0..4 {
        let inner: f64 = (0..D).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
        let term = HARTMANN_ALPHA[i] * (-inner).exp();
        total += term;
        if let Some(g) = grad.as_deref_mut() {
            for j in 0..D {
                g[j] -= term * 2.0 * a[i][j] * (x[j] - p[i][j]);
            }
        }
    }
    total
}

/// Raw Goldstein-Price value; writes its (unnegated) gradient when asked.
fn goldstein_price(x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let a = x1 + x2 + 1.0;
    let p = 19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2;
    let big_a = 1.0 + a * a * p;
    let b = 2.0 * x1 - 3.0 * x2;
    let q = 18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2;
    let big_b = 30.0 + b * b * q;
    if let Some(g) = grad {
        let dp = -14.0 + 6.0 * x1 + 6.0 * x2;
        let da = 2.0 * a * p + a * a * dp;
        let db1 = 4.0 * b * q + b * b * (-32.0 + 24.0 * x1 - 36.0 * x2);
        let db2 = -6.0 * b * q + b * b * (48.0 - 36.0 * x1 + 54.0 * x2);
        g[0] = da * big_b + big_a * db1;
        g[1] = da * big_b + big_a * db2;
    }
    big_a * big_b
}

/// The benchmark suite used by the harness.
pub fn suite() -> Vec<BenchmarkSpec> {
    use Family::*;
    let mut out = Vec::new();
    for d in [2, 10, 50] {
        out.push(BenchmarkSpec::uniform(
            &format!("sphere-{d}"),
            Sphere,
            d,
            -5.12,
            5.12,
            0.0,
            0.0,
        ));
    }
    for d in [2, 10] {
        out.push(BenchmarkSpec::uniform(
            &format!("rosenbrock-{d}"),
            Rosenbrock,
            d,
            -5.0,
            10.0,
            0.0,
            1.0,
        ));
    }
    out.push(BenchmarkSpec::new(
        "six-hump-camel",
        SixHumpCamel,
        vec![-3.0, -2.0],
        vec![3.0, 2.0],
        1.031_628_453_489_877_3,
        vec![
            vec![0.089_842_013_100_318_06, -0.712_656_403_020_739_6],
            vec![-0.089_842_013_100_318_06, 0.712_656_403_020_739_6],
        ],
    ));
    out.push(BenchmarkSpec::new(
        "branin",
        Branin,
        vec![-5.0, 0.0],
        vec![10.0, 15.0],
        -0.397_887_357_729_738_16,
        vec![vec![-PI, 12.275], vec![PI, 2.275], vec![3.0 * PI, 2.475]],
    ));
    out.push(BenchmarkSpec::new(
        "log-hartmann-3",
        Hartmann3,
        vec![0.0; 3],
        vec![1.0; 3],
        1.351_387_076_450_322_2,
        vec![vec![
            0.114_588_876_655_068_97,
            0.555_648_894_616_93,
            0.852_546_984_686_677_4,
        ]],
    ));
    out.push(BenchmarkSpec::new(
        "log-hartmann-6",
        Hartmann6,
        vec![0.0; 6],
        vec![1.0; 6],
        1.200_677_785_132_359_5,
        vec![vec![
            0.201_689_511_006_705_42,
            0.150_010_691_823_457_97,
            0.476_873_974_221_897,
            0.275_332_430_494_056_1,
            0.311_651_616_600_113_24,
            0.657_300_534_065_620_3,
        ]],
    ));
    out.push(BenchmarkSpec::new(
        "log-goldstein-price",
        GoldsteinPrice,
        vec![-2.0, -2.0],
        vec![2.0, 2.0],
        -(3.0f64.ln()),
        vec![vec![0.0, -1.0]],
    ));
    out.push(BenchmarkSpec::uniform(
        "styblinski-tang-10",
        StyblinskiTang,
        10,
        -5.0,
        5.0,
        -10.0 * STYBLINSKI_TANG_MIN_PER_DIM,
        STYBLINSKI_TANG_ARGMAX,
    ));
    for d in [2, 12, 30] {
        out.push(BenchmarkSpec::uniform(
            &format!("rastrigin-{d}"),
            Rastrigin,
            d,
            -5.12,
            5.12,
            0.0,
            0.0,
        ));
    }
    for d in [2, 12] {
        out.push(BenchmarkSpec::uniform(
            &format!("ackley-{d}"),
            Ackley,
            d,
            -32.768,
            32.768,
            0.0,
            0.0,
        ));
    }
    out.push(BenchmarkSpec::uniform(
        "griewank-12",
        Griewank,
        12,
        -600.0,
        600.0,
        0.0,
        0.0,
    ));
    out.push(BenchmarkSpec::uniform(
        "levy-10", Levy, 10, -10.0, 10.0, 0.0, 1.0,
    ));
    out.push(BenchmarkSpec::uniform(
        "schwefel-10",
        Schwefel,
        10,
        -500.0,
        500.0,
        0.0,
        SCHWEFEL_ARGMAX,
    ));
    out.push(BenchmarkSpec::new(
        "two-bump",
        TwoBump,
        vec![-5.0, -5.0],
        vec![5.0, 5.0],
        1.006_876_798_382_234_2,
        vec![vec![-1.478_843_789_078_619_2, 0.0]],
    ));
    out
}

/// Looks up a suite member by name.
pub fn by_name(name: &str) -> Result<BenchmarkSpec> {
    suite()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownFunction(name.to_string()))
}
