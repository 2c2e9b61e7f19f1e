//! Gaussian-process regression over 4-dimensional brick encodings.
//!
//! The covariance is an isotropic Matérn 5/2 kernel plus a white-noise term.
//! Hyperparameters are chosen by maximizing the log marginal likelihood with
//! a box-constrained BFGS search in log space, restarted from several seeded
//! points. Targets are standardized before fitting; [`GpModel::posterior`]
//! reports values in the original units.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Primitive;

/// Lower limit for the noise variance.
pub const NOISE_FLOOR: f64 = 1e-6;

/// Extra diagonal terms tried, in order, when a covariance fails to factorize.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-6, 1e-4, 1e-2];

pub type Encoding = [f64; 4];

/// `(center_1, center_2, z, d)`.
pub fn encode(p: &Primitive) -> Encoding {
    let (x1, x2, x3) = p.center();
    [x1, x2, x3, p.dir.index() as f64]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for GpHyperparams {
    fn default() -> Self {
        GpHyperparams {
            lengthscale: 1.0,
            signal_variance: 1.0,
            noise_variance: 1e-2,
        }
    }
}

impl GpHyperparams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if pos(self.lengthscale) && pos(self.signal_variance) && self.noise_variance >= NOISE_FLOOR
        {
            Ok(())
        } else {
            Err(Error::InvalidGpInput(format!(
                "invalid hyperparameters {self:?}"
            )))
        }
    }

    fn to_log(self) -> [f64; 3] {
        [
            self.lengthscale.ln(),
            self.signal_variance.ln(),
            self.noise_variance.ln(),
        ]
    }

    fn from_log(t: &[f64; 3]) -> Self {
        GpHyperparams {
            lengthscale: t[0].exp(),
            signal_variance: t[1].exp(),
            noise_variance: t[2].exp().max(NOISE_FLOOR),
        }
    }
}

fn distance(u: &Encoding, v: &Encoding) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Matérn 5/2 covariance.
pub fn kernel(u: &Encoding, v: &Encoding, h: &GpHyperparams) -> f64 {
    let s = 5f64.sqrt() * distance(u, v) / h.lengthscale;
    h.signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Derivative of [`kernel`] with respect to `ln(lengthscale)`.
fn kernel_dlog_lengthscale(u: &Encoding, v: &Encoding, h: &GpHyperparams) -> f64 {
    let s = 5f64.sqrt() * distance(u, v) / h.lengthscale;
    h.signal_variance * s * s * (1.0 + s) / 3.0 * (-s).exp()
}

fn gram(inputs: &[Encoding], h: &GpHyperparams) -> DMatrix<f64> {
    let n = inputs.len();
    DMatrix::from_fn(n, n, |i, j| kernel(&inputs[i], &inputs[j], h))
}

fn factorize(mut k: DMatrix<f64>, noise: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    for i in 0..n {
        k[(i, i)] += noise;
    }
    for jitter in JITTER_LADDER {
        let mut m = k.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            return Ok((chol, jitter));
        }
    }
    Err(Error::NotPositiveDefinite {
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

fn check_data(inputs: &[Encoding], targets: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::InvalidGpInput(
            "at least one observation is required".into(),
        ));
    }
    if inputs.len() != targets.len() {
        return Err(Error::InvalidGpInput(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if targets.iter().any(|y| !y.is_finite()) || inputs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGpInput("non-finite observation".into()));
    }
    Ok(())
}

/// Log marginal likelihood and its gradient with respect to
/// `(ln lengthscale, ln signal_variance, ln noise_variance)`.
pub fn log_marginal_likelihood(
    inputs: &[Encoding],
    targets: &[f64],
    h: &GpHyperparams,
) -> Result<(f64, [f64; 3])> {
    check_data(inputs, targets)?;
    let n = inputs.len();
    let k = gram(inputs, h);
    let (chol, _) = factorize(k.clone(), h.noise_variance)?;
    let y = DVector::from_column_slice(targets);
    let alpha = chol.solve(&y);
    let log_det: f64 = 2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>();
    let value =
        -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    // dL/dθ = ½ tr((ααᵀ − K⁻¹) ∂K/∂θ)
    let w = &alpha * alpha.transpose() - chol.inverse();
    let dk_len = DMatrix::from_fn(n, n, |i, j| {
        kernel_dlog_lengthscale(&inputs[i], &inputs[j], h)
    });
    let half_trace = |m: &DMatrix<f64>| 0.5 * w.component_mul(m).sum();
    let grad = [
        half_trace(&dk_len),
        half_trace(&k),
        0.5 * h.noise_variance * w.trace(),
    ];
    Ok((value, grad))
}

/// Settings for the hyperparameter search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub lengthscale_bounds: (f64, f64),
    pub signal_variance_bounds: (f64, f64),
    pub noise_variance_bounds: (f64, f64),
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 5,
            max_iters: 60,
            seed: 0,
            lengthscale_bounds: (1e-2, 1e2),
            signal_variance_bounds: (1e-3, 1e3),
            noise_variance_bounds: (NOISE_FLOOR, 1.0),
        }
    }
}

impl FitConfig {
    fn log_box(&self) -> ([f64; 3], [f64; 3]) {
        let b = [
            self.lengthscale_bounds,
            self.signal_variance_bounds,
            self.noise_variance_bounds,
        ];
        (
            b.map(|(lo, _)| lo.max(f64::MIN_POSITIVE).ln()),
            b.map(|(_, hi)| hi.ln()),
        )
    }
}

/// A conditioned Gaussian process, immutable after construction.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Encoding>,
    hyperparams: GpHyperparams,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    offset: f64,
    scale: f64,
    jitter: f64,
}

impl GpModel {
    /// Conditions on raw targets with fixed hyperparameters; no standardization.
    pub fn condition(inputs: &[Encoding], targets: &[f64], h: GpHyperparams) -> Result<Self> {
        Self::build(inputs, targets, h, 0.0, 1.0)
    }

    fn build(
        inputs: &[Encoding],
        targets: &[f64],
        h: GpHyperparams,
        offset: f64,
        scale: f64,
    ) -> Result<Self> {
        check_data(inputs, targets)?;
        h.validate()?;
        let (chol, jitter) = factorize(gram(inputs, &h), h.noise_variance)?;
        let alpha = chol.solve(&DVector::from_column_slice(targets));
        Ok(GpModel {
            inputs: inputs.to_vec(),
            hyperparams: h,
            chol,
            alpha,
            offset,
            scale,
            jitter,
        })
    }

    /// Standardizes the targets and maximizes the marginal likelihood.
    pub fn fit(inputs: &[Encoding], targets: &[f64], cfg: &FitConfig) -> Result<Self> {
        check_data(inputs, targets)?;
        let n = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let std = (targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = if std > 1e-12 { std } else { 1.0 };
        let z: Vec<f64> = targets.iter().map(|y| (y - mean) / scale).collect();

        let (lo, hi) = cfg.log_box();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let objective = |t: &[f64; 3]| {
            log_marginal_likelihood(inputs, &z, &GpHyperparams::from_log(t))
                .ok()
                .map(|(v, g)| (-v, g.map(|x| -x)))
        };
        let mut best: Option<([f64; 3], f64)> = None;
        for restart in 0..cfg.restarts.max(1) {
            let start = if restart == 0 {
                project(&GpHyperparams::default().to_log(), &lo, &hi)
            } else {
                std::array::from_fn(|i| rng.gen_range(lo[i]..=hi[i]))
            };
            if let Some((x, f)) = minimize_box(&objective, start, &lo, &hi, cfg.max_iters) {
                if best.is_none_or(|(_, bf)| f < bf) {
                    best = Some((x, f));
                }
            }
        }
        let (theta, _) = best.ok_or(Error::NotPositiveDefinite {
            jitter: JITTER_LADDER[3],
        })?;
        Self::build(inputs, &z, GpHyperparams::from_log(&theta), mean, scale)
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyperparams
    }

    /// Diagonal jitter that was needed on top of the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Posterior mean and variance at `x`; the variance is clamped at zero.
    pub fn posterior(&self, x: &Encoding) -> (f64, f64) {
        let h = &self.hyperparams;
        let kx = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|u| kernel(x, u, h)),
        );
        let mean = kx.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kx)
            .expect("cholesky factor has a positive diagonal");
        let var = (kernel(x, x, h) - v.dot(&v)).max(0.0);
        (
            self.offset + self.scale * mean,
            self.scale * self.scale * var,
        )
    }

    pub fn posterior_at(&self, p: &Primitive) -> (f64, f64) {
        self.posterior(&encode(p))
    }
}

fn project(x: &[f64; 3], lo: &[f64; 3], hi: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| x[i].clamp(lo[i], hi[i]))
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projected BFGS with backtracking. Returns the best point and value found.
fn minimize_box<F>(
    f: &F,
    x0: [f64; 3],
    lo: &[f64; 3],
    hi: &[f64; 3],
    max_iters: usize,
) -> Option<([f64; 3], f64)>
where
    F: Fn(&[f64; 3]) -> Option<(f64, [f64; 3])>,
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    let mut inv_h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..max_iters {
        // Projected gradient: components pushing out of an active bound are dropped.
        let pg: [f64; 3] = std::array::from_fn(|i| {
            if (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0) {
                0.0
            } else {
                g[i]
            }
        });
        if pg.iter().all(|v| v.abs() < 1e-6) {
            break;
        }
        let mut dir: [f64; 3] = std::array::from_fn(|i| -dot(&inv_h[i], &pg));
        if dot(&dir, &pg) >= 0.0 {
            inv_h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            dir = pg.map(|v| -v);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = project(&std::array::from_fn(|i| x[i] + step * dir[i]), lo, hi);
            if let Some((fc, gc)) = f(&cand) {
                let moved: [f64; 3] = std::array::from_fn(|i| cand[i] - x[i]);
                if fc <= fx + 1e-4 * dot(&g, &moved) {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s: [f64; 3] = std::array::from_fn(|i| xn[i] - x[i]);
        let y: [f64; 3] = std::array::from_fn(|i| gn[i] - g[i]);
        let sy = dot(&s, &y);
        let improvement = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if sy > 1e-12 {
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: [f64; 3] = std::array::from_fn(|i| dot(&inv_h[i], &y));
            let yhy = dot(&y, &hy);
            inv_h = std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    inv_h[i][j] - rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j]
                })
            });
        }
        if improvement.abs() < 1e-10 {
            break;
        }
    }
    Some((x, fx))
}
