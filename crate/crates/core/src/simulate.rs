//! Synthetic datasets for experiments and test oracles.

use rand::Rng;

use crate::copula;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::scalar::Real;

/// Reading of the second gamma parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaParam {
    #[default]
    Rate,
    Scale,
}

/// What to simulate.
#[derive(Debug, Clone, PartialEq)]
pub enum SimSpec<T> {
    /// `N(100, 100^2)`.
    ModelA { n: usize },
    /// `Gamma(3, 10)` with the second parameter read as `param`.
    ModelB { n: usize, param: GammaParam },
    /// Bivariate normal with mean `kappa` and covariance `scale [[1, rho], [rho, 1]]`.
    BivNormal { n: usize, kappa: [T; 2], scale: T, rho: T },
    /// Draws from a finite mixture of the unimodal kernel.
    Kernel { n: usize, weights: Vec<T>, mus: Vec<T>, c: T, kappa: T },
    /// Draws from a finite mixture of copula-coupled bivariate kernels.
    CopulaKernel { n: usize, weights: Vec<T>, mus: Vec<[T; 2]>, c: [T; 2], kappa: [T; 2], rho: T },
}

impl<T: Real> SimSpec<T> {
    pub fn model_a(n: usize) -> Self {
        Self::ModelA { n }
    }

    pub fn model_b(n: usize) -> Self {
        Self::ModelB { n, param: GammaParam::Rate }
    }

    /// The bivariate experiment: `kappa = (30, 60)`, covariance `10 [[1, .5], [.5, 1]]`.
    pub fn biv_normal(n: usize) -> Self {
        Self::BivNormal { n, kappa: [T::lit(30.0), T::lit(60.0)], scale: T::lit(10.0), rho: T::lit(0.5) }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::ModelA { n }
            | Self::ModelB { n, .. }
            | Self::BivNormal { n, .. }
            | Self::Kernel { n, .. }
            | Self::CopulaKernel { n, .. } => *n,
        }
    }
}

/// Draws a dataset; a pure function of the spec and the generator state.
pub fn generate<T: Real, R: Rng + ?Sized>(spec: &SimSpec<T>, rng: &mut R) -> Result<Dataset<T>> {
    let n = spec.n();
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    match spec {
        SimSpec::ModelA { .. } => {
            Dataset::univariate((0..n).map(|_| T::lit(100.0) + T::lit(100.0) * T::std_normal(rng)).collect())
        }
        SimSpec::ModelB { param, .. } => {
            let rate = match param {
                GammaParam::Rate => T::lit(10.0),
                GammaParam::Scale => T::lit(0.1),
            };
            Dataset::univariate((0..n).map(|_| T::gamma_rate(T::lit(3.0), rate, rng)).collect())
        }
        SimSpec::BivNormal { kappa, scale, rho, .. } => {
            if !(rho.abs() < T::one()) || !(*scale > T::zero()) {
                return Err(Error::InvalidParameter("need |rho| < 1 and scale > 0".into()));
            }
            let sd = scale.sqrt();
            let tail = (T::one() - *rho * *rho).sqrt();
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for _ in 0..n {
                let z1 = T::std_normal(rng);
                let z2 = *rho * z1 + tail * T::std_normal(rng);
                a.push(kappa[0] + sd * z1);
                b.push(kappa[1] + sd * z2);
            }
            Dataset::bivariate(a, b)
        }
        SimSpec::Kernel { weights, mus, c, kappa, .. } => {
            let params = mus.iter().map(|&m| KernelParams::new(m, *c, *kappa)).collect::<Result<Vec<_>>>()?;
            let pick = categorical(weights)?;
            Dataset::univariate((0..n).map(|_| params[pick(rng)].sample(rng)).collect())
        }
        SimSpec::CopulaKernel { weights, mus, c, kappa, rho, .. } => {
            copula::CopulaParams::new(*rho)?;
            let params = mus
                .iter()
                .map(|m| Ok([KernelParams::new(m[0], c[0], kappa[0])?, KernelParams::new(m[1], c[1], kappa[1])?]))
                .collect::<Result<Vec<_>>>()?;
            let pick = categorical(weights)?;
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for _ in 0..n {
                let p = &params[pick(rng)];
                let (x1, x2) = copula::sample_copula_pair(*rho, rng);
                a.push(p[0].kappa() + x1 / nonzero(p[0].mu(), p[0].sigma(), rng));
                b.push(p[1].kappa() + x2 / nonzero(p[1].mu(), p[1].sigma(), rng));
            }
            Dataset::bivariate(a, b)
        }
    }
}

fn categorical<T: Real, R: Rng + ?Sized>(weights: &[T]) -> Result<impl Fn(&mut R) -> usize + '_> {
    if weights.is_empty() || weights.iter().any(|&w| !(w >= T::zero())) {
        return Err(Error::InvalidParameter("weights must be non-negative and non-empty".into()));
    }
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::InvalidParameter("weights sum to zero".into()));
    }
    Ok(move |rng: &mut R| {
        let mut u = T::open01(rng) * total;
        for (k, &w) in weights.iter().enumerate() {
            if u < w {
                return k;
            }
            u = u - w;
        }
        weights.len() - 1
    })
}

fn nonzero<T: Real, R: Rng + ?Sized>(mu: T, sigma: T, rng: &mut R) -> T {
    loop {
        let z = mu + sigma * T::std_normal(rng);
        if z != T::zero() {
            return z;
        }
    }
}

/// Which latent carries the dependence in [`dependence_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Correlated normals `(Z1, Z2)`, independent uniforms.
    Z,
    /// Uniforms from a Gaussian copula, independent normals.
    X,
}

/// Spread of the sample correlation of `(Y1, Y2)` at one imposed correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependenceBand {
    pub rho: f64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
    pub mean: f64,
}

/// Draws `n` pairs `Y_l = X_l / Z_l` with `Z_l ~ N(mu_l, mu_l^2 / c)` and the
/// dependence imposed on `side` with correlation `rho` (which may be negative).
pub fn dependent_pairs<R: Rng + ?Sized>(side: Side, mu: [f64; 2], c: f64, rho: f64, n: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let sd = [mu[0].abs() / c.sqrt(), mu[1].abs() / c.sqrt()];
    let tail = (1.0 - rho * rho).max(0.0).sqrt();
    (0..n)
        .map(|_| {
            let (x, e) = match side {
                Side::X => {
                    let g1 = f64::std_normal(rng);
                    let g2 = rho * g1 + tail * f64::std_normal(rng);
                    let x = [crate::normal::cdf(g1), crate::normal::cdf(g2)];
                    (x, [f64::std_normal(rng), f64::std_normal(rng)])
                }
                Side::Z => {
                    let e1 = f64::std_normal(rng);
                    let e2 = rho * e1 + tail * f64::std_normal(rng);
                    ([f64::open01(rng), f64::open01(rng)], [e1, e2])
                }
            };
            [0, 1].map(|l| {
                let mut z = mu[l] + sd[l] * e[l];
                while z == 0.0 {
                    z = mu[l] + sd[l] * f64::std_normal(rng);
                }
                x[l] / z
            })
        })
        .collect()
}

/// For each imposed correlation, simulates `reps` datasets of `n` pairs and
/// reports the 2.5%, 50% and 97.5% quantiles of the sample correlation of `Y`.
pub fn dependence_study<R: Rng + ?Sized>(
    side: Side,
    mu: [f64; 2],
    c: f64,
    grid: &[f64],
    reps: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<DependenceBand>> {
    if reps == 0 || n < 3 {
        return Err(Error::InvalidParameter("need reps >= 1 and n >= 3".into()));
    }
    if mu.iter().any(|&m| m == 0.0 || !m.is_finite()) || !(c > 0.0) {
        return Err(Error::InvalidParameter("means must be non-zero and c positive".into()));
    }
    let mut out = Vec::with_capacity(grid.len());
    for &rho in grid {
        if !(rho.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!("correlation {rho} outside [-1, 1]")));
        }
        let mut corr: Vec<f64> = (0..reps)
            .map(|_| crate::diagnostics::pearson(&dependent_pairs(side, mu, c, rho, n, rng)))
            .collect();
        corr.sort_by(|a, b| a.total_cmp(b));
        out.push(DependenceBand {
            rho,
            lower: crate::diagnostics::quantile_sorted(&corr, 0.025),
            median: crate::diagnostics::quantile_sorted(&corr, 0.5),
            upper: crate::diagnostics::quantile_sorted(&corr, 0.975),
            mean: corr.iter().sum::<f64>() / reps as f64,
        });
    }
    Ok(out)
}
