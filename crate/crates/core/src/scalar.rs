//! Scalar abstraction shared by every numeric module.
//!
//! Everything in the crate is written against [`Real`] so that the same code
//! runs in `f64` (the default, used by the CLI) or `f32`. Random variates are
//! routed through the trait because `rand_distr`'s bounds on the standard
//! distributions are not implied by `num_traits::Float` alone.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Open01, StandardNormal};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Standard normal variate.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform variate on the open interval (0, 1).
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gamma variate with the given shape and *rate*.
    fn gamma_rate<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self;

    /// Beta variate, clamped to [0, 1].
    fn beta<R: Rng + ?Sized>(a: Self, b: Self, rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            fn gamma_rate<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self {
                let dist = Gamma::new(shape, 1.0 / rate)
                    .unwrap_or_else(|e| panic!("gamma({shape}, rate {rate}): {e}"));
                dist.sample(rng)
            }

            fn beta<R: Rng + ?Sized>(a: Self, b: Self, rng: &mut R) -> Self {
                let dist =
                    Beta::new(a, b).unwrap_or_else(|e| panic!("beta({a}, {b}): {e}"));
                let v: $t = dist.sample(rng);
                if v.is_nan() {
                    // both shapes tiny: the law collapses onto {0, 1}
                    if rng.random::<f64>() < (a as f64) / ((a + b) as f64) {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    v.clamp(0.0, 1.0)
                }
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
