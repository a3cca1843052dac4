//! Scalar abstraction shared by the instance, regret and oracle code.
//!
//! [`Scalar`] covers everything that only needs field arithmetic and an
//! ordering, so exact rationals work alongside `f32`/`f64`. [`Real`] adds
//! the transcendental functions needed by simulation and statistics.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered field element usable for costs, rates and regret accounting.
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Smallest integer `k >= self`, or `None` for negative or non-finite values.
    ///
    /// Floating-point values within `1e-9` (relative) of an integer snap to it,
    /// so `T / (T / s)` recovers `s` instead of `s + 1`.
    fn ceil_u64(self) -> Option<u64>;

    fn magnitude(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    fn from_count(k: u64) -> Self {
        Self::from_u64(k).expect("count representable in scalar type")
    }

    fn lossy_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Floating-point scalar.
pub trait Real: Scalar + Float {}

macro_rules! impl_float_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            fn ceil_u64(self) -> Option<u64> {
                if !self.is_finite() || self < 0.0 {
                    return None;
                }
                let nearest = self.round();
                let tol = 1e-9 * (self.abs() as f64).max(1.0);
                let k = if ((self - nearest).abs() as f64) <= tol {
                    nearest
                } else {
                    self.ceil()
                };
                k.to_u64()
            }
        }

        impl Real for $f {}
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

macro_rules! impl_ratio_scalar {
    ($i:ty) => {
        impl Scalar for Ratio<$i> {
            fn ceil_u64(self) -> Option<u64> {
                if self < Ratio::from_integer(0) {
                    return None;
                }
                u64::try_from(self.ceil().to_integer()).ok()
            }
        }
    };
}

impl_ratio_scalar!(i64);
impl_ratio_scalar!(i128);

/// `|a - b| <= rel * max(1, |a|)`, evaluated in `f64`.
pub fn close_rel<S: Scalar>(a: S, b: S, rel: f64) -> bool {
    let diff = (a - b).magnitude().lossy_f64();
    diff <= rel * a.magnitude().lossy_f64().max(1.0)
}
