use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the algebra and integrators are generic over.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any float")
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize converts to any float")
    }

    fn to_f(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }

    /// 2π, used by every derivative in the Fourier basis.
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(<f64 as Scalar>::of(0.25), 0.25);
        assert_eq!(<f32 as Scalar>::of(0.5).to_f(), 0.5);
        assert!((<f64 as Scalar>::two_pi() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }
}
