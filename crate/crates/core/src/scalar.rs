use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the state/transform/channel algebra is written against.
///
/// Implemented for `f32`, `f64` and [`DoubleDouble`](crate::DoubleDouble).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Literal conversion; every constant used in this crate is exactly
    /// representable or rounds the usual way.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    /// A tolerance no tighter than a few hundred ulps of the type.
    ///
    /// For `f64` this returns `nominal` unchanged for every tolerance used in
    /// the crate; for `f32` it widens them to what single precision can hold.
    fn tolerance(nominal: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(1e3);
        let nominal = Self::lit(nominal);
        if nominal > floor {
            nominal
        } else {
            floor
        }
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
