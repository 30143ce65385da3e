use std::ops::{Add, Mul, Neg, Sub};

/// Ring operations shared by `f64` and truncated Taylor jets, so one
/// polynomial evaluator serves both plain and jet-transported flows.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn scale(self, c: f64) -> Self;
    /// Value part (the constant Taylor coefficient for jets).
    fn value(&self) -> f64;
    fn recip(&self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
}
