use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// An integer or half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInteger(i32);

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger(0);
    pub const ONE: HalfInteger = HalfInteger(2);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInteger(twice)
    }

    pub const fn int(n: i32) -> Self {
        HalfInteger(2 * n)
    }

    /// Parses a float that must be a multiple of 1/2.
    pub fn from_f64(v: f64) -> Result<Self> {
        let twice = 2.0 * v;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 || twice.abs() > 1e6 {
            return Err(Error::InvalidQuantumNumbers(format!("{v} is not a half-integer")));
        }
        Ok(HalfInteger(twice.round() as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn abs(self) -> Self {
        HalfInteger(self.0.abs())
    }

    /// `-j, -j+1, ..., j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInteger> {
        let j = self.0;
        (-j..=j).step_by(2).map(HalfInteger)
    }
}

impl Add for HalfInteger {
    type Output = HalfInteger;
    fn add(self, o: Self) -> Self {
        HalfInteger(self.0 + o.0)
    }
}

impl Sub for HalfInteger {
    type Output = HalfInteger;
    fn sub(self, o: Self) -> Self {
        HalfInteger(self.0 - o.0)
    }
}

impl Neg for HalfInteger {
    type Output = HalfInteger;
    fn neg(self) -> Self {
        HalfInteger(-self.0)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInteger {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for HalfInteger {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        HalfInteger::from_f64(v).map_err(serde::de::Error::custom)
    }
}
