//! Half-integer angular momenta and Clebsch–Gordan coefficients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Accepts `5/2`, `-3/2`, `+1/2`, `2` or a decimal like `-1.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("`{s}` is not a half-integer"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().trim_start_matches('+').parse().map_err(|_| bad())?;
            match den.trim() {
                "2" => Ok(HalfInt(num)),
                "1" => Ok(HalfInt(2 * num)),
                _ => Err(bad()),
            }
        } else {
            let v: f64 = s.trim_start_matches('+').parse().map_err(|_| bad())?;
            let twice = 2.0 * v;
            if (twice - twice.round()).abs() > 1e-9 {
                return Err(bad());
            }
            Ok(HalfInt(twice.round() as i32))
        }
    }
}

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `<j1 m1; j2 m2 | J M>` in the Condon–Shortley convention, by Racah's sum.
pub fn clebsch_gordan(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> f64 {
    let (j1, m1, j2, m2, j, m) = (j1.0, m1.0, j2.0, m2.0, j.0, m.0);
    if m1 + m2 != m {
        return 0.0;
    }
    if m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j + m) % 2 != 0 {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 || (j1 + j2 + j) % 2 != 0 {
        return 0.0;
    }
    // All arguments below are integers because of the parity checks above.
    let h = |x: i32| x / 2;
    let delta = ((j + 1) as f64 * factorial(h(j1 + j2 - j)) * factorial(h(j1 - j2 + j)) * factorial(h(-j1 + j2 + j))
        / factorial(h(j1 + j2 + j) + 1))
    .sqrt();
    let norm = (factorial(h(j1 + m1))
        * factorial(h(j1 - m1))
        * factorial(h(j2 + m2))
        * factorial(h(j2 - m2))
        * factorial(h(j + m))
        * factorial(h(j - m)))
    .sqrt();
    let mut sum = 0.0;
    for k in 0..=h(j1 + j2 - j) {
        let d = [
            h(j1 + j2 - j) - k,
            h(j1 - m1) - k,
            h(j2 + m2) - k,
            h(j - j2 + m1) + k,
            h(j - j1 - m2) + k,
        ];
        if d.iter().any(|&x| x < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / (factorial(k) * d.iter().map(|&x| factorial(x)).product::<f64>());
    }
    delta * norm * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hi(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(hi("5/2").twice(), 5);
        assert_eq!(hi("-3/2").twice(), -3);
        assert_eq!(hi("+1/2").twice(), 1);
        assert_eq!(hi("-1.5").twice(), -3);
        assert_eq!(hi("2").twice(), 4);
        assert_eq!(hi("-5/2").to_string(), "-5/2");
        assert_eq!(hi("1").to_string(), "1");
        assert!("1/3".parse::<HalfInt>().is_err());
        assert!("0.3".parse::<HalfInt>().is_err());
    }

    #[test]
    fn known_values() {
        // <1/2 1/2; 1/2 -1/2 | 1 0> = 1/sqrt 2, <1/2 1/2; 1/2 -1/2 | 0 0> = 1/sqrt 2
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((clebsch_gordan(hi("1/2"), hi("1/2"), hi("1/2"), hi("-1/2"), hi("1"), hi("0")) - r).abs() < 1e-15);
        assert!((clebsch_gordan(hi("1/2"), hi("1/2"), hi("1/2"), hi("-1/2"), hi("0"), hi("0")) - r).abs() < 1e-15);
        assert!((clebsch_gordan(hi("1/2"), hi("-1/2"), hi("1/2"), hi("1/2"), hi("0"), hi("0")) + r).abs() < 1e-15);
        // <1 0; 1 0 | 1 0> vanishes
        assert_eq!(clebsch_gordan(hi("1"), hi("0"), hi("1"), hi("0"), hi("1"), hi("0")), 0.0);
    }
}
