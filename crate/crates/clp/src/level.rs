//! Exact rational level values.
//!
//! Level assignments are y-coordinates. All constructions in the pipeline
//! insert new levels "directly above" or "directly below" existing ones,
//! i.e. at midpoints, so exact rationals are required (floats would
//! eventually produce equal-comparing distinct levels).

use num_integer::Integer;
use std::fmt;

/// An exact rational level value in canonical reduced form.
///
/// Ordering and equality agree with rational comparison. The denominator is
/// always positive. Desk-scale instances never approach `i64` limits
/// (midpoint chains only double denominators), but arithmetic is checked in
/// debug builds regardless.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level {
    num: i64,
    den: i64,
}

impl Level {
    /// Creates a level from a numerator/denominator pair, reducing to
    /// canonical form. Panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "level denominator must be nonzero");
        let g = num.gcd(&den);
        let (mut num, mut den) = (num / g, den / g);
        if den < 0 {
            num = -num;
            den = -den;
        }
        Level { num, den }
    }

    /// Creates an integral level.
    pub fn int(v: i64) -> Self {
        Level { num: v, den: 1 }
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    /// The midpoint between two levels; used for "directly above/below"
    /// placements between occupied levels.
    pub fn midpoint(&self, other: &Level) -> Level {
        // a/b + c/d = (ad + cb) / bd, halved.
        Level::new(
            self.num * other.den + other.num * self.den,
            2 * self.den * other.den,
        )
    }

    /// The level one unit above (used above the topmost occupied level).
    pub fn plus_one(&self) -> Level {
        Level::new(self.num + self.den, self.den)
    }

    /// The level one unit below (used below the bottommost occupied level).
    pub fn minus_one(&self) -> Level {
        Level::new(self.num - self.den, self.den)
    }

    /// Parses a decimal or integer literal ("3", "-3.5", "0.25") exactly.
    pub fn parse_decimal(s: &str) -> Option<Level> {
        let s = s.trim();
        if s.is_empty() {
            return None;
        }
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (-1i64, rest),
            None => (1i64, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return None;
        }
        let mut num: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().ok()?
        };
        let mut den: i64 = 1;
        for c in frac_part.chars() {
            num = num.checked_mul(10)?.checked_add((c as u8 - b'0') as i64)?;
            den = den.checked_mul(10)?;
        }
        Some(Level::new(sign * num, den))
    }
}

impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Level {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Cross-multiply in i128 to avoid overflow; denominators are positive.
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}
