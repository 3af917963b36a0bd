//! Budget grids: `"16,64,256"`, `"1e3:1e6:log8"` or `"64:4096:lin4"`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest budget a grid may contain.
pub const MAX_BUDGET: u64 = 1 << 40;

/// Most points a range grid may expand to.
pub const MAX_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseGridError {
    #[error("empty budget grid")]
    Empty,
    #[error("invalid budget `{0}`")]
    InvalidNumber(String),
    #[error("budget {0} is outside 1..={MAX_BUDGET}")]
    OutOfRange(u64),
    #[error("range `{0}` must look like `a:b:logK` or `a:b:linK`")]
    MalformedRange(String),
    #[error("range needs between 2 and {MAX_POINTS} points, got `{0}`")]
    BadCount(String),
    #[error("budgets must be strictly increasing: {prev} then {next}")]
    NotIncreasing { prev: u64, next: u64 },
}

/// A strictly increasing list of evaluation budgets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetGrid(Vec<u64>);

impl BudgetGrid {
    pub fn new(values: Vec<u64>) -> Result<Self, ParseGridError> {
        if values.is_empty() {
            return Err(ParseGridError::Empty);
        }
        for &v in &values {
            if v == 0 || v > MAX_BUDGET {
                return Err(ParseGridError::OutOfRange(v));
            }
        }
        for w in values.windows(2) {
            if w[1] <= w[0] {
                return Err(ParseGridError::NotIncreasing {
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }
}

impl fmt::Display for BudgetGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Integers written plainly (`4096`), in scientific notation (`1e6`,
/// `2.5e3`) or as powers (`2^18`). The value must be a whole number.
fn parse_budget(s: &str) -> Result<u64, ParseGridError> {
    let bad = || ParseGridError::InvalidNumber(s.to_owned());
    let s = s.trim();
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((base, exp)) = s.split_once('^') {
        let base: u64 = base.parse().map_err(|_| bad())?;
        let exp: u32 = exp.parse().map_err(|_| bad())?;
        let v = base
            .checked_pow(exp)
            .ok_or(ParseGridError::OutOfRange(u64::MAX))?;
        return check_range(v);
    }
    if s.bytes().all(|b| b.is_ascii_digit()) {
        let v: u64 = s
            .parse()
            .map_err(|_| ParseGridError::OutOfRange(u64::MAX))?;
        return check_range(v);
    }
    if !s
        .bytes()
        .all(|b| b.is_ascii_digit() || b"eE.+-".contains(&b))
    {
        return Err(bad());
    }
    let v: f64 = s.parse().map_err(|_| bad())?;
    if !v.is_finite() || v.fract() != 0.0 || v < 0.0 {
        return Err(bad());
    }
    if v > MAX_BUDGET as f64 {
        return Err(ParseGridError::OutOfRange(u64::MAX));
    }
    check_range(v as u64)
}

fn check_range(v: u64) -> Result<u64, ParseGridError> {
    if v == 0 || v > MAX_BUDGET {
        Err(ParseGridError::OutOfRange(v))
    } else {
        Ok(v)
    }
}

fn parse_range(s: &str) -> Result<Vec<u64>, ParseGridError> {
    let malformed = || ParseGridError::MalformedRange(s.to_owned());
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, spacing] = parts[..] else {
        return Err(malformed());
    };
    let (lo, hi) = (parse_budget(lo)?, parse_budget(hi)?);
    let (log, count) = if let Some(k) = spacing.strip_prefix("log") {
        (true, k)
    } else if let Some(k) = spacing.strip_prefix("lin") {
        (false, k)
    } else {
        return Err(malformed());
    };
    let count: usize = count
        .parse()
        .map_err(|_| ParseGridError::BadCount(s.to_owned()))?;
    if !(2..=MAX_POINTS).contains(&count) {
        return Err(ParseGridError::BadCount(s.to_owned()));
    }
    if hi <= lo {
        return Err(ParseGridError::NotIncreasing { prev: lo, next: hi });
    }
    let steps = (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == count - 1 {
                hi
            } else if log {
                let t = k as f64 / steps;
                ((lo as f64).ln() * (1.0 - t) + (hi as f64).ln() * t)
                    .exp()
                    .round() as u64
            } else {
                (lo as f64 + (hi - lo) as f64 * k as f64 / steps).round() as u64
            }
        })
        .collect())
}

impl FromStr for BudgetGrid {
    type Err = ParseGridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseGridError::Empty);
        }
        let values = if s.contains(':') {
            parse_range(s)?
        } else {
            s.split(',').map(parse_budget).collect::<Result<_, _>>()?
        };
        Self::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(s: &str) -> Vec<u64> {
        s.parse::<BudgetGrid>().unwrap().values().to_vec()
    }

    #[test]
    fn ranges_and_lists() {
        assert_eq!(
            grid("64:262144:log13"),
            (6..=18).map(|k| 1u64 << k).collect::<Vec<_>>()
        );
        assert_eq!(grid("1e3:1e6:log4"), vec![1000, 10_000, 100_000, 1_000_000]);
        assert_eq!(grid("10:40:lin4"), vec![10, 20, 30, 40]);
        assert_eq!(grid("16, 2^6,1e3"), vec![16, 64, 1000]);
        assert_eq!(grid("7"), vec![7]);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in [
            "",
            "0",
            "5,5",
            "9,3",
            "1.5",
            "-3",
            "abc",
            "1e3:1e2:log3",
            "1:2:log1",
            "1:10:geo3",
            "1:4:log10",
            "2^99",
            "1e300",
            "nan",
            "inf",
            "1:2",
            "1:2:3:4",
            "1,,2",
        ] {
            assert!(bad.parse::<BudgetGrid>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn display_round_trips() {
        let g: BudgetGrid = "1e3:1e6:log8".parse().unwrap();
        assert_eq!(g.to_string().parse::<BudgetGrid>().unwrap(), g);
    }
}
