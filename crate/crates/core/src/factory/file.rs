//! Plain-text envelope files.
//!
//! ```text
//! # optional comments
//! schedule: 1 2 4 8
//! 1 0 0 0
//! 1 1 0 1
//! 2 0 0 0
//! ...
//! ```
//!
//! One header line declares the schedule; every other non-blank line is a
//! record `n k a b`. Coefficients are decimals (`0.125`, `1e-3`) or exact
//! rationals (`3/8`); decimals are read exactly, not through `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::envelope::{EnvelopeCoefficients, TabulatedEnvelope};
use crate::error::{invalid, Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `p/q` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all_digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    Some(if negative { -value } else { value })
}

/// Parses envelope file contents. Errors carry 1-based line numbers.
pub fn parse_envelope(text: &str) -> Result<TabulatedEnvelope> {
    let mut schedule: Option<(usize, Vec<u64>)> = None;
    let mut entries: BTreeMap<(u64, u64), (BigRational, BigRational, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("schedule:") {
            if schedule.is_some() {
                return Err(parse_err(line_no, "duplicate schedule header"));
            }
            let indices = rest
                .split_whitespace()
                .map(|t| t.parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(line_no, format!("bad schedule index: {e}")))?;
            if indices.is_empty() || indices[0] == 0 || indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(parse_err(
                    line_no,
                    "schedule must be a non-empty strictly increasing list of positive indices",
                ));
            }
            schedule = Some((line_no, indices));
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(
                line_no,
                format!("expected `n k a b`, found {} fields", fields.len()),
            ));
        }
        let n: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad index n `{}`", fields[0])))?;
        let k: u64 = fields[1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad index k `{}`", fields[1])))?;
        if k > n {
            return Err(parse_err(line_no, format!("k={k} exceeds n={n}")));
        }
        let a = parse_rational(fields[2])
            .ok_or_else(|| parse_err(line_no, format!("bad coefficient `{}`", fields[2])))?;
        let b = parse_rational(fields[3])
            .ok_or_else(|| parse_err(line_no, format!("bad coefficient `{}`", fields[3])))?;
        if let Some((_, _, first)) = entries.insert((n, k), (a, b, line_no)) {
            return Err(parse_err(
                line_no,
                format!("duplicate record for n={n}, k={k} (first on line {first})"),
            ));
        }
    }
    let (header_line, indices) =
        schedule.ok_or_else(|| parse_err(0, "missing `schedule:` header"))?;
    let mut rows = BTreeMap::new();
    for &n in &indices {
        let mut a = Vec::with_capacity(n as usize + 1);
        let mut b = Vec::with_capacity(n as usize + 1);
        for k in 0..=n {
            let (ak, bk, _) = entries.remove(&(n, k)).ok_or_else(|| {
                parse_err(
                    header_line,
                    format!("schedule lists n={n} but record n={n} k={k} is missing"),
                )
            })?;
            a.push(ak);
            b.push(bk);
        }
        rows.insert(n, (a, b));
    }
    if let Some((&(n, _), &(_, _, line))) = entries.iter().next() {
        return Err(parse_err(line, format!("n={n} is not in the schedule")));
    }
    TabulatedEnvelope::from_rows(indices, rows)
}

pub fn load_envelope(path: &Path) -> Result<TabulatedEnvelope> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("table")
        .to_string();
    Ok(parse_envelope(&text)?.with_name(&name))
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Writes the scheduled rows `n <= n_max` of an exact provider.
pub fn write_envelope(env: &dyn EnvelopeCoefficients, n_max: u64) -> Result<String> {
    let schedule = env.schedule().up_to(n_max);
    let mut out = String::new();
    let header: Vec<String> = schedule.iter().map(u64::to_string).collect();
    writeln!(out, "# {} envelope, n <= {n_max}", env.name()).unwrap();
    writeln!(out, "schedule: {}", header.join(" ")).unwrap();
    for n in schedule {
        let (Some(a), Some(b)) = (env.lower_row_exact(n), env.upper_row_exact(n)) else {
            return Err(invalid("writing an envelope file needs exact coefficients"));
        };
        for (k, (ak, bk)) in a.iter().zip(&b).enumerate() {
            writeln!(out, "{n} {k} {} {}", fmt_rational(ak), fmt_rational(bk)).unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::envelope::{Schedule, SquareEnvelope};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/8"), Some(rat(3, 8)));
        assert_eq!(parse_rational("-3/9"), Some(rat(-1, 3)));
        assert_eq!(parse_rational("0.125"), Some(rat(1, 8)));
        assert_eq!(parse_rational("1"), Some(rat(1, 1)));
        assert_eq!(parse_rational(".5"), Some(rat(1, 2)));
        assert_eq!(parse_rational("2.5e-1"), Some(rat(1, 4)));
        assert_eq!(parse_rational("1E2"), Some(rat(100, 1)));
        assert_eq!(parse_rational("0.1"), Some(rat(1, 10)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
        assert_eq!(parse_rational("1.2.3"), None);
    }

    #[test]
    fn write_then_parse_square() {
        let env = SquareEnvelope::new(Schedule::PowersOfTwo);
        let text = write_envelope(&env, 16).unwrap();
        let table = parse_envelope(&text).unwrap();
        assert_eq!(table.schedule().up_to(100), vec![1, 2, 4, 8, 16]);
        for n in [1, 2, 4, 8, 16] {
            assert_eq!(table.lower_row_exact(n), env.lower_row_exact(n));
            assert_eq!(table.upper_row_exact(n), env.upper_row_exact(n));
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_envelope("schedule: 1\n1 0 0 0\n1 1 0 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        let err = parse_envelope("schedule: 1\n1 0 0 0\n1 0 0 0\n1 1 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        let err = parse_envelope("schedule: 1 2\n1 0 0 0\n1 1 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");

        let err = parse_envelope("schedule: 1\n1 0 0 0\n1 1 0 1\n2 0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");

        let err = parse_envelope("1 0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));

        let err = parse_envelope("schedule: 2 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));

        let err = parse_envelope("schedule: 1\n1 2 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nschedule: 1 # only one\n1 0 0 0\n\n1 1 1/2 1 # half\n";
        let table = parse_envelope(text).unwrap();
        assert_eq!(table.lower_row(1), vec![0.0, 0.5]);
        assert_eq!(table.upper_row(1), vec![0.0, 1.0]);
    }
}
