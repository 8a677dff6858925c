use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use super::bernstein::{bernstein_eval, hypergeom_condmean, hypergeom_condmean_exact};
use super::envelope::EnvelopeCoefficients;

/// Slack used when coefficients are only available in floating point.
pub const NUMERIC_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `0 <= a(n,k) <= b(n,k) <= 1` fails.
    Range {
        n: u64,
        k: u64,
        lower: f64,
        upper: f64,
    },
    /// `a(n,k) < E(a(m, H_m) | H_n = k)`.
    LowerMartingale {
        m: u64,
        n: u64,
        k: u64,
        coefficient: f64,
        conditional_mean: f64,
    },
    /// `b(n,k) > E(b(m, H_m) | H_n = k)`.
    UpperMartingale {
        m: u64,
        n: u64,
        k: u64,
        coefficient: f64,
        conditional_mean: f64,
    },
}

/// Largest `h_n(p) - g_n(p)` over the grid for one scheduled `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRecord {
    pub n: u64,
    pub sup_gap: f64,
    pub at_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub envelope: String,
    pub n_max: u64,
    /// Whether the checks ran in exact rational arithmetic.
    pub exact: bool,
    pub indices: Vec<u64>,
    pub pairs_checked: usize,
    pub violations: Vec<Violation>,
    pub gaps: Vec<GapRecord>,
}

impl EnvelopeReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `p = 0.01, 0.02, ..., 0.99`.
pub fn default_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

enum Rows {
    Exact(Vec<(Vec<BigRational>, Vec<BigRational>)>),
    Float(Vec<(Vec<f64>, Vec<f64>)>),
}

/// Checks the range condition and the super/submartingale inequalities for
/// every pair `m < n` of scheduled indices up to `n_max`, and records the
/// sup-gap of the envelope polynomials on `grid`.
///
/// The gap only monitors convergence to the target; it is never a pass
/// criterion.
pub fn validate_envelope(
    env: &dyn EnvelopeCoefficients,
    n_max: u64,
    grid: &[f64],
) -> EnvelopeReport {
    let indices = env.schedule().up_to(n_max);
    let exact_rows: Option<Vec<_>> = indices
        .iter()
        .map(|&n| Some((env.lower_row_exact(n)?, env.upper_row_exact(n)?)))
        .collect();
    let rows = match exact_rows {
        Some(r) => Rows::Exact(r),
        None => Rows::Float(
            indices
                .iter()
                .map(|&n| (env.lower_row(n), env.upper_row(n)))
                .collect(),
        ),
    };

    let mut violations = Vec::new();
    for (i, &n) in indices.iter().enumerate() {
        for k in 0..=n as usize {
            let (lo, hi, ok) = match &rows {
                Rows::Exact(r) => {
                    let (a, b) = (&r[i].0[k], &r[i].1[k]);
                    let ok = !a.is_negative() && a <= b && *b <= BigRational::one();
                    (
                        a.to_f64().unwrap_or(f64::NAN),
                        b.to_f64().unwrap_or(f64::NAN),
                        ok,
                    )
                }
                Rows::Float(r) => {
                    let (a, b) = (r[i].0[k], r[i].1[k]);
                    let t = NUMERIC_TOLERANCE;
                    (a, b, a >= -t && a <= b + t && b <= 1.0 + t)
                }
            };
            if !ok {
                violations.push(Violation::Range {
                    n,
                    k: k as u64,
                    lower: lo,
                    upper: hi,
                });
            }
        }
    }

    let pairs: Vec<(usize, usize)> = (0..indices.len())
        .flat_map(|j| (0..j).map(move |i| (i, j)))
        .collect();
    let martingale: Vec<Violation> = pairs
        .par_iter()
        .flat_map_iter(|&(i, j)| check_pair(&rows, &indices, i, j))
        .collect();
    violations.extend(martingale);

    let gaps = indices
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (a, b) = match &rows {
                Rows::Exact(r) => (to_f64_row(&r[i].0), to_f64_row(&r[i].1)),
                Rows::Float(r) => r[i].clone(),
            };
            let mut best = GapRecord {
                n,
                sup_gap: f64::NEG_INFINITY,
                at_p: f64::NAN,
            };
            for &p in grid {
                let gap = bernstein_eval(&b, p) - bernstein_eval(&a, p);
                if gap > best.sup_gap {
                    best.sup_gap = gap;
                    best.at_p = p;
                }
            }
            best
        })
        .collect();

    EnvelopeReport {
        envelope: env.name().to_string(),
        n_max,
        exact: matches!(rows, Rows::Exact(_)),
        indices,
        pairs_checked: pairs.len(),
        violations,
        gaps,
    }
}

fn to_f64_row(row: &[BigRational]) -> Vec<f64> {
    row.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
}

fn check_pair(rows: &Rows, indices: &[u64], i: usize, j: usize) -> Vec<Violation> {
    let (m, n) = (indices[i], indices[j]);
    let mut out = Vec::new();
    for k in 0..=n {
        let (a, la, b, ub, lower_bad, upper_bad) = match rows {
            Rows::Exact(r) => {
                let la = hypergeom_condmean_exact(&r[i].0, n, k).expect("m < n by construction");
                let ub = hypergeom_condmean_exact(&r[i].1, n, k).expect("m < n by construction");
                let a = &r[j].0[k as usize];
                let b = &r[j].1[k as usize];
                let lower_bad = *a < la;
                let upper_bad = *b > ub;
                (
                    a.to_f64().unwrap_or(f64::NAN),
                    la.to_f64().unwrap_or(f64::NAN),
                    b.to_f64().unwrap_or(f64::NAN),
                    ub.to_f64().unwrap_or(f64::NAN),
                    lower_bad,
                    upper_bad,
                )
            }
            Rows::Float(r) => {
                let la = hypergeom_condmean(&r[i].0, n, k).expect("m < n by construction");
                let ub = hypergeom_condmean(&r[i].1, n, k).expect("m < n by construction");
                let a = r[j].0[k as usize];
                let b = r[j].1[k as usize];
                (
                    a,
                    la,
                    b,
                    ub,
                    a < la - NUMERIC_TOLERANCE,
                    b > ub + NUMERIC_TOLERANCE,
                )
            }
        };
        if lower_bad {
            out.push(Violation::LowerMartingale {
                m,
                n,
                k,
                coefficient: a,
                conditional_mean: la,
            });
        }
        if upper_bad {
            out.push(Violation::UpperMartingale {
                m,
                n,
                k,
                coefficient: b,
                conditional_mean: ub,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::envelope::{IdentityEnvelope, Schedule, SquareEnvelope, TabulatedEnvelope};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Float-only view of another provider, to exercise the numeric path.
    struct FloatOnly<E>(E);

    impl<E: EnvelopeCoefficients> EnvelopeCoefficients for FloatOnly<E> {
        fn schedule(&self) -> &Schedule {
            self.0.schedule()
        }
        fn lower_row(&self, n: u64) -> Vec<f64> {
            self.0.lower_row(n)
        }
        fn upper_row(&self, n: u64) -> Vec<f64> {
            self.0.upper_row(n)
        }
    }

    #[test]
    fn square_envelope_is_valid_with_exact_gap() {
        let env = SquareEnvelope::new(Schedule::Consecutive);
        let report = validate_envelope(&env, 30, &[0.5]);
        assert!(report.exact);
        assert!(report.is_valid(), "{:?}", report.violations);
        assert_eq!(report.pairs_checked, 30 * 29 / 2);
        let g20 = report.gaps.iter().find(|g| g.n == 20).unwrap();
        assert!((g20.sup_gap - 0.0125).abs() < 1e-15);
    }

    #[test]
    fn identity_envelope_has_zero_gap() {
        let env = IdentityEnvelope::new(Schedule::Consecutive);
        let report = validate_envelope(&env, 30, &default_grid());
        assert!(report.is_valid());
        assert!(report.gaps.iter().all(|g| g.sup_gap.abs() < 1e-15));
    }

    #[test]
    fn numeric_path_agrees() {
        let env = FloatOnly(SquareEnvelope::new(Schedule::PowersOfTwo));
        let report = validate_envelope(&env, 256, &default_grid());
        assert!(!report.exact);
        assert!(report.is_valid(), "{:?}", report.violations);
        // sup of p(1-p)/n over the grid is at p = 0.5
        let g = report.gaps.iter().find(|g| g.n == 128).unwrap();
        assert!((g.sup_gap - 0.25 / 128.0).abs() < 1e-12);
        assert_eq!(g.at_p, 0.5);
    }

    #[test]
    fn corrupted_coefficient_is_flagged() {
        let env = SquareEnvelope::new(Schedule::PowersOfTwo);
        let mut table = TabulatedEnvelope::snapshot(&env, 16).unwrap();
        // a(8,3) raised above b(8,3) = 9/64
        table.set(8, 3, rat(1, 2), rat(9, 64)).unwrap();
        let report = validate_envelope(&table, 16, &default_grid());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Range { n: 8, k: 3, .. })));
    }

    #[test]
    fn broken_martingale_inequality_is_flagged() {
        let env = SquareEnvelope::new(Schedule::PowersOfTwo);
        let mut table = TabulatedEnvelope::snapshot(&env, 8).unwrap();
        // E(a(2, H_2) | H_4 = 2) = 1/6, so a(4,2) = 0 breaks the lower inequality
        table.set(4, 2, rat(0, 1), rat(1, 4)).unwrap();
        let report = validate_envelope(&table, 8, &default_grid());
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::LowerMartingale {
                m: 2,
                n: 4,
                k: 2,
                ..
            }
        )));
    }
}
