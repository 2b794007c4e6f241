use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::dual::Dual;
use crate::error::{LabError, Result};
use crate::geometry::{Chart, PhasePoint};
use crate::potentials::PotentialSpec;

use super::{bracket_from_gradients, hamiltonian, Observable};

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEntry {
    pub sigma: usize,
    pub i: usize,
    pub l: usize,
    pub value: BigRational,
}

/// Coefficients `A[sigma][i]`, `sigma = 0..=n`, `i = 0..=2 sigma + 1`, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub n: usize,
    pub entries: Vec<CoefficientEntry>,
}

impl CoefficientTable {
    pub fn get(&self, sigma: usize, i: usize) -> Option<&BigRational> {
        self.entries
            .iter()
            .find(|e| e.sigma == sigma && e.i == i)
            .map(|e| &e.value)
    }

    /// Entries rounded to `f64`, in table order.
    pub fn to_f64(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.value.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn index_pairs(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| (e.sigma, e.i)).collect()
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

/// `A[sigma][i] = (-1)^(2n-sigma) / m^(2 sigma+1-i) C(m, i) C(floor((m-i)/2), floor((2 sigma+1-i)/2))`
/// with `m = 2n + 1`, in exact rational arithmetic.
pub fn coefficient_table(n: usize) -> Result<CoefficientTable> {
    if n < 1 {
        return Err(LabError::Domain(format!("coefficient table needs n >= 1, got {n}")));
    }
    let m = 2 * n + 1;
    let mut entries = Vec::with_capacity((n + 1) * (n + 2));
    for sigma in 0..=n {
        for i in 0..=2 * sigma + 1 {
            let l = 2 * sigma + 1 - i;
            let sign = if (2 * n - sigma).is_multiple_of(2) { 1 } else { -1 };
            let num = BigInt::from(sign) * binomial(m, i) * binomial((m - i) / 2, l / 2);
            let den = num_traits::pow(BigInt::from(m), l);
            entries.push(CoefficientEntry {
                sigma,
                i,
                l,
                value: BigRational::new(num, den),
            });
        }
    }
    Ok(CoefficientTable { n, entries })
}

/// `d^l/dpsi^l cos(m psi) = m^l cos(m psi + l pi/2)`.
fn cos_derivative(m: f64, l: usize, psi: &Dual) -> Dual {
    let arg = psi.scale(m);
    let base = match l % 4 {
        0 => arg.cos(),
        1 => -arg.sin(),
        2 => -arg.cos(),
        _ => arg.sin(),
    };
    base.scale(m.powi(l as i32))
}

fn check_fifth_chart(chart: Chart) -> Result<()> {
    match chart {
        Chart::ReducedPolar | Chart::Cylindrical3 => Ok(()),
        other => Err(LabError::IncompatibleChart {
            chart: other.to_string(),
            family: "ttw".into(),
        }),
    }
}

fn check_fifth_params(n: usize, k: f64) -> Result<()> {
    if n < 1 {
        return Err(LabError::Domain(format!("fifth integral needs n >= 1, got {n}")));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(LabError::Domain(format!("fifth integral needs k > 0, got {k}")));
    }
    Ok(())
}

/// One term `r^-(m-i) (2k / sin^2(m psi))^(n-sigma) d^l cos(m psi) p_r^i p_psi^l`
/// without its coefficient. Uses only `(r, psi, p_r, p_psi)`, which are the
/// first two coordinates of both supported charts.
fn fifth_term(n: usize, k: f64, sigma: usize, i: usize) -> impl Fn(&[Dual], &[Dual]) -> Dual + Send + Sync + Clone {
    let m = 2 * n + 1;
    let l = 2 * sigma + 1 - i;
    move |q: &[Dual], p: &[Dual]| {
        let (r, psi) = (&q[0], &q[1]);
        let mut t = cos_derivative(m as f64, l, psi) * r.powi(-((m - i) as i32));
        if n > sigma {
            let s2 = psi.scale(m as f64).sin().sq();
            t = t * s2.recip().scale(2.0 * k).powi((n - sigma) as i32);
        }
        if i > 0 {
            t = t * p[0].powi(i as i32);
        }
        if l > 0 {
            t = t * p[1].powi(l as i32);
        }
        t
    }
}

/// The fifth integral with arbitrary coefficients, in table order.
pub fn fifth_integral_from_table(chart: Chart, n: usize, k: f64, coeffs: &[f64]) -> Result<Observable> {
    check_fifth_chart(chart)?;
    check_fifth_params(n, k)?;
    let expected = (n + 1) * (n + 2);
    if coeffs.len() != expected {
        return Err(LabError::LengthMismatch {
            expected,
            got: coeffs.len(),
        });
    }
    let mut terms = Vec::with_capacity(expected);
    let mut idx = 0;
    for sigma in 0..=n {
        for i in 0..=2 * sigma + 1 {
            if coeffs[idx] != 0.0 {
                terms.push((coeffs[idx], fifth_term(n, k, sigma, i)));
            }
            idx += 1;
        }
    }
    Ok(Observable::new(
        format!("I{n}"),
        chart,
        (2 * n + 1) as u32,
        move |q, p| terms.iter().map(|(a, t)| t(q, p).scale(*a)).sum(),
    ))
}

/// The fifth integral with the exact table on `chart` (reduced plane or
/// the three-body cylindrical chart, where it ignores `u`).
pub fn fifth_integral_on(chart: Chart, n: usize, k: f64) -> Result<Observable> {
    let table = coefficient_table(n)?;
    fifth_integral_from_table(chart, n, k, &table.to_f64())
}

/// The fifth integral on the reduced `(r, psi)` plane.
pub fn fifth_integral(n: usize, k: f64) -> Result<Observable> {
    fifth_integral_on(Chart::ReducedPolar, n, k)
}

/// `(p_r^2 + p_psi^2 / r^2)/2 + k / (r sin(m psi))^2`.
pub fn reduced_hamiltonian(n: usize, k: f64) -> Result<Observable> {
    check_fifth_params(n, k)?;
    let spec = PotentialSpec::Ttw { n: n as u32, k };
    Ok(hamiltonian(&spec, Chart::ReducedPolar)?.renamed("H_reduced"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignFlipResult {
    /// Flipped `(sigma, i)` entries.
    pub flipped: Vec<(usize, usize)>,
    /// Max absolute bracket with the reduced Hamiltonian.
    pub max_abs: f64,
    /// Max of `|sum_e A_e b_e| / sum_e |A_e b_e|`, scale-free cancellation ratio.
    pub max_relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignScan {
    pub n: usize,
    pub points: usize,
    pub baseline: SignFlipResult,
    /// True when every sign subset (up to the global sign) was tried.
    pub exhaustive: bool,
    pub assignments_tested: usize,
    pub single_flips: Vec<SignFlipResult>,
    /// Assignments whose relative residual is below the tolerance.
    pub zeroing: Vec<SignFlipResult>,
    pub tolerance: f64,
}

/// Largest table size scanned exhaustively.
const EXHAUSTIVE_LIMIT: usize = 12;

/// Brackets of every term with the reduced Hamiltonian, per point. The fifth
/// integral is linear in its coefficients, so any sign assignment is a
/// weighted sum of these.
fn term_brackets(n: usize, k: f64, points: &[PhasePoint]) -> Result<Vec<Vec<f64>>> {
    let h = reduced_hamiltonian(n, k)?;
    let table = coefficient_table(n)?;
    let terms: Vec<Observable> = table
        .entries
        .iter()
        .map(|e| {
            Observable::new(
                format!("T{}_{}", e.sigma, e.i),
                Chart::ReducedPolar,
                (e.i + e.l) as u32,
                fifth_term(n, k, e.sigma, e.i),
            )
        })
        .collect();
    points
        .par_iter()
        .map(|pt| {
            let gh = h.flat_gradient(pt)?;
            terms
                .iter()
                .map(|t| Ok(bracket_from_gradients(&gh, &t.flat_gradient(pt)?)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

fn evaluate_signs(coeffs: &[f64], brackets: &[Vec<f64>], signs: &[f64], pairs: &[(usize, usize)]) -> SignFlipResult {
    let (mut max_abs, mut max_relative) = (0.0f64, 0.0f64);
    for b in brackets {
        let (mut sum, mut mag) = (0.0, 0.0);
        for ((a, s), be) in coeffs.iter().zip(signs).zip(b) {
            let t = a * s * be;
            sum += t;
            mag += t.abs();
        }
        max_abs = max_abs.max(sum.abs());
        if mag > 0.0 {
            max_relative = max_relative.max(sum.abs() / mag);
        }
    }
    SignFlipResult {
        flipped: signs
            .iter()
            .zip(pairs)
            .filter(|(s, _)| **s < 0.0)
            .map(|(_, p)| *p)
            .collect(),
        max_abs,
        max_relative,
    }
}

/// Residual of the exact table and of per-`(sigma, i)` sign flips over
/// `points` (reduced chart). Small tables are scanned over all sign subsets
/// with the first entry fixed, since a global sign change is trivial.
pub fn scan_fifth_signs(n: usize, k: f64, points: &[PhasePoint], tolerance: f64) -> Result<SignScan> {
    let coeffs = coefficient_table(n)?.to_f64();
    scan_fifth_signs_of(n, k, &coeffs, points, tolerance)
}

/// As [`scan_fifth_signs`] starting from an arbitrary coefficient vector.
pub fn scan_fifth_signs_of(
    n: usize,
    k: f64,
    coeffs: &[f64],
    points: &[PhasePoint],
    tolerance: f64,
) -> Result<SignScan> {
    if points.is_empty() {
        return Err(LabError::Empty("sign scan needs sample points".into()));
    }
    let table = coefficient_table(n)?;
    if coeffs.len() != table.entries.len() {
        return Err(LabError::LengthMismatch {
            expected: table.entries.len(),
            got: coeffs.len(),
        });
    }
    let pairs = table.index_pairs();
    let brackets = term_brackets(n, k, points)?;
    let e = coeffs.len();
    let ones = vec![1.0; e];
    let baseline = evaluate_signs(coeffs, &brackets, &ones, &pairs);

    let single_flips: Vec<SignFlipResult> = (0..e)
        .map(|j| {
            let mut s = ones.clone();
            s[j] = -1.0;
            evaluate_signs(coeffs, &brackets, &s, &pairs)
        })
        .collect();

    let exhaustive = e <= EXHAUSTIVE_LIMIT;
    let (zeroing, tested) = if exhaustive {
        let masks: Vec<u64> = (1..(1u64 << (e - 1))).collect();
        let found: Vec<SignFlipResult> = masks
            .par_iter()
            .map(|mask| {
                let s: Vec<f64> = (0..e)
                    .map(|j| if j > 0 && mask >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                evaluate_signs(coeffs, &brackets, &s, &pairs)
            })
            .filter(|r| r.max_relative < tolerance)
            .collect();
        (found, masks.len() + 1)
    } else {
        let found = single_flips
            .iter()
            .filter(|r| r.max_relative < tolerance)
            .cloned()
            .collect();
        (found, e + 1)
    };

    Ok(SignScan {
        n,
        points: points.len(),
        baseline,
        exhaustive,
        assignments_tested: tested,
        single_flips,
        zeroing,
        tolerance,
    })
}
