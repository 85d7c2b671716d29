//! Phase-1 simplex for `A x = b, x ≥ 0` with Bland's anti-cycling rule.
//!
//! Rows are scaled to unit max-norm and sign-flipped so that `b ≥ 0`, then
//! one artificial variable per row starts the basis. A positive phase-1
//! optimum yields a Farkas vector `y` with `yᵀA ≥ 0` and `yᵀb < 0`, read off
//! the reduced costs of the artificial columns.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const ZERO_ROW: f64 = 1e-14;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Phase1Outcome {
    Feasible { x: Vec<f64> },
    Infeasible { farkas: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct Phase1Result {
    pub outcome: Phase1Outcome,
    /// Sum of artificial variables at the optimum (in scaled row units).
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + artificial, rhs stored separately
    data: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let p = self.at(r, c);
        {
            let row = &mut self.data[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[c] = 1.0;
        }
        self.rhs[r] /= p;
        let pivot_row: Vec<f64> = self.data[r * cols..(r + 1) * cols].to_vec();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * cols + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * cols..(i + 1) * cols];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn entering(&self) -> Option<usize> {
        (0..self.cols).find(|&j| self.cost[j] < -COST_EPS)
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let a = self.at(i, c);
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = self.rhs[i].max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                    if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }
}

/// Decide feasibility of `A x = b, x ≥ 0`. `tol` bounds the phase-1 optimum
/// accepted as zero.
///
/// Tall systems are first projected onto an orthonormal basis `C` of the
/// column space of `[A | b]`; `C A x = C b` has the same solutions, and a
/// Farkas vector `y'` of the projected system lifts to `y = Cᵀ y'`.
pub fn phase_one(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<Phase1Result> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{m} right-hand-side entries"),
            found: format!("{}", b.len()),
        });
    }
    if m <= n + 1 {
        return phase_one_dense(a, b, tol);
    }
    let c = range_basis(a, b);
    let mut res = phase_one_dense(&(&c * a), &(&c * b), tol)?;
    if let Phase1Outcome::Infeasible { farkas } = &mut res.outcome {
        let y = c.transpose() * DVector::from_column_slice(farkas);
        let scale = y.amax();
        *farkas = y
            .iter()
            .map(|v| if scale > 0.0 { v / scale } else { *v })
            .collect();
    }
    Ok(res)
}

const RANGE_RTOL: f64 = 1e-12;

/// Rows of the result are orthonormal and span the column space of `[A | b]`.
fn range_basis(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let mut ab = DMatrix::zeros(m, n + 1);
    ab.columns_mut(0, n).copy_from(a);
    ab.set_column(n, b);
    let svd = ab.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANGE_RTOL * smax)
        .collect();
    let mut c = DMatrix::zeros(keep.len().max(1), m);
    for (r, &i) in keep.iter().enumerate() {
        c.set_row(r, &u.column(i).transpose());
    }
    c
}

fn phase_one_dense(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<Phase1Result> {
    let (m, n) = a.shape();

    // Scale rows; remember (original row, multiplier) for the kept ones.
    let mut kept: Vec<(usize, f64)> = Vec::with_capacity(m);
    for i in 0..m {
        let scale = a.row(i).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if scale < ZERO_ROW {
            if b[i].abs() > tol {
                let mut farkas = vec![0.0; m];
                farkas[i] = -b[i].signum();
                return Ok(Phase1Result {
                    outcome: Phase1Outcome::Infeasible { farkas },
                    objective: b[i].abs(),
                    pivots: 0,
                });
            }
            continue;
        }
        let mut s = 1.0 / scale;
        if b[i] * s < 0.0 {
            s = -s;
        }
        kept.push((i, s));
    }

    let rows = kept.len();
    let cols = n + rows;
    let mut data = vec![0.0; rows * cols];
    let mut rhs = vec![0.0; rows];
    let mut cost = vec![0.0; cols];
    for (r, &(i, s)) in kept.iter().enumerate() {
        for j in 0..n {
            let v = a[(i, j)] * s;
            data[r * cols + j] = v;
            cost[j] -= v;
        }
        data[r * cols + n + r] = 1.0;
        rhs[r] = b[i] * s;
    }
    let mut t = Tableau {
        rows,
        cols,
        data,
        rhs,
        cost,
        basis: (n..n + rows).collect(),
    };

    let mut pivots = 0;
    while let Some(c) = t.entering() {
        let Some(r) = t.leaving(c) else {
            // phase 1 is bounded below by zero; an unbounded ray means the
            // tableau has lost accuracy
            return Err(Error::InvalidArgument(
                "simplex lost accuracy (unbounded phase-1 ray)".into(),
            ));
        };
        t.pivot(r, c);
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::InvalidArgument(
                "simplex pivot limit exceeded".into(),
            ));
        }
    }

    let objective: f64 = (0..rows)
        .filter(|&r| t.basis[r] >= n)
        .map(|r| t.rhs[r].max(0.0))
        .sum();

    let outcome = if objective <= tol {
        let mut x = vec![0.0; n];
        for r in 0..rows {
            if t.basis[r] < n {
                x[t.basis[r]] = t.rhs[r].max(0.0);
            }
        }
        Phase1Outcome::Feasible { x }
    } else {
        // Duals of phase 1: w_r = 1 − (reduced cost of artificial r).
        let mut farkas = vec![0.0; m];
        for (r, &(i, s)) in kept.iter().enumerate() {
            let w = 1.0 - t.cost[n + r];
            farkas[i] = -w * s;
        }
        let scale = farkas.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if scale > 0.0 {
            for v in &mut farkas {
                *v /= scale;
            }
        }
        Phase1Outcome::Infeasible { farkas }
    };

    Ok(Phase1Result {
        outcome,
        objective,
        pivots,
    })
}

/// Independent check of a Farkas vector: `min(yᵀA) ≥ −tol` and `yᵀb < −tol`.
pub fn verify_farkas(a: &DMatrix<f64>, b: &DVector<f64>, y: &[f64], tol: f64) -> FarkasCheck {
    let y = DVector::from_column_slice(y);
    let ya = a.transpose() * &y;
    let min_ya = ya.iter().copied().fold(f64::INFINITY, f64::min);
    let yb = y.dot(b);
    FarkasCheck {
        min_ya,
        yb,
        valid: min_ya >= -tol && yb < -tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct FarkasCheck {
    pub min_ya: f64,
    pub yb: f64,
    pub valid: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(rows: &[&[f64]], b: &[f64]) -> Phase1Result {
        let m = rows.len();
        let n = rows[0].len();
        let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
        phase_one(&a, &DVector::from_column_slice(b), 1e-9).unwrap()
    }

    #[test]
    fn simple_feasible() {
        // x + y = 1, x − y = 0.5 → x = 0.75, y = 0.25
        let res = solve(&[&[1.0, 1.0], &[1.0, -1.0]], &[1.0, 0.5]);
        match res.outcome {
            Phase1Outcome::Feasible { x } => {
                assert!((x[0] - 0.75).abs() < 1e-12);
                assert!((x[1] - 0.25).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_solution_is_infeasible_with_certificate() {
        // x + y = 1, x − y = 3 forces y = −1
        let rows: &[&[f64]] = &[&[1.0, 1.0], &[1.0, -1.0]];
        let b = [1.0, 3.0];
        let res = solve(rows, &b);
        let Phase1Outcome::Infeasible { farkas } = res.outcome else {
            panic!("expected infeasible");
        };
        let a = DMatrix::from_fn(2, 2, |i, j| rows[i][j]);
        let check = verify_farkas(&a, &DVector::from_column_slice(&b), &farkas, 1e-9);
        assert!(check.valid, "{check:?}");
    }

    #[test]
    fn zero_row_with_nonzero_rhs() {
        let res = solve(&[&[0.0, 0.0], &[1.0, 1.0]], &[2.0, 1.0]);
        let Phase1Outcome::Infeasible { farkas } = res.outcome else {
            panic!()
        };
        assert_eq!(farkas, vec![-1.0, 0.0]);
    }

    #[test]
    fn redundant_rows_are_harmless() {
        let res = solve(
            &[
                &[1.0, 1.0, 1.0],
                &[2.0, 2.0, 2.0],
                &[1.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0],
            ],
            &[1.0, 2.0, 0.2, 0.0],
        );
        let Phase1Outcome::Feasible { x } = res.outcome else {
            panic!()
        };
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((x[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn tall_systems_are_compressed() {
        // three columns, many dependent rows; x = (0.2, 0.3, 0.5)
        let cols = [[1.0, 0.0, 2.0], [0.0, 1.0, 1.0], [1.0, 1.0, 0.0]];
        let m = 12;
        let a = DMatrix::from_fn(m, 3, |i, j| cols[j][i % 3] * (1.0 + i as f64));
        let x = DVector::from_column_slice(&[0.2, 0.3, 0.5]);
        let b = &a * &x;
        let res = phase_one(&a, &b, 1e-9).unwrap();
        let Phase1Outcome::Feasible { x: got } = res.outcome else {
            panic!()
        };
        let resid = (&a * DVector::from_column_slice(&got) - &b).amax();
        assert!(resid < 1e-10);

        let mut b_bad = b.clone();
        b_bad[0] += 1.0;
        let res = phase_one(&a, &b_bad, 1e-9).unwrap();
        let Phase1Outcome::Infeasible { farkas } = res.outcome else {
            panic!()
        };
        assert!(verify_farkas(&a, &b_bad, &farkas, 1e-9).valid);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic degenerate system; Bland's rule must terminate
        let res = solve(
            &[
                &[0.5, -5.5, -2.5, 9.0, 1.0, 0.0, 0.0],
                &[0.5, -1.5, -0.5, 1.0, 0.0, 1.0, 0.0],
                &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            ],
            &[0.0, 0.0, 1.0],
        );
        assert!(matches!(res.outcome, Phase1Outcome::Feasible { .. }));
    }
}
