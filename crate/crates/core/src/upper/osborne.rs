use super::UpperBoundResult;
use crate::error::{Result, SsvError};
use crate::linalg::{frobenius_sq, sigma_max, CMatrix, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsborneOptions {
    pub max_sweeps: usize,
    /// Relative change of `‖M‖_F²` below which the sweeps stop.
    pub tol: f64,
}

impl Default for OsborneOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            tol: 1e-12,
        }
    }
}

fn offsets(dims: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(dims.len() + 1);
    let mut acc = 0;
    out.push(0);
    for d in dims {
        acc += d;
        out.push(acc);
    }
    out
}

fn expand(d: &[f64], dims: &[usize]) -> ComplexMatrix {
    let diag: Vec<f64> = d
        .iter()
        .zip(dims)
        .flat_map(|(&di, &n)| std::iter::repeat_n(di, n))
        .collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// Osborne balancing of a square `M` over diagonal scalings
/// `diag(d_1 I_{m_1}, …, d_v I_{m_v})`.
pub fn osborne_balance(
    m: &CMatrix,
    block_dims: &[usize],
    opts: &OsborneOptions,
) -> Result<UpperBoundResult> {
    if !m.is_square() {
        return Err(SsvError::Dimension("osborne_balance needs square M".into()));
    }
    osborne_balance_rect(m, block_dims, block_dims, opts)
}

/// Osborne balancing with separate output (`row_dims`) and input
/// (`col_dims`) partitions: block `(r, i)` of `M` is `row_dims[r] × col_dims[i]`
/// and is scaled by `d_r / d_i`.
///
/// Coordinates are updated one at a time, each to the exact minimizer of
/// `‖D_i M D_i^{-1}‖_F²` on the current matrix; a step whose recomputed norm
/// rounds above the current one is dropped, so the norm never increases.
pub fn osborne_balance_rect(
    m: &CMatrix,
    row_dims: &[usize],
    col_dims: &[usize],
    opts: &OsborneOptions,
) -> Result<UpperBoundResult> {
    if row_dims.len() != col_dims.len() || row_dims.is_empty() {
        return Err(SsvError::Dimension("row/col partitions differ in length".into()));
    }
    if row_dims.iter().sum::<usize>() != m.nrows() || col_dims.iter().sum::<usize>() != m.ncols() {
        return Err(SsvError::Dimension(format!(
            "partition {row_dims:?} x {col_dims:?} does not cover a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let v = row_dims.len();
    let ro = offsets(row_dims);
    let co = offsets(col_dims);
    let mut mk = m.clone();
    let mut d = vec![1.0; v];
    let mut history = vec![frobenius_sq(&mk)];
    let mut notes = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;

    let block_sq = |mk: &CMatrix, r: usize, i: usize| -> f64 {
        frobenius_sq(
            &mk.view((ro[r], co[i]), (row_dims[r], col_dims[i]))
                .into_owned(),
        )
    };

    let mut f_cur = history[0];
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for i in 0..v {
            let into: f64 = (0..v).filter(|&r| r != i).map(|r| block_sq(&mk, r, i)).sum();
            let out_of: f64 = (0..v).filter(|&r| r != i).map(|r| block_sq(&mk, i, r)).sum();
            if into == 0.0 || out_of == 0.0 {
                if into != out_of {
                    notes.push(format!("sweep {sweeps}: d_{i} clamped to 1"));
                }
                continue;
            }
            let di = (into / out_of).powf(0.25);
            let mut next = mk.clone();
            next.rows_mut(ro[i], row_dims[i]).scale_mut(di);
            next.columns_mut(co[i], col_dims[i]).scale_mut(1.0 / di);
            // near the optimum rounding can undo the exact decrease
            let f_next = frobenius_sq(&next);
            if f_next <= f_cur {
                mk = next;
                f_cur = f_next;
                d[i] *= di;
            }
        }
        let f = f_cur;
        let prev = *history.last().unwrap();
        history.push(f);
        if (prev - f).abs() <= opts.tol * prev.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    // scale invariance: center the scales geometrically
    let (lo, hi) = d
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let center = (lo * hi).sqrt();
    for x in d.iter_mut() {
        *x /= center;
    }

    let square = row_dims == col_dims;
    Ok(UpperBoundResult {
        alpha: sigma_max(&mk),
        scaling: expand(&d, col_dims),
        output_scaling: (!square).then(|| expand(&d, row_dims)),
        r_matrix: None,
        block_scales: d,
        converged,
        converged_by_ratio: false,
        iterations_used: sweeps,
        alpha_history: Vec::new(),
        objective_history: history,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_by_two_balances_in_one_step() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, c(10.0, 0.0), c(0.1, 0.0), ZERO]);
        let r = osborne_balance(&m, &[1, 1], &OsborneOptions::default()).unwrap();
        assert!((r.alpha - 1.0).abs() < 1e-14);
        // d_1 / d_2 = 0.1 after the first coordinate step
        assert!((r.block_scales[0] / r.block_scales[1] - 0.1).abs() < 1e-14);
        let balanced = r.scaled_matrix(&m).unwrap();
        assert!((balanced[(0, 1)] - c(1.0, 0.0)).norm() < 1e-13);
        assert!((balanced[(1, 0)] - c(1.0, 0.0)).norm() < 1e-13);
        assert!((r.check_alpha(&m).unwrap() - r.alpha).abs() < 1e-12);
    }

    #[test]
    fn block_diagonal_is_left_alone() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(3.0, 1.0);
        m[(1, 1)] = c(-1.0, 0.0);
        m[(2, 3)] = c(0.0, 2.0);
        m[(3, 2)] = c(1.0, 0.0);
        let r = osborne_balance(&m, &[2, 2], &OsborneOptions::default()).unwrap();
        assert!((r.alpha - sigma_max(&m)).abs() < 1e-14);
        assert!(r.converged);
        assert!(r.notes.is_empty());
    }

    #[test]
    fn identity() {
        let m = CMatrix::identity(4, 4);
        let r = osborne_balance(&m, &[2, 2], &OsborneOptions::default()).unwrap();
        assert_eq!(r.block_scales, vec![1.0, 1.0]);
        assert!((r.alpha - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_sided_coupling_is_clamped() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE2, c(5.0, 0.0), ZERO, ONE2]);
        let r = osborne_balance(&m, &[1, 1], &OsborneOptions::default()).unwrap();
        assert!(!r.notes.is_empty());
        assert!(r.alpha.is_finite());
    }

    const ONE2: Complex64 = Complex64::new(1.0, 0.0);

    #[test]
    fn bad_partition() {
        let m = CMatrix::identity(4, 4);
        assert!(osborne_balance(&m, &[2, 1], &OsborneOptions::default()).is_err());
    }

    #[test]
    fn rectangular_partition() {
        let m = CMatrix::from_fn(6, 4, |i, j| c((i as f64 + 1.0) * 0.3, (j as f64) - 1.5 * (i % 2) as f64));
        let r = osborne_balance_rect(&m, &[3, 3], &[2, 2], &OsborneOptions::default()).unwrap();
        assert!((r.check_alpha(&m).unwrap() - r.alpha).abs() < 1e-12 * r.alpha);
        assert!(r.objective_history.last().unwrap() <= &r.objective_history[0]);
    }
}
