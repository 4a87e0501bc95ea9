use num_complex::Complex64;

use super::osborne::{osborne_balance_rect, OsborneOptions};
use super::UpperBoundResult;
use crate::error::{Result, SsvError};
use crate::linalg::{frobenius_sq, kron_identity, sigma_max, CMatrix, ComplexMatrix, ZERO};
use crate::structure::RepeatedShape;

const NEWTON_MAX_ITERS: usize = 50;
const NEWTON_GRAD_TOL: f64 = 1e-10;
const ARMIJO: f64 = 0.25;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

/// Coefficients of
/// `f(s) = c0 + 2Re(c1 s) + c2|s|² + 2Re(c3 s²) + 2Re(c4 s|s|²) + c5|s|⁴`,
/// the squared Frobenius norm after one off-diagonal scaling step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub c0: f64,
    pub c1: Complex64,
    pub c2: f64,
    pub c3: Complex64,
    pub c4: Complex64,
    pub c5: f64,
}

impl QuarticCoeffs {
    pub fn eval(&self, s: Complex64) -> f64 {
        self.eval_xy(s.re, s.im)
    }

    /// Real form over `s = x + iy`.
    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        let (a, b, cc, p, q) = self.real_form();
        let r = x * x + y * y;
        self.c0 + 2.0 * self.c1.re * x - 2.0 * self.c1.im * y
            + a * x * x
            + b * y * y
            + cc * x * y
            + 2.0 * p * x * r
            - 2.0 * q * y * r
            + self.c5 * r * r
    }

    pub fn gradient_xy(&self, x: f64, y: f64) -> [f64; 2] {
        let (a, b, cc, p, q) = self.real_form();
        let r = x * x + y * y;
        [
            2.0 * self.c1.re + 2.0 * a * x + cc * y + 2.0 * p * (3.0 * x * x + y * y)
                - 4.0 * q * x * y
                + 4.0 * self.c5 * r * x,
            -2.0 * self.c1.im + 2.0 * b * y + cc * x + 4.0 * p * x * y
                - 2.0 * q * (x * x + 3.0 * y * y)
                + 4.0 * self.c5 * r * y,
        ]
    }

    pub fn hessian_xy(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let (a, b, cc, p, q) = self.real_form();
        let r = x * x + y * y;
        let hxx = 2.0 * a + 12.0 * p * x - 4.0 * q * y + 4.0 * self.c5 * (r + 2.0 * x * x);
        let hyy = 2.0 * b + 4.0 * p * x - 12.0 * q * y + 4.0 * self.c5 * (r + 2.0 * y * y);
        let hxy = cc + 4.0 * p * y - 4.0 * q * x + 8.0 * self.c5 * x * y;
        [[hxx, hxy], [hxy, hyy]]
    }

    fn real_form(&self) -> (f64, f64, f64, f64, f64) {
        (
            self.c2 + 2.0 * self.c3.re,
            self.c2 - 2.0 * self.c3.re,
            -4.0 * self.c3.im,
            self.c4.re,
            self.c4.im,
        )
    }
}

fn inner(x: &CMatrix, y: &CMatrix) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Quartic coefficients for scaling `M` by `D = S ⊗ I` with `S = I + s·E_ij`
/// (block indices are 0-based). For rectangular shapes the output side uses
/// `I_{n1}` and the input side `I_{m1}`.
pub fn offdiag_coeffs(m: &CMatrix, i: usize, j: usize, shape: &RepeatedShape) -> Result<QuarticCoeffs> {
    shape.check(m)?;
    if i == j || i >= shape.v || j >= shape.v {
        return Err(SsvError::Structure(format!(
            "off-diagonal index ({i}, {j}) invalid for v = {}",
            shape.v
        )));
    }
    let (n1, m1) = (shape.n1, shape.m1);
    // D M D⁻¹ = M + s·P − s²·C
    let mut p = CMatrix::zeros(m.nrows(), m.ncols());
    p.rows_mut(i * n1, n1).copy_from(&m.rows(j * n1, n1));
    let col_i = m.columns(i * m1, m1).into_owned();
    let mut pj = p.columns_mut(j * m1, m1);
    pj -= &col_i;
    let mut c = CMatrix::zeros(m.nrows(), m.ncols());
    c.view_mut((i * n1, j * m1), (n1, m1))
        .copy_from(&m.view((j * n1, i * m1), (n1, m1)));

    Ok(QuarticCoeffs {
        c0: frobenius_sq(m),
        c1: inner(m, &p),
        c2: frobenius_sq(&p),
        c3: -inner(m, &c),
        c4: -inner(&p, &c),
        c5: frobenius_sq(&c),
    })
}

/// Minimizes the real quartic from `s = 0` by regularized Newton steps with
/// Armijo backtracking. Returns 0 unless the result does not increase `f`.
pub fn damped_newton_quartic(c: &QuarticCoeffs) -> Complex64 {
    let f0 = c.eval_xy(0.0, 0.0);
    let (mut x, mut y, mut f) = (0.0, 0.0, f0);
    for _ in 0..NEWTON_MAX_ITERS {
        let g = c.gradient_xy(x, y);
        let gn = g[0].hypot(g[1]);
        if !gn.is_finite() || gn <= NEWTON_GRAD_TOL * (1.0 + f.abs()) {
            break;
        }
        let h = c.hessian_xy(x, y);
        let mut tau = 0.0;
        let (hxx, hyy, hxy) = loop {
            let (a, d) = (h[0][0] + tau, h[1][1] + tau);
            if a > 0.0 && a * d - h[0][1] * h[0][1] > 0.0 {
                break (a, d, h[0][1]);
            }
            tau = if tau == 0.0 { 1e-12 } else { tau * 10.0 };
            if !tau.is_finite() {
                return if f <= f0 { Complex64::new(x, y) } else { ZERO };
            }
        };
        let det = hxx * hyy - hxy * hxy;
        let dx = -(hyy * g[0] - hxy * g[1]) / det;
        let dy = -(hxx * g[1] - hxy * g[0]) / det;
        let slope = g[0] * dx + g[1] * dy;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let ft = c.eval_xy(x + t * dx, y + t * dy);
            // the slack admits steps whose decrease is lost in rounding
            let slack = 4.0 * f64::EPSILON * (1.0 + f.abs());
            if ft.is_finite() && ft <= f + ARMIJO * t * slope + slack {
                x += t * dx;
                y += t * dy;
                f = ft;
                accepted = true;
                break;
            }
            t *= BACKTRACK;
        }
        if !accepted {
            break;
        }
    }
    if f.is_finite() && f <= f0 {
        Complex64::new(x, y)
    } else {
        ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenOsborneOptions {
    /// Passes over all ordered pairs `(i, j)`, `i ≠ j`.
    pub passes: usize,
    pub osborne: OsborneOptions,
}

impl Default for GenOsborneOptions {
    fn default() -> Self {
        Self {
            passes: 1,
            osborne: OsborneOptions::default(),
        }
    }
}

/// Applies `M ← (I + sE_ij)⊗I · M · (I − sE_ij)⊗I` in place.
fn apply_pair(m: &mut CMatrix, i: usize, j: usize, s: Complex64, shape: &RepeatedShape) {
    let (n1, m1) = (shape.n1, shape.m1);
    let row_j = m.rows(j * n1, n1) * s;
    let mut ri = m.rows_mut(i * n1, n1);
    ri += &row_j;
    let col_i = m.columns(i * m1, m1) * s;
    let mut cj = m.columns_mut(j * m1, m1);
    cj -= &col_i;
}

/// Diagonal Osborne balancing followed by single off-diagonal updates of the
/// scaling `S`, each minimizing `‖(S⊗I) M (S⊗I)⁻¹‖_F`.
///
/// The certificate is `scaling = S ⊗ I_{m1}` (not Hermitian); `r_matrix`
/// holds `S^H S`.
pub fn gen_osborne(m: &CMatrix, shape: &RepeatedShape, opts: &GenOsborneOptions) -> Result<UpperBoundResult> {
    shape.check(m)?;
    let v = shape.v;
    let nr = osborne_balance_rect(m, &vec![shape.n1; v], &vec![shape.m1; v], &opts.osborne)?;
    let mut mk = nr.scaled_matrix(m)?;
    let mut s = CMatrix::from_fn(v, v, |a, b| {
        if a == b {
            Complex64::new(nr.block_scales[a], 0.0)
        } else {
            ZERO
        }
    });
    let mut notes = nr.notes;
    let mut history = vec![frobenius_sq(&mk)];
    let mut steps = 0;

    for _ in 0..opts.passes {
        for i in 0..v {
            for j in (0..v).filter(|&j| j != i) {
                steps += 1;
                let coeffs = offdiag_coeffs(&mk, i, j, shape)?;
                let sij = damped_newton_quartic(&coeffs);
                let before = *history.last().unwrap();
                if sij != ZERO {
                    let mut trial = mk.clone();
                    apply_pair(&mut trial, i, j, sij, shape);
                    let after = frobenius_sq(&trial);
                    if after <= before {
                        mk = trial;
                        let row_j = s.row(j) * sij;
                        let mut si = s.row_mut(i);
                        si += &row_j;
                    } else {
                        notes.push(format!("pair ({i}, {j}): step rejected by rounding"));
                    }
                }
                history.push(frobenius_sq(&mk));
            }
        }
    }

    let scaling = kron_identity(&s, shape.m1)?;
    let output_scaling = if shape.is_square() {
        None
    } else {
        Some(ComplexMatrix::wrap(kron_identity(&s, shape.n1)?))
    };
    Ok(UpperBoundResult {
        alpha: sigma_max(&mk),
        scaling: ComplexMatrix::wrap(scaling),
        output_scaling,
        r_matrix: Some(ComplexMatrix::wrap(s.adjoint() * &s)),
        block_scales: Vec::new(),
        converged: true,
        converged_by_ratio: false,
        iterations_used: steps,
        alpha_history: Vec::new(),
        objective_history: history,
        notes,
    })
}
