//! Regularized least-squares engines.
//!
//! Dense mode factors the (transformed) matrix once by SVD and answers any
//! (rhs, η) with filter factors σ/(σ² + η). The projected mode runs a
//! Golub–Kahan bidiagonalization per right-hand side with full
//! reorthogonalization, then solves the small projected Tikhonov problem;
//! residual and solution norms come from the projection exactly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::InvError;

/// Per-(rhs, η) outcome in the transformed norms.
#[derive(Debug, Clone)]
pub struct TikhonovSolution {
    /// Minimizer in transformed coordinates (empty when only norms are
    /// requested).
    pub g: Vec<f64>,
    pub residual_norm: f64,
    pub solution_norm: f64,
}

fn check_eta(eta: f64) -> Result<(), InvError> {
    if !(eta > 0.0) {
        Err(InvError::Parameter(format!(
            "regularization weight must be positive, got {eta}"
        )))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Dense SVD, real
// ---------------------------------------------------------------------------

pub struct DenseSvd {
    u: DMatrix<f64>,
    vt: DMatrix<f64>,
    sigma: DVector<f64>,
}

impl DenseSvd {
    pub fn new(a: DMatrix<f64>) -> Result<DenseSvd, InvError> {
        let svd = a.svd(true, true);
        Ok(DenseSvd {
            u: svd.u.ok_or_else(|| InvError::Numerical("SVD lost U".into()))?,
            vt: svd
                .v_t
                .ok_or_else(|| InvError::Numerical("SVD lost Vᵀ".into()))?,
            sigma: svd.singular_values,
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().cloned().fold(0.0, f64::max)
    }

    /// Projection of a rhs onto the left singular basis plus the norm of
    /// the out-of-range remainder; reused across η values.
    pub fn project(&self, b: &[f64]) -> (DVector<f64>, f64) {
        let b = DVector::from_column_slice(b);
        let beta = self.u.transpose() * &b;
        let cap = &self.u * &beta;
        let floor2 = (b - cap).norm_squared();
        (beta, floor2)
    }

    /// Solve with filter factors σ/(σ² + η) from a cached projection.
    pub fn solve_projected(
        &self,
        beta: &DVector<f64>,
        floor2: f64,
        eta: f64,
        want_g: bool,
    ) -> Result<TikhonovSolution, InvError> {
        check_eta(eta)?;
        let k = self.sigma.len();
        let mut y = DVector::zeros(k);
        let mut res2 = floor2;
        let mut sol2 = 0.0;
        for j in 0..k {
            let s = self.sigma[j];
            let filt = s / (s * s + eta);
            let gj = filt * beta[j];
            y[j] = gj;
            sol2 += gj * gj;
            let r = (eta / (s * s + eta)) * beta[j];
            res2 += r * r;
        }
        let g = if want_g {
            (self.vt.transpose() * y).as_slice().to_vec()
        } else {
            Vec::new()
        };
        Ok(TikhonovSolution {
            g,
            residual_norm: res2.max(0.0).sqrt(),
            solution_norm: sol2.sqrt(),
        })
    }

    pub fn solve(&self, b: &[f64], eta: f64) -> Result<TikhonovSolution, InvError> {
        let (beta, floor2) = self.project(b);
        self.solve_projected(&beta, floor2, eta, true)
    }
}

// ---------------------------------------------------------------------------
// Dense SVD, complex (per-frequency blocks)
// ---------------------------------------------------------------------------

pub struct DenseSvdC {
    u: DMatrix<Complex64>,
    vt: DMatrix<Complex64>,
    sigma: DVector<f64>,
}

impl DenseSvdC {
    pub fn new(a: DMatrix<Complex64>) -> Result<DenseSvdC, InvError> {
        let svd = a.svd(true, true);
        Ok(DenseSvdC {
            u: svd.u.ok_or_else(|| InvError::Numerical("SVD lost U".into()))?,
            vt: svd
                .v_t
                .ok_or_else(|| InvError::Numerical("SVD lost Vᵀ".into()))?,
            sigma: svd.singular_values,
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().cloned().fold(0.0, f64::max)
    }

    pub fn project(&self, b: &[Complex64]) -> (DVector<Complex64>, f64) {
        let b = DVector::from_column_slice(b);
        let beta = self.u.adjoint() * &b;
        let cap = &self.u * &beta;
        let floor2 = (b - cap).norm_squared();
        (beta, floor2)
    }

    /// Accumulate residual²/solution² contributions of this block at a
    /// shared η; optionally emit the block's solution.
    pub fn accumulate(
        &self,
        beta: &DVector<Complex64>,
        floor2: f64,
        eta: f64,
        g_out: Option<&mut Vec<Complex64>>,
    ) -> (f64, f64) {
        let k = self.sigma.len();
        let mut res2 = floor2;
        let mut sol2 = 0.0;
        let mut y = DVector::from_element(k, Complex64::new(0.0, 0.0));
        for j in 0..k {
            let s = self.sigma[j];
            let gj = beta[j] * (s / (s * s + eta));
            y[j] = gj;
            sol2 += gj.norm_sqr();
            res2 += (beta[j] * (eta / (s * s + eta))).norm_sqr();
        }
        if let Some(out) = g_out {
            let g = self.vt.adjoint() * y;
            out.extend_from_slice(g.as_slice());
        }
        (res2, sol2)
    }
}

// ---------------------------------------------------------------------------
// Golub–Kahan projection
// ---------------------------------------------------------------------------

/// Abstract operator view in transformed coordinates.
pub trait SolverOp: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64>;
}

/// Lower-bidiagonal projection of (A, b) with an orthonormal basis for the
/// solution space.
pub struct GolubKahan {
    /// β₁ = ‖b‖.
    beta1: f64,
    /// Diagonal α and subdiagonal β of the (k+1)×k bidiagonal matrix.
    alphas: Vec<f64>,
    betas: Vec<f64>,
    /// Right Lanczos vectors, one per column.
    v_basis: Vec<Vec<f64>>,
    /// SVD of the projected matrix.
    svd: DenseSvd,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

impl GolubKahan {
    /// Bidiagonalize (op, b) to at most `cap` columns with full
    /// reorthogonalization, stopping early on Krylov breakdown.
    pub fn new(op: &dyn SolverOp, b: &[f64], cap: usize) -> Result<GolubKahan, InvError> {
        if cap == 0 {
            return Err(InvError::Parameter("projection cap must be ≥ 1".into()));
        }
        let beta1 = norm(b);
        if beta1 == 0.0 {
            return Err(InvError::DegenerateRhs);
        }
        let max_k = cap.min(op.cols()).min(op.rows());
        let mut u_basis: Vec<Vec<f64>> = Vec::with_capacity(max_k + 1);
        let mut v_basis: Vec<Vec<f64>> = Vec::with_capacity(max_k);
        let mut alphas = Vec::with_capacity(max_k);
        let mut betas = Vec::with_capacity(max_k);

        let mut u: Vec<f64> = b.iter().map(|x| x / beta1).collect();
        u_basis.push(u.clone());
        // Breakdown is judged against the recurrence's own coefficient
        // scale; physical amplitudes can sit anywhere in the exponent
        // range.
        let mut coeff_scale = 0.0_f64;

        for _k in 0..max_k {
            // v = Aᵀu, orthogonalized against previous v's.
            let mut v = op.apply_transpose(&u);
            for prev in &v_basis {
                let c = dot(&v, prev);
                axpy(&mut v, -c, prev);
            }
            let alpha = norm(&v);
            coeff_scale = coeff_scale.max(alpha);
            if alpha <= 1e-13 * coeff_scale || alpha == 0.0 {
                break;
            }
            for x in &mut v {
                *x /= alpha;
            }
            alphas.push(alpha);
            v_basis.push(v.clone());

            // u = Av, orthogonalized against previous u's.
            let mut un = op.apply(&v);
            for prev in &u_basis {
                let c = dot(&un, prev);
                axpy(&mut un, -c, prev);
            }
            let beta = norm(&un);
            coeff_scale = coeff_scale.max(beta);
            betas.push(beta);
            if beta <= 1e-13 * coeff_scale {
                break;
            }
            for x in &mut un {
                *x /= beta;
            }
            u_basis.push(un.clone());
            u = un;
        }
        if alphas.is_empty() {
            return Err(InvError::Numerical(
                "bidiagonalization broke down immediately".into(),
            ));
        }

        // Projected (k+1)×k matrix: diag α, subdiag β.
        let k = alphas.len();
        let mut bmat = DMatrix::zeros(k + 1, k);
        for j in 0..k {
            bmat[(j, j)] = alphas[j];
            if j < betas.len() {
                bmat[(j + 1, j)] = betas[j];
            }
        }
        let svd = DenseSvd::new(bmat)?;
        Ok(GolubKahan {
            beta1,
            alphas,
            betas,
            v_basis,
            svd,
        })
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.svd.sigma_max()
    }

    /// Projected Tikhonov solve; norms are exact for the projected
    /// problem, and `g` (when requested) is lifted through the basis.
    pub fn solve(&self, eta: f64, want_g: bool) -> Result<TikhonovSolution, InvError> {
        check_eta(eta)?;
        let mut rhs = vec![0.0; self.dim() + 1];
        rhs[0] = self.beta1;
        let (beta, floor2) = self.svd.project(&rhs);
        let mut sol = self.svd.solve_projected(&beta, floor2, eta, want_g)?;
        if want_g {
            let y = std::mem::take(&mut sol.g);
            let mut g = vec![0.0; self.v_basis[0].len()];
            for (c, v) in y.iter().zip(&self.v_basis) {
                axpy(&mut g, *c, v);
            }
            sol.g = g;
        }
        Ok(sol)
    }

    /// Subdiagonal tail: zero means the Krylov space is exhausted and the
    /// projection is exact.
    pub fn tail(&self) -> f64 {
        *self.betas.last().unwrap_or(&0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct DenseOp {
        a: DMatrix<f64>,
    }

    impl SolverOp for DenseOp {
        fn rows(&self) -> usize {
            self.a.nrows()
        }
        fn cols(&self) -> usize {
            self.a.ncols()
        }
        fn apply(&self, x: &[f64]) -> Vec<f64> {
            (&self.a * DVector::from_column_slice(x)).as_slice().to_vec()
        }
        fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
            (self.a.transpose() * DVector::from_column_slice(y))
                .as_slice()
                .to_vec()
        }
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        // Small linear-congruential stream keeps the oracle self-contained.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        DMatrix::from_fn(rows, cols, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        random_matrix(n, 1, seed).as_slice().to_vec()
    }

    /// Independent oracle: solve (AᵀA + ηI)g = Aᵀb by LU.
    fn normal_equations(a: &DMatrix<f64>, b: &[f64], eta: f64) -> Vec<f64> {
        let ata = a.transpose() * a + DMatrix::identity(a.ncols(), a.ncols()) * eta;
        let atb = a.transpose() * DVector::from_column_slice(b);
        ata.lu().solve(&atb).unwrap().as_slice().to_vec()
    }

    #[test]
    fn dense_matches_normal_equations() {
        let a = random_matrix(40, 30, 7);
        let b = random_vec(40, 11);
        let svd = DenseSvd::new(a.clone()).unwrap();
        for eta in [1e-6, 1e-3, 0.3, 10.0] {
            let got = svd.solve(&b, eta).unwrap();
            let want = normal_equations(&a, &b, eta);
            let scale = want.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
            for (x, y) in got.g.iter().zip(&want) {
                assert!((x - y).abs() <= 1e-8 * scale, "η={eta}: {x} vs {y}");
            }
            // Reported norms agree with direct evaluation.
            let r = &a * DVector::from_column_slice(&got.g) - DVector::from_column_slice(&b);
            assert!((r.norm() - got.residual_norm).abs() <= 1e-8 * r.norm());
        }
    }

    #[test]
    fn projected_full_dimension_matches_normal_equations() {
        let a = random_matrix(40, 30, 3);
        let b = random_vec(40, 5);
        let op = DenseOp { a: a.clone() };
        let gk = GolubKahan::new(&op, &b, 30).unwrap();
        assert_eq!(gk.dim(), 30);
        for eta in [1e-5, 1e-2, 1.0] {
            let got = gk.solve(eta, true).unwrap();
            let want = normal_equations(&a, &b, eta);
            let scale = want.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
            for (x, y) in got.g.iter().zip(&want) {
                assert!((x - y).abs() <= 1e-8 * scale.max(1e-12), "η={eta}");
            }
        }
    }

    #[test]
    fn residual_monotone_solution_antitone_in_eta() {
        let a = random_matrix(25, 18, 13);
        let b = random_vec(25, 2);
        let svd = DenseSvd::new(a).unwrap();
        let etas = [1e-8, 1e-5, 1e-2, 1.0, 100.0];
        let mut last_res = -1.0;
        let mut last_sol = f64::INFINITY;
        for eta in etas {
            let s = svd.solve(&b, eta).unwrap();
            assert!(s.residual_norm >= last_res - 1e-12);
            assert!(s.solution_norm <= last_sol + 1e-12);
            last_res = s.residual_norm;
            last_sol = s.solution_norm;
        }
    }

    #[test]
    fn eta_limits() {
        let a = random_matrix(20, 20, 17);
        let b = random_vec(20, 23);
        let svd = DenseSvd::new(a).unwrap();
        let b_norm = norm(&b);
        // η → ∞: solution collapses, residual approaches ‖b‖.
        let hi = svd.solve(&b, 1e12 * svd.sigma_max().powi(2)).unwrap();
        assert!(hi.solution_norm <= 1e-9 * b_norm);
        assert!((hi.residual_norm - b_norm).abs() <= 1e-9 * b_norm);
    }

    #[test]
    fn solution_linear_in_rhs_at_fixed_eta() {
        let a = random_matrix(22, 15, 29);
        let b = random_vec(22, 31);
        let svd = DenseSvd::new(a).unwrap();
        let s1 = svd.solve(&b, 0.05).unwrap();
        let scaled: Vec<f64> = b.iter().map(|v| 3.5 * v).collect();
        let s2 = svd.solve(&scaled, 0.05).unwrap();
        for (x, y) in s1.g.iter().zip(&s2.g) {
            assert!((3.5 * x - y).abs() <= 1e-12 * y.abs().max(1e-12));
        }
        assert!((3.5 * s1.solution_norm - s2.solution_norm).abs() <= 1e-10 * s2.solution_norm);
    }

    #[test]
    fn zero_rhs_is_degenerate() {
        let a = random_matrix(10, 8, 41);
        let op = DenseOp { a };
        let b = vec![0.0; 10];
        assert!(matches!(
            GolubKahan::new(&op, &b, 8),
            Err(InvError::DegenerateRhs)
        ));
    }

    #[test]
    fn invalid_eta_rejected() {
        let a = random_matrix(6, 4, 43);
        let svd = DenseSvd::new(a).unwrap();
        let b = random_vec(6, 47);
        assert!(matches!(
            svd.solve(&b, 0.0),
            Err(InvError::Parameter(_))
        ));
        assert!(matches!(
            svd.solve(&b, -1.0),
            Err(InvError::Parameter(_))
        ));
    }
}
