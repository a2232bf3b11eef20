//! Primal-dual interior-point method on the homogeneous self-dual embedding
//!
//! ```text
//! [0]   [  0   Gᵀ  c ] [x]
//! [s] = [ −G   0   h ] [z]      (s, z) ∈ K × K,  τ, κ ≥ 0
//! [κ]   [ −cᵀ −hᵀ  0 ] [τ]
//! ```
//!
//! with `G = −A`, `h = b`. Search directions use Nesterov–Todd scaling and a
//! Mehrotra predictor-corrector; the reduced system `GᵀW⁻²G` is factored
//! densely and refined iteratively against the unreduced KKT matrix.

use super::cones::{self, BlockScaling, Cone, Scaling};
use super::linalg::{Cholesky, SymMatrix};
use super::{
    cone_violation, residuals, ConeKind, ConicProgram, ConicSolution, ConicSolver, Residuals,
    SolveStatus, SolverOptions,
};

/// The embedded solver. Holds no state between calls.
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint;

impl ConicSolver for InteriorPoint {
    fn solve(&self, prog: &ConicProgram, opts: &SolverOptions) -> ConicSolution {
        Problem::new(prog).solve(prog, opts)
    }
}

const STEP_FRACTION: f64 = 0.99;
const STATIC_REG: f64 = 1e-13;
const MAX_REFINE: usize = 8;
const MIN_SIGMA: f64 = 1e-8;
const MAX_STALLS: usize = 5;

struct SparseRow {
    cols: Vec<usize>,
    vals: Vec<f64>,
}

enum BlockData {
    /// Orthant rows of `G`, one per cone coordinate.
    Nonneg { rows: Vec<SparseRow> },
    /// Dense `d × p` block of `G` on the support columns (column-major).
    Soc {
        support: Vec<usize>,
        dense: Vec<f64>,
        dim: usize,
    },
}

struct Problem {
    n: usize,
    m: usize,
    c: Vec<f64>,
    h: Vec<f64>,
    /// Row-wise `G` for products.
    rows: Vec<SparseRow>,
    cones: Vec<Cone>,
    blocks: Vec<BlockData>,
}

impl Problem {
    fn new(prog: &ConicProgram) -> Self {
        let mut rows = Vec::with_capacity(prog.total_rows());
        let mut h = Vec::with_capacity(prog.total_rows());
        let mut cones = Vec::with_capacity(prog.blocks().len());
        let mut blocks = Vec::with_capacity(prog.blocks().len());
        for block in prog.blocks() {
            let start = rows.len();
            let dim = block.dim();
            let block_rows: Vec<SparseRow> = block
                .rows
                .iter()
                .map(|r| {
                    // merge duplicate column entries
                    let mut terms = r.terms.clone();
                    terms.sort_by_key(|&(j, _)| j);
                    let mut cols: Vec<usize> = Vec::with_capacity(terms.len());
                    let mut vals: Vec<f64> = Vec::with_capacity(terms.len());
                    for (j, a) in terms {
                        if cols.last() == Some(&j) {
                            *vals.last_mut().unwrap() -= a;
                        } else {
                            cols.push(j);
                            vals.push(-a);
                        }
                    }
                    SparseRow { cols, vals }
                })
                .collect();
            h.extend(block.rows.iter().map(|r| r.constant));
            let soc = block.kind == ConeKind::Soc && dim > 1;
            if soc {
                cones.push(Cone::Soc { start, dim });
                let mut support: Vec<usize> =
                    block_rows.iter().flat_map(|r| r.cols.iter().copied()).collect();
                support.sort_unstable();
                support.dedup();
                let p = support.len();
                let mut dense = vec![0.0; dim * p];
                for (i, row) in block_rows.iter().enumerate() {
                    for (&j, &v) in row.cols.iter().zip(&row.vals) {
                        let col = support.binary_search(&j).unwrap();
                        dense[col * dim + i] = v;
                    }
                }
                blocks.push(BlockData::Soc {
                    support,
                    dense,
                    dim,
                });
                rows.extend(block_rows);
            } else {
                cones.push(Cone::Nonneg { start, dim });
                let copy = block_rows
                    .iter()
                    .map(|r| SparseRow {
                        cols: r.cols.clone(),
                        vals: r.vals.clone(),
                    })
                    .collect();
                blocks.push(BlockData::Nonneg { rows: copy });
                rows.extend(block_rows);
            }
        }
        Self {
            n: prog.n_vars(),
            m: rows.len(),
            c: prog.objective().to_vec(),
            h,
            rows,
            cones,
            blocks,
        }
    }

    fn g_mul(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.cols.iter().zip(&row.vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    fn gt_mul(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (row, &zi) in self.rows.iter().zip(z) {
            if zi != 0.0 {
                for (&j, &v) in row.cols.iter().zip(&row.vals) {
                    out[j] += v * zi;
                }
            }
        }
    }

    fn assemble(&self, w: &Scaling, hmat: &mut SymMatrix, buf: &mut Vec<f64>) {
        hmat.clear();
        for (block, scaling) in self.blocks.iter().zip(&w.blocks) {
            match (block, scaling) {
                (BlockData::Nonneg { rows }, BlockScaling::Nonneg { w }) => {
                    for (row, wi) in rows.iter().zip(w) {
                        let d = 1.0 / (wi * wi);
                        for a in 0..row.cols.len() {
                            for b in 0..=a {
                                hmat.add(row.cols[a], row.cols[b], d * row.vals[a] * row.vals[b]);
                            }
                        }
                    }
                }
                (
                    BlockData::Soc {
                        support,
                        dense,
                        dim,
                    },
                    BlockScaling::Soc { eta, w },
                ) => {
                    let p = support.len();
                    buf.resize(dense.len(), 0.0);
                    for col in 0..p {
                        let r = col * dim..(col + 1) * dim;
                        cones::soc_apply(*eta, w, &dense[r.clone()], &mut buf[r], true);
                    }
                    for a in 0..p {
                        let ca = &buf[a * dim..(a + 1) * dim];
                        for b in 0..=a {
                            let cb = &buf[b * dim..(b + 1) * dim];
                            let v: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                            hmat.add(support[a], support[b], v);
                        }
                    }
                }
                _ => unreachable!("scaling does not match cone layout"),
            }
        }
    }

    fn primal_violation(&self, x: &[f64], gx: &mut [f64]) -> f64 {
        self.g_mul(x, gx);
        let mut sq = 0.0;
        for cone in &self.cones {
            let r = cone.range();
            let v: Vec<f64> = r.clone().map(|i| self.h[i] - gx[i]).collect();
            let kind = match cone {
                Cone::Nonneg { .. } => ConeKind::Nonneg,
                Cone::Soc { .. } => ConeKind::Soc,
            };
            sq += cone_violation(kind, &v).powi(2);
        }
        sq.sqrt()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn norm(a: &[f64]) -> f64 {
        Self::dot(a, a).sqrt()
    }

    fn solve(&self, prog: &ConicProgram, opts: &SolverOptions) -> ConicSolution {
        let (n, m) = (self.n, self.m);
        if m == 0 {
            let status = if Self::norm(&self.c) == 0.0 {
                SolveStatus::Optimal
            } else {
                SolveStatus::Unbounded
            };
            return finish(prog, status, vec![0.0; n], vec![], None, 0);
        }

        let mut hmat = SymMatrix::zeros(n);
        let mut buf = Vec::new();
        let mut gx = vec![0.0; m];
        let mut gtz = vec![0.0; n];

        // Initial point from least-squares problems with W = I.
        let ident = Scaling {
            blocks: self
                .cones
                .iter()
                .map(|c| match *c {
                    Cone::Nonneg { dim, .. } => BlockScaling::Nonneg { w: vec![1.0; dim] },
                    Cone::Soc { dim, .. } => {
                        let mut w = vec![0.0; dim];
                        w[0] = 1.0;
                        BlockScaling::Soc { eta: 1.0, w }
                    }
                })
                .collect(),
        };
        self.assemble(&ident, &mut hmat, &mut buf);
        let Some(chol) = Cholesky::factor(&hmat, STATIC_REG) else {
            return finish(prog, SolveStatus::NumericalTrouble, vec![0.0; n], vec![], None, 0);
        };
        let kkt = Kkt {
            p: self,
            w: &ident,
            chol,
        };
        let (mut x, neg_s) = kkt.solve(&vec![0.0; n], &self.h);
        let mut s: Vec<f64> = neg_s.iter().map(|v| -v).collect();
        let minus_c: Vec<f64> = self.c.iter().map(|v| -v).collect();
        let (_, mut z) = kkt.solve(&minus_c, &vec![0.0; m]);
        for v in [&mut s, &mut z] {
            let viol = cones::max_violation(&self.cones, v);
            if viol >= 0.0 {
                cones::add_identity(&self.cones, v, 1.0 + viol);
            }
        }
        let mut tau = 1.0;
        let mut kappa = 1.0;
        let degree = cones::degree(&self.cones) as f64;

        let mut rx = vec![0.0; n];
        let mut rz = vec![0.0; m];
        let mut lambda = vec![0.0; m];
        let mut ds = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        let mut tmp2 = vec![0.0; m];
        let mut stalls = 0;
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;

        for iter in 0..=opts.max_iter {
            // residuals of the embedding
            self.gt_mul(&z, &mut gtz);
            for j in 0..n {
                rx[j] = gtz[j] + self.c[j] * tau;
            }
            self.g_mul(&x, &mut gx);
            for i in 0..m {
                rz[i] = s[i] + gx[i] - self.h[i] * tau;
            }
            let cx = Self::dot(&self.c, &x);
            let hz = Self::dot(&self.h, &z);
            let rtau = kappa + cx + hz;

            // convergence tests on the de-homogenised iterate
            let xs: Vec<f64> = x.iter().map(|v| v / tau).collect();
            let zs: Vec<f64> = z.iter().map(|v| v / tau).collect();
            let pres = self.primal_violation(&xs, &mut tmp);
            let dres: f64 = rx.iter().map(|v| (v / tau).powi(2)).sum::<f64>().sqrt();
            let pobj = cx / tau;
            let dobj = -hz / tau;
            let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
            if pres <= opts.feas_tol && dres <= opts.feas_tol && rel_gap <= opts.gap_tol {
                return finish(prog, SolveStatus::Optimal, xs, self.split(&zs), None, iter);
            }
            let merit = pres.max(dres).max(rel_gap);
            if best.as_ref().is_none_or(|(b, _, _)| merit < *b) {
                best = Some((merit, xs, zs));
            }
            if hz < 0.0 {
                let cert = Self::norm(&gtz) / -hz;
                if cert <= opts.feas_tol {
                    let zc: Vec<f64> = z.iter().map(|v| v / -hz).collect();
                    return finish(
                        prog,
                        SolveStatus::Infeasible,
                        vec![0.0; n],
                        self.split(&zc),
                        Some(cert),
                        iter,
                    );
                }
            }
            if cx < 0.0 {
                let neg_gx: Vec<f64> = gx.iter().map(|v| -v).collect();
                let mut viol = 0.0;
                for cone in &self.cones {
                    let kind = match cone {
                        Cone::Nonneg { .. } => ConeKind::Nonneg,
                        Cone::Soc { .. } => ConeKind::Soc,
                    };
                    viol += cone_violation(kind, &neg_gx[cone.range()]).powi(2);
                }
                let cert = viol.sqrt() / -cx;
                if cert <= opts.feas_tol {
                    let xr: Vec<f64> = x.iter().map(|v| v / -cx).collect();
                    return finish(prog, SolveStatus::Unbounded, xr, self.split(&vec![0.0; m]), Some(cert), iter);
                }
            }
            if iter == opts.max_iter {
                break;
            }

            let Some(w) = Scaling::compute(&self.cones, &s, &z) else {
                return self.give_up(prog, best, iter);
            };
            w.mul_w(&self.cones, &z, &mut lambda);
            let mu = (Self::dot(&s, &z) + tau * kappa) / (degree + 1.0);

            self.assemble(&w, &mut hmat, &mut buf);
            let Some(chol) = Cholesky::factor(&hmat, STATIC_REG) else {
                return self.give_up(prog, best, iter);
            };
            if chol.bumped > 0 {
                log::trace!("iteration {iter}: {} pivots regularised", chol.bumped);
            }
            let kkt = Kkt { p: self, w: &w, chol };
            let (x2, z2) = kkt.solve(&minus_c, &self.h);
            let denom_base = Self::dot(&self.c, &x2) + Self::dot(&self.h, &z2);

            // affine direction: d_s = λ∘λ, d_κ = τκ
            cones::jordan_product(&self.cones, &lambda, &lambda, &mut ds);
            let aff = self.direction(
                &kkt, &w, &lambda, &x2, &z2, denom_base, &rx, &rz, rtau, &ds, tau * kappa, tau,
                kappa, 1.0,
            );
            let alpha_aff = self
                .step_length(&s, &z, tau, kappa, &aff)
                .min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(MIN_SIGMA, 1.0);

            // combined direction with second-order correction
            let mut w_ds = vec![0.0; m];
            let mut w_dz = vec![0.0; m];
            w.mul_winv(&self.cones, &aff.ds, &mut w_ds);
            w.mul_w(&self.cones, &aff.dz, &mut w_dz);
            cones::jordan_product(&self.cones, &w_ds, &w_dz, &mut tmp);
            cones::jordan_product(&self.cones, &lambda, &lambda, &mut ds);
            cones::identity(&self.cones, &mut tmp2, sigma * mu);
            for i in 0..m {
                ds[i] += tmp[i] - tmp2[i];
            }
            let dkappa = tau * kappa + aff.dtau * aff.dkappa - sigma * mu;
            let dir = self.direction(
                &kkt, &w, &lambda, &x2, &z2, denom_base, &rx, &rz, rtau, &ds, dkappa, tau, kappa,
                1.0 - sigma,
            );
            let alpha = (STEP_FRACTION * self.step_length(&s, &z, tau, kappa, &dir)).min(1.0);
            if !alpha.is_finite() || alpha < 1e-10 {
                stalls += 1;
                if stalls >= MAX_STALLS {
                    return self.give_up(prog, best, iter);
                }
                continue;
            }
            stalls = 0;
            for j in 0..n {
                x[j] += alpha * dir.dx[j];
            }
            for i in 0..m {
                s[i] += alpha * dir.ds[i];
                z[i] += alpha * dir.dz[i];
            }
            tau += alpha * dir.dtau;
            kappa += alpha * dir.dkappa;
            if ![tau, kappa].iter().all(|v| v.is_finite() && *v > 0.0) {
                return self.give_up(prog, best, iter);
            }
        }
        let (_, xs, zs) = best.expect("at least one iterate evaluated");
        finish(
            prog,
            SolveStatus::IterLimit,
            xs,
            self.split(&zs),
            None,
            opts.max_iter,
        )
    }

    fn give_up(
        &self,
        prog: &ConicProgram,
        best: Option<(f64, Vec<f64>, Vec<f64>)>,
        iter: usize,
    ) -> ConicSolution {
        let (x, z) = best
            .map(|(_, x, z)| (x, z))
            .unwrap_or_else(|| (vec![0.0; self.n], vec![0.0; self.m]));
        finish(prog, SolveStatus::NumericalTrouble, x, self.split(&z), None, iter)
    }

    fn split(&self, z: &[f64]) -> Vec<Vec<f64>> {
        self.cones.iter().map(|c| z[c.range()].to_vec()).collect()
    }

    /// Solves the linearised embedding for residual weights `(1 − σ)·r` and
    /// complementarity right-hand sides `d_s`, `d_κ`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        kkt: &Kkt,
        w: &Scaling,
        lambda: &[f64],
        x2: &[f64],
        z2: &[f64],
        denom_base: f64,
        rx: &[f64],
        rz: &[f64],
        rtau: f64,
        d_s: &[f64],
        d_kappa: f64,
        tau: f64,
        kappa: f64,
        residual_weight: f64,
    ) -> Direction {
        let m = self.m;
        let mut ds_tilde = vec![0.0; m];
        cones::jordan_divide(&self.cones, lambda, d_s, &mut ds_tilde);
        let mut w_dst = vec![0.0; m];
        w.mul_w(&self.cones, &ds_tilde, &mut w_dst);
        let r1: Vec<f64> = rx.iter().map(|v| -residual_weight * v).collect();
        let r2: Vec<f64> = (0..m)
            .map(|i| -residual_weight * rz[i] + w_dst[i])
            .collect();
        let (x1, z1) = kkt.solve(&r1, &r2);
        let d_tau = residual_weight * rtau;
        let num = -d_tau + d_kappa / tau - Self::dot(&self.c, &x1) - Self::dot(&self.h, &z1);
        let den = denom_base - kappa / tau;
        let dtau = num / den;
        let dx: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a + dtau * b).collect();
        let dz: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| a + dtau * b).collect();
        // Δs = −W (d̃_s + W Δz)
        let mut wdz = vec![0.0; m];
        w.mul_w(&self.cones, &dz, &mut wdz);
        let inner: Vec<f64> = ds_tilde.iter().zip(&wdz).map(|(a, b)| a + b).collect();
        let mut ds = vec![0.0; m];
        w.mul_w(&self.cones, &inner, &mut ds);
        ds.iter_mut().for_each(|v| *v = -*v);
        let dkappa = (-d_kappa - kappa * dtau) / tau;
        Direction {
            dx,
            ds,
            dz,
            dtau,
            dkappa,
        }
    }

    fn step_length(&self, s: &[f64], z: &[f64], tau: f64, kappa: f64, d: &Direction) -> f64 {
        let mut alpha = cones::max_step(&self.cones, s, &d.ds)
            .min(cones::max_step(&self.cones, z, &d.dz));
        if d.dtau < 0.0 {
            alpha = alpha.min(-tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            alpha = alpha.min(-kappa / d.dkappa);
        }
        alpha
    }
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dz: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

/// Factored KKT system `[0 Gᵀ; G −W²]`.
struct Kkt<'a> {
    p: &'a Problem,
    w: &'a Scaling,
    chol: Cholesky,
}

impl Kkt<'_> {
    fn apply_w2(&self, v: &[f64], inverse: bool) -> Vec<f64> {
        let cones = &self.p.cones;
        let mut t = vec![0.0; v.len()];
        let mut out = vec![0.0; v.len()];
        if inverse {
            self.w.mul_winv(cones, v, &mut t);
            self.w.mul_winv(cones, &t, &mut out);
        } else {
            self.w.mul_w(cones, v, &mut t);
            self.w.mul_w(cones, &t, &mut out);
        }
        out
    }

    fn reduced_solve(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let w2r2 = self.apply_w2(r2, true);
        let mut x = vec![0.0; p.n];
        p.gt_mul(&w2r2, &mut x);
        for (xi, ri) in x.iter_mut().zip(r1) {
            *xi += ri;
        }
        self.chol.solve_in_place(&mut x);
        let mut gx = vec![0.0; p.m];
        p.g_mul(&x, &mut gx);
        let diff: Vec<f64> = gx.iter().zip(r2).map(|(a, b)| a - b).collect();
        let z = self.apply_w2(&diff, true);
        (x, z)
    }

    /// Solves `Gᵀz = r1`, `Gx − W²z = r2` with iterative refinement.
    fn solve(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let (mut x, mut z) = self.reduced_solve(r1, r2);
        let rhs_norm = r1
            .iter()
            .chain(r2)
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let mut gtz = vec![0.0; p.n];
        let mut gx = vec![0.0; p.m];
        let mut last = f64::INFINITY;
        for _ in 0..MAX_REFINE {
            p.gt_mul(&z, &mut gtz);
            p.g_mul(&x, &mut gx);
            let w2z = self.apply_w2(&z, false);
            let e1: Vec<f64> = r1.iter().zip(&gtz).map(|(a, b)| a - b).collect();
            let e2: Vec<f64> = (0..p.m).map(|i| r2[i] - (gx[i] - w2z[i])).collect();
            let err = e1.iter().chain(&e2).fold(0.0f64, |a, v| a.max(v.abs()));
            if err <= 1e-14 * (1.0 + rhs_norm) || err >= 0.5 * last {
                break;
            }
            last = err;
            let (cx, cz) = self.reduced_solve(&e1, &e2);
            x.iter_mut().zip(&cx).for_each(|(a, b)| *a += b);
            z.iter_mut().zip(&cz).for_each(|(a, b)| *a += b);
        }
        (x, z)
    }
}

fn finish(
    prog: &ConicProgram,
    status: SolveStatus,
    x: Vec<f64>,
    z: Vec<Vec<f64>>,
    certificate_residual: Option<f64>,
    iterations: usize,
) -> ConicSolution {
    let z = if z.len() == prog.blocks().len() {
        z
    } else {
        prog.blocks().iter().map(|b| vec![0.0; b.dim()]).collect()
    };
    let res = residuals(prog, &x, &z).unwrap_or(Residuals {
        primal: f64::NAN,
        dual: f64::NAN,
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        relative_gap: f64::NAN,
    });
    ConicSolution {
        status,
        x,
        z,
        primal_objective: res.primal_objective,
        dual_objective: res.dual_objective,
        residuals: res,
        certificate_residual,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::super::AffineRow;
    use super::*;

    fn solve(p: &ConicProgram) -> ConicSolution {
        InteriorPoint.solve(p, &SolverOptions::default())
    }

    #[test]
    fn minimize_x_over_nonneg() {
        let mut p = ConicProgram::new(1);
        p.set_objective(0, 1.0);
        p.add_nonneg("x>=0", vec![AffineRow::var(0, 1.0)]).unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.x[0].abs() < 1e-7);
        assert!(sol.primal_objective.abs() < 1e-7);
    }

    #[test]
    fn norm_epigraph() {
        let mut p = ConicProgram::new(1);
        p.set_objective(0, 1.0);
        p.add_soc(
            "t>=|(3,4)|",
            vec![
                AffineRow::var(0, 1.0),
                AffineRow::constant(3.0),
                AffineRow::constant(4.0),
            ],
        )
        .unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 5.0).abs() < 1e-7, "{:?}", sol);
    }

    #[test]
    fn detects_primal_infeasibility() {
        // x ≥ 1 and x ≤ -1
        let mut p = ConicProgram::new(1);
        p.set_objective(0, 1.0);
        p.add_nonneg(
            "box",
            vec![AffineRow::var(0, 1.0).plus(-1.0), AffineRow::var(0, -1.0).plus(-1.0)],
        )
        .unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Infeasible);
        let cert = super::super::infeasibility_residual(&p, &sol.z).unwrap();
        assert!(cert <= 1e-8);
    }

    #[test]
    fn detects_unboundedness() {
        // minimize -x s.t. x ≥ 0
        let mut p = ConicProgram::new(1);
        p.set_objective(0, -1.0);
        p.add_nonneg("x>=0", vec![AffineRow::var(0, 1.0)]).unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn soc_with_linear_coupling() {
        // minimize x + y  s.t. ‖(x − 1, y − 1)‖ ≤ 1  →  1 − √2 + 1 = 2 − √2
        let mut p = ConicProgram::new(2);
        p.set_objective(0, 1.0);
        p.set_objective(1, 1.0);
        p.add_soc(
            "disc",
            vec![
                AffineRow::constant(1.0),
                AffineRow::var(0, 1.0).plus(-1.0),
                AffineRow::var(1, 1.0).plus(-1.0),
            ],
        )
        .unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_objective - (2.0 - 2f64.sqrt())).abs() < 1e-7);
    }
}
