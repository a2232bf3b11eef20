//! Per-cone algebra for the interior-point iterations: Jordan products,
//! Nesterov–Todd scalings and step-to-boundary computations.
//!
//! All vectors are the concatenation of the block vectors in program order;
//! a [`Cone`] knows its slice of that concatenation.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cone {
    Nonneg { start: usize, dim: usize },
    Soc { start: usize, dim: usize },
}

impl Cone {
    pub fn range(&self) -> std::ops::Range<usize> {
        match *self {
            Cone::Nonneg { start, dim } | Cone::Soc { start, dim } => start..start + dim,
        }
    }

    /// Barrier degree contributed by this cone.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Nonneg { dim, .. } => dim,
            Cone::Soc { .. } => 1,
        }
    }
}

pub(crate) fn degree(cones: &[Cone]) -> usize {
    cones.iter().map(Cone::degree).sum()
}

fn soc_det(v: &[f64]) -> f64 {
    let tail = v[1..].iter().map(|e| e * e).sum::<f64>().sqrt();
    (v[0] - tail) * (v[0] + tail)
}

/// Largest `t` with `v + t·e` on the cone boundary, i.e. the most negative
/// "eigenvalue" of `v` negated. Positive means `v` is outside the interior.
pub(crate) fn max_violation(cones: &[Cone], v: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for cone in cones {
        let s = &v[cone.range()];
        let w = match cone {
            Cone::Nonneg { .. } => s.iter().map(|e| -e).fold(f64::NEG_INFINITY, f64::max),
            Cone::Soc { .. } => s[1..].iter().map(|e| e * e).sum::<f64>().sqrt() - s[0],
        };
        worst = worst.max(w);
    }
    worst
}

/// Adds `t·e` (the cone identity) to `v`.
pub(crate) fn add_identity(cones: &[Cone], v: &mut [f64], t: f64) {
    for cone in cones {
        match *cone {
            Cone::Nonneg { .. } => v[cone.range()].iter_mut().for_each(|e| *e += t),
            Cone::Soc { start, .. } => v[start] += t,
        }
    }
}

/// Writes the cone identity scaled by `t` into `out`.
pub(crate) fn identity(cones: &[Cone], out: &mut [f64], t: f64) {
    out.iter_mut().for_each(|e| *e = 0.0);
    add_identity(cones, out, t);
}

/// Jordan product `u ∘ v`.
pub(crate) fn jordan_product(cones: &[Cone], u: &[f64], v: &[f64], out: &mut [f64]) {
    for cone in cones {
        let r = cone.range();
        let (u, v) = (&u[r.clone()], &v[r.clone()]);
        let o = &mut out[r];
        match cone {
            Cone::Nonneg { .. } => {
                for i in 0..u.len() {
                    o[i] = u[i] * v[i];
                }
            }
            Cone::Soc { .. } => {
                o[0] = u.iter().zip(v).map(|(a, b)| a * b).sum();
                for i in 1..u.len() {
                    o[i] = u[0] * v[i] + v[0] * u[i];
                }
            }
        }
    }
}

/// Solves `λ ∘ x = d` for `x`.
pub(crate) fn jordan_divide(cones: &[Cone], lambda: &[f64], d: &[f64], out: &mut [f64]) {
    for cone in cones {
        let r = cone.range();
        let (l, d) = (&lambda[r.clone()], &d[r.clone()]);
        let o = &mut out[r];
        match cone {
            Cone::Nonneg { .. } => {
                for i in 0..l.len() {
                    o[i] = d[i] / l[i];
                }
            }
            Cone::Soc { .. } => {
                let det = soc_det(l);
                let l1d1: f64 = l[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum();
                let x0 = (l[0] * d[0] - l1d1) / det;
                o[0] = x0;
                for i in 1..l.len() {
                    o[i] = (d[i] - x0 * l[i]) / l[0];
                }
            }
        }
    }
}

/// Nesterov–Todd scaling of one cone.
#[derive(Debug, Clone)]
pub(crate) enum BlockScaling {
    /// `W = diag(w)`.
    Nonneg { w: Vec<f64> },
    /// `W = η [[w₀, w₁ᵀ], [w₁, I + w₁w₁ᵀ/(1+w₀)]]` with `w₀² − ‖w₁‖² = 1`.
    Soc { eta: f64, w: Vec<f64> },
}

/// Symmetric NT scaling `W` with `W z = W⁻¹ s = λ`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub blocks: Vec<BlockScaling>,
}

impl Scaling {
    /// Returns `None` when `s` or `z` has left the cone interior.
    pub fn compute(cones: &[Cone], s: &[f64], z: &[f64]) -> Option<Self> {
        let mut blocks = Vec::with_capacity(cones.len());
        for cone in cones {
            let r = cone.range();
            let (s, z) = (&s[r.clone()], &z[r]);
            match cone {
                Cone::Nonneg { .. } => {
                    let mut w = Vec::with_capacity(s.len());
                    for (&si, &zi) in s.iter().zip(z) {
                        if si <= 0.0 || zi <= 0.0 {
                            return None;
                        }
                        w.push((si / zi).sqrt());
                    }
                    blocks.push(BlockScaling::Nonneg { w });
                }
                Cone::Soc { .. } => {
                    let sd = soc_det(s);
                    let zd = soc_det(z);
                    if !(sd > 0.0 && zd > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                        return None;
                    }
                    let (sn, zn) = (sd.sqrt(), zd.sqrt());
                    let dot: f64 = s.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() / (sn * zn);
                    let gamma = ((1.0 + dot) / 2.0).sqrt();
                    let mut w = Vec::with_capacity(s.len());
                    w.push((s[0] / sn + z[0] / zn) / (2.0 * gamma));
                    for i in 1..s.len() {
                        w.push((s[i] / sn - z[i] / zn) / (2.0 * gamma));
                    }
                    // re-normalise w so that w₀² − ‖w₁‖² = 1 holds to rounding
                    let tail: f64 = w[1..].iter().map(|e| e * e).sum();
                    w[0] = (1.0 + tail).sqrt();
                    blocks.push(BlockScaling::Soc {
                        eta: (sn / zn).sqrt(),
                        w,
                    });
                }
            }
        }
        Some(Self { blocks })
    }

    fn apply(&self, cones: &[Cone], v: &[f64], out: &mut [f64], inverse: bool) {
        for (cone, block) in cones.iter().zip(&self.blocks) {
            let r = cone.range();
            let (v, o) = (&v[r.clone()], &mut out[r]);
            match block {
                BlockScaling::Nonneg { w } => {
                    for i in 0..v.len() {
                        o[i] = if inverse { v[i] / w[i] } else { v[i] * w[i] };
                    }
                }
                BlockScaling::Soc { eta, w } => {
                    soc_apply(*eta, w, v, o, inverse);
                }
            }
        }
    }

    pub fn mul_w(&self, cones: &[Cone], v: &[f64], out: &mut [f64]) {
        self.apply(cones, v, out, false);
    }

    pub fn mul_winv(&self, cones: &[Cone], v: &[f64], out: &mut [f64]) {
        self.apply(cones, v, out, true);
    }
}

/// `W v` (or `W⁻¹ v`) for one SOC scaling.
pub(crate) fn soc_apply(eta: f64, w: &[f64], v: &[f64], out: &mut [f64], inverse: bool) {
    let w1v1: f64 = w[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
    let (sign, scale) = if inverse { (-1.0, 1.0 / eta) } else { (1.0, eta) };
    out[0] = scale * (w[0] * v[0] + sign * w1v1);
    let coef = w1v1 / (1.0 + w[0]) + sign * v[0];
    for i in 1..v.len() {
        out[i] = scale * (v[i] + coef * w[i]);
    }
}

/// Largest `α ≥ 0` (possibly infinite) with `v + α·dv` in the cone closure.
/// `v` must be strictly interior.
pub(crate) fn max_step(cones: &[Cone], v: &[f64], dv: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for cone in cones {
        let r = cone.range();
        let (v, d) = (&v[r.clone()], &dv[r]);
        match cone {
            Cone::Nonneg { .. } => {
                for (&vi, &di) in v.iter().zip(d) {
                    if di < 0.0 {
                        alpha = alpha.min(-vi / di);
                    }
                }
            }
            Cone::Soc { .. } => alpha = alpha.min(soc_max_step(v, d)),
        }
    }
    alpha
}

fn soc_max_step(v: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = -v[0] / d[0];
    }
    // (v₀ + α d₀)² − ‖v₁ + α d₁‖² = a α² + b α + c
    let a = d[0] * d[0] - d[1..].iter().map(|e| e * e).sum::<f64>();
    let b = 2.0 * (v[0] * d[0] - v[1..].iter().zip(&d[1..]).map(|(x, y)| x * y).sum::<f64>());
    let c = soc_det(v).max(0.0);
    let scale = a.abs().max(b.abs()).max(c);
    if scale == 0.0 {
        return alpha;
    }
    if a.abs() <= 1e-14 * scale {
        if b < 0.0 {
            alpha = alpha.min(-c / b);
        }
        return alpha;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return alpha;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if root > 0.0 {
            alpha = alpha.min(root);
        }
    }
    alpha
}
