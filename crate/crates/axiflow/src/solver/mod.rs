//! Linear step systems and the damped Newton iteration.
//!
//! Every scheme step assembles a [`StepSystem`]: a banded operator over the
//! free degrees of freedom, plus (for closed curves) dense coupling blocks
//! between the cyclic border (the last node's unknowns) and the banded
//! chain, plus an optional rank-one term produced by volume-conserving
//! nonlocal averages. Solves are direct: banded LU with partial pivoting,
//! bordered elimination of the corner coupling, and a Sherman-Morrison
//! update for the rank-one part.

pub mod band;

use crate::error::Error;
use crate::mesh::DiscreteCurve;
use crate::Result;
pub use band::{BandLu, BandMatrix};

/// Relative residual bound enforced by [`solve_linear`].
pub const SOLVE_RESIDUAL_REL_TOL: f64 = 1e-10;

/// Assembled linear system for one time step (or one Newton iteration).
#[derive(Clone, Debug)]
pub struct StepSystem {
    n: usize,
    /// Number of trailing unknowns treated as the cyclic border.
    nb: usize,
    /// Banded block over the leading `n - nb` unknowns.
    band: BandMatrix,
    /// Dense coupling: chain rows x border columns, row-major (nb per row).
    u: Vec<f64>,
    /// Dense coupling: border rows x chain columns, row-major.
    v: Vec<f64>,
    /// Border diagonal block, nb x nb row-major.
    w: Vec<f64>,
    /// Optional rank-one term: operator + outer(u1, v1).
    rank_one: Option<(Vec<f64>, Vec<f64>)>,
    pub rhs: Vec<f64>,
}

impl StepSystem {
    /// `nb` trailing unknowns form the border (0 for open curves);
    /// `kl`/`ku` bound the band of the leading block.
    pub fn new(n: usize, nb: usize, kl: usize, ku: usize) -> Self {
        let nt = n - nb;
        StepSystem {
            n,
            nb,
            band: BandMatrix::new(nt, kl.min(nt.saturating_sub(1)), ku.min(nt.saturating_sub(1))),
            u: vec![0.0; nt * nb],
            v: vec![0.0; nb * nt],
            w: vec![0.0; nb * nb],
            rank_one: None,
            rhs: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn nt(&self) -> usize {
        self.n - self.nb
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        if value == 0.0 {
            return;
        }
        let nt = self.nt();
        match (i < nt, j < nt) {
            (true, true) => self.band.add(i, j, value),
            (true, false) => self.u[i * self.nb + (j - nt)] += value,
            (false, true) => self.v[(i - nt) * nt + j] += value,
            (false, false) => self.w[(i - nt) * self.nb + (j - nt)] += value,
        }
    }

    pub fn set_rank_one(&mut self, u1: Vec<f64>, v1: Vec<f64>) {
        assert_eq!(u1.len(), self.n);
        assert_eq!(v1.len(), self.n);
        self.rank_one = Some((u1, v1));
    }

    /// y = A x including border blocks and the rank-one term.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nt = self.nt();
        let nb = self.nb;
        let mut y = vec![0.0; self.n];
        self.band.mat_vec_add(&x[..nt], &mut y[..nt]);
        for i in 0..nt {
            for b in 0..nb {
                y[i] += self.u[i * nb + b] * x[nt + b];
            }
        }
        for b in 0..nb {
            let mut acc = 0.0;
            for j in 0..nt {
                acc += self.v[b * nt + j] * x[j];
            }
            for b2 in 0..nb {
                acc += self.w[b * nb + b2] * x[nt + b2];
            }
            y[nt + b] += acc;
        }
        if let Some((u1, v1)) = &self.rank_one {
            let s: f64 = v1.iter().zip(x).map(|(a, b)| a * b).sum();
            for i in 0..self.n {
                y[i] += u1[i] * s;
            }
        }
        y
    }

    /// Max-norm of the operator (largest absolute row sum), rank-one term
    /// included; the scale of backward-error bounds.
    pub fn inf_norm(&self) -> f64 {
        let nt = self.nt();
        let nb = self.nb;
        let mut row_sums = vec![0.0f64; self.n];
        for (i, _, v) in self.band.triplets() {
            row_sums[i] += v.abs();
        }
        for i in 0..nt {
            for b in 0..nb {
                row_sums[i] += self.u[i * nb + b].abs();
            }
        }
        for b in 0..nb {
            for j in 0..nt {
                row_sums[nt + b] += self.v[b * nt + j].abs();
            }
            for b2 in 0..nb {
                row_sums[nt + b] += self.w[b * nb + b2].abs();
            }
        }
        if let Some((u1, v1)) = &self.rank_one {
            let v_abs: f64 = v1.iter().map(|v| v.abs()).sum();
            for i in 0..self.n {
                row_sums[i] += u1[i].abs() * v_abs;
            }
        }
        row_sums.into_iter().fold(0.0, f64::max)
    }

    /// All nonzero entries (row, col, value); the rank-one term is expanded.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let nt = self.nt();
        let nb = self.nb;
        let mut out = self.band.triplets();
        for i in 0..nt {
            for b in 0..nb {
                let v = self.u[i * nb + b];
                if v != 0.0 {
                    out.push((i, nt + b, v));
                }
            }
        }
        for b in 0..nb {
            for j in 0..nt {
                let v = self.v[b * nt + j];
                if v != 0.0 {
                    out.push((nt + b, j, v));
                }
            }
            for b2 in 0..nb {
                let v = self.w[b * nb + b2];
                if v != 0.0 {
                    out.push((nt + b, nt + b2, v));
                }
            }
        }
        if let Some((u1, v1)) = &self.rank_one {
            for i in 0..self.n {
                if u1[i] == 0.0 {
                    continue;
                }
                for j in 0..self.n {
                    let v = u1[i] * v1[j];
                    if v != 0.0 {
                        out.push((i, j, v));
                    }
                }
            }
        }
        out.sort_by_key(|t| (t.0, t.1));
        out
    }

    /// Factor the banded block once; border and rank-one handled per solve.
    fn factor(&self) -> Result<FactoredSystem<'_>> {
        let lu = self.band.clone().factor()?;
        let nt = self.nt();
        let nb = self.nb;
        // Z = T^{-1} U, one banded solve per border column.
        let mut z = vec![0.0; nt * nb];
        for b in 0..nb {
            let mut col: Vec<f64> = (0..nt).map(|i| self.u[i * nb + b]).collect();
            lu.solve_in_place(&mut col);
            for i in 0..nt {
                z[i * nb + b] = col[i];
            }
        }
        // Schur complement S = W - V Z.
        let mut s = self.w.clone();
        for b in 0..nb {
            for b2 in 0..nb {
                let mut acc = 0.0;
                for j in 0..nt {
                    acc += self.v[b * nt + j] * z[j * nb + b2];
                }
                s[b * nb + b2] -= acc;
            }
        }
        let schur = DenseLu::factor(s, nb)?;
        Ok(FactoredSystem {
            sys: self,
            lu,
            z,
            schur,
        })
    }
}

struct FactoredSystem<'a> {
    sys: &'a StepSystem,
    lu: BandLu,
    z: Vec<f64>,
    schur: DenseLu,
}

impl FactoredSystem<'_> {
    /// Solve without the rank-one term.
    fn solve_core(&self, b: &[f64]) -> Vec<f64> {
        let nt = self.sys.nt();
        let nb = self.sys.nb;
        let mut y = b[..nt].to_vec();
        self.lu.solve_in_place(&mut y);
        let mut rb: Vec<f64> = b[nt..].to_vec();
        for bb in 0..nb {
            for j in 0..nt {
                rb[bb] -= self.sys.v[bb * nt + j] * y[j];
            }
        }
        self.schur.solve_in_place(&mut rb);
        let mut x = vec![0.0; self.sys.n];
        for i in 0..nt {
            let mut acc = y[i];
            for bb in 0..nb {
                acc -= self.z[i * nb + bb] * rb[bb];
            }
            x[i] = acc;
        }
        x[nt..].copy_from_slice(&rb);
        x
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match &self.sys.rank_one {
            None => Ok(self.solve_core(b)),
            Some((u1, v1)) => {
                // Sherman-Morrison on top of the bordered factorization.
                let x0 = self.solve_core(b);
                let au = self.solve_core(u1);
                let denom = 1.0 + dot(v1, &au);
                if denom == 0.0 {
                    return Err(Error::SingularSystem(
                        "rank-one update is singular".into(),
                    ));
                }
                let scale = dot(v1, &x0) / denom;
                Ok(x0
                    .iter()
                    .zip(&au)
                    .map(|(x, a)| x - scale * a)
                    .collect())
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Direct solve with a backward-error check against the unfactored
/// operator: the max-norm residual must not exceed
/// `SOLVE_RESIDUAL_REL_TOL * (1 + |rhs| + |A| |x|)`.
pub fn solve_linear(system: &StepSystem) -> Result<Vec<f64>> {
    let factored = system.factor()?;
    let x = factored.solve(&system.rhs)?;
    let y = system.apply(&x);
    let res = y
        .iter()
        .zip(&system.rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let bound = SOLVE_RESIDUAL_REL_TOL
        * (1.0 + max_abs(&system.rhs) + system.inf_norm() * max_abs(&x));
    if !res.is_finite() || res > bound {
        return Err(Error::SingularSystem(format!(
            "solution residual {res:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(x)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solve without the residual check; diagnostics only.
#[doc(hidden)]
pub fn solve_unverified(system: &StepSystem) -> Result<Vec<f64>> {
    system.factor()?.solve(&system.rhs)
}

/// Minimal dense LU with partial pivoting for the border Schur complement.
#[derive(Clone, Debug)]
struct DenseLu {
    n: usize,
    a: Vec<f64>,
    ipiv: Vec<usize>,
}

impl DenseLu {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        let mut ipiv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut pmax = a[k * n + k].abs();
            for i in k + 1..n {
                if a[i * n + k].abs() > pmax {
                    p = i;
                    pmax = a[i * n + k].abs();
                }
            }
            if pmax == 0.0 {
                return Err(Error::SingularSystem("singular border block".into()));
            }
            ipiv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                for j in k + 1..n {
                    a[i * n + j] -= l * a[k * n + j];
                }
            }
        }
        Ok(DenseLu { n, a, ipiv })
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        // Full rows are exchanged during factorization (stored multipliers
        // included), so all interchanges apply to b before the triangular
        // solves.
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                b.swap(p, k);
            }
        }
        for k in 0..n {
            for i in k + 1..n {
                b[i] -= self.a[i * n + k] * b[k];
            }
        }
        for k in (0..n).rev() {
            b[k] /= self.a[k * n + k];
            for i in 0..k {
                b[i] -= self.a[i * n + k] * b[k];
            }
        }
    }
}

/// Configuration of the Newton iteration for the nonlinear schemes.
#[derive(Clone, Copy, Debug)]
pub struct NewtonConfig {
    /// Absolute tolerance on the max-norm of the assembled residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Number of times a step may be halved when the residual grows or an
    /// iterate leaves the speed law's domain.
    pub damping_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tolerance: 1e-10,
            max_iterations: 20,
            damping_halvings: 4,
        }
    }
}

/// A nonlinear step problem: residual, its linearization, and a domain
/// admissibility test for speed laws with restricted domains.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, u: &[f64]) -> Result<StepSystem>;
    fn admissible(&self, _u: &[f64]) -> bool {
        true
    }
}

/// Damped Newton iteration. Full steps by default; a step is halved (up to
/// the configured count) if it leaves the admissible domain or increases
/// the residual norm. Returns the solution and the iteration count.
pub fn newton_solve<S: NonlinearSystem>(
    system: &S,
    start: Vec<f64>,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, usize)> {
    assert!(cfg.tolerance > 0.0 && cfg.max_iterations >= 1);
    let mut u = start;
    assert_eq!(u.len(), system.dim());
    if !system.admissible(&u) {
        return Err(Error::DomainViolation(
            "Newton start outside the admissible domain".into(),
        ));
    }
    let mut f = system.residual(&u)?;
    let mut fnorm = max_abs(&f);
    for it in 1..=cfg.max_iterations {
        if fnorm <= cfg.tolerance {
            return Ok((u, it - 1));
        }
        let mut jac = system.jacobian(&u)?;
        for (slot, val) in jac.rhs.iter_mut().zip(&f) {
            *slot = -val;
        }
        let delta = solve_linear(&jac)?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for halving in 0..=cfg.damping_halvings {
            let trial: Vec<f64> = u
                .iter()
                .zip(&delta)
                .map(|(a, d)| a + alpha * d)
                .collect();
            if !system.admissible(&trial) {
                alpha *= 0.5;
                continue;
            }
            let ftrial = system.residual(&trial)?;
            let fnorm_trial = max_abs(&ftrial);
            if fnorm_trial.is_finite() && (fnorm_trial < fnorm || halving == cfg.damping_halvings)
            {
                u = trial;
                f = ftrial;
                fnorm = fnorm_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::DomainViolation(format!(
                "no admissible Newton step after {} halvings",
                cfg.damping_halvings
            )));
        }
        if fnorm <= cfg.tolerance {
            return Ok((u, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: fnorm,
    })
}

/// Outcome of the time-step size guard for the vector-curvature nonlinear
/// scheme on curves away from the axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GuardOutcome {
    Pass,
    /// dt is at or above 3 min(r)^2; existence of a step solution is no
    /// longer guaranteed (the bound is sufficient, not necessary).
    Warn { dt: f64, bound: f64 },
    /// The curve touches the axis, where the guard's hypothesis fails.
    SkippedAxisContact,
}

pub fn timestep_guard(curve: &DiscreteCurve, dt: f64) -> GuardOutcome {
    let touches_axis =
        (0..curve.n_nodes()).any(|j| curve.is_axis_node(j)) || curve.min_radius_off_axis() <= 0.0;
    if touches_axis {
        return GuardOutcome::SkippedAxisContact;
    }
    let min_r = curve.min_radius_off_axis();
    let bound = 3.0 * min_r * min_r;
    if dt >= bound {
        GuardOutcome::Warn { dt, bound }
    } else {
        GuardOutcome::Pass
    }
}

/// Write the system in coordinate triplet text form (one `i j value` line
/// per entry, followed by `rhs i value` lines).
pub fn dump_system(system: &StepSystem) -> String {
    let mut out = String::new();
    for (i, j, v) in system.triplets() {
        out.push_str(&format!("{i} {j} {v}\n"));
    }
    for (i, v) in system.rhs.iter().enumerate() {
        out.push_str(&format!("rhs {i} {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_system_returns_rhs() {
        let mut sys = StepSystem::new(6, 0, 1, 1);
        for i in 0..6 {
            sys.add(i, i, 1.0);
            sys.rhs[i] = i as f64 - 2.5;
        }
        let x = solve_linear(&sys).unwrap();
        assert_eq!(x, sys.rhs);
    }

    #[test]
    fn laplacian_block_matches_hand_solution() {
        let n = 5;
        let mut sys = StepSystem::new(n, 0, 1, 1);
        for i in 0..n {
            sys.add(i, i, 2.0);
            if i > 0 {
                sys.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                sys.add(i, i + 1, -1.0);
            }
            sys.rhs[i] = 1.0;
        }
        let x = solve_linear(&sys).unwrap();
        for i in 0..n {
            let k = (i + 1) as f64;
            assert_relative_eq!(x[i], k * (n as f64 + 1.0 - k) / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cyclic_system_via_border() {
        // Circulant [2, -1, ..., -1] on n unknowns with one border node.
        let n = 9;
        let nb = 1;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut sys = StepSystem::new(n, nb, 1, 1);
        for i in 0..n {
            sys.add(i, i, 3.0);
            sys.add(i, (i + 1) % n, -1.0);
            sys.add(i, (i + n - 1) % n, -1.0);
            sys.rhs[i] = rng.gen_range(-1.0..1.0);
        }
        let x = solve_linear(&sys).unwrap();
        let res = sys
            .apply(&x)
            .iter()
            .zip(&sys.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(res < 1e-12);
    }

    #[test]
    fn border_block_with_late_pivot_swap() {
        // 3x3 border whose partial pivoting swaps rows at step 1 as well as
        // step 0; regression for the interchange convention of the dense
        // border factorization.
        let s = [
            2.630865573726878,
            -0.0018700841646376643,
            0.35,
            -0.0018700841646376646,
            2.630865573726878,
            -0.3500000000000002,
            349.99999999999994,
            -350.00000000000017,
            -0.5357568053111259,
        ];
        let rhs = [0.3, -0.7, 1.9];
        let mut sys = StepSystem::new(3, 3, 0, 0);
        for i in 0..3 {
            for j in 0..3 {
                sys.add(i, j, s[i * 3 + j]);
            }
            sys.rhs[i] = rhs[i];
        }
        let x = solve_linear(&sys).unwrap();
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| s[i * 3 + j] * x[j]).sum();
            assert_relative_eq!(row, rhs[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_one_update_solves() {
        let n = 8;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut sys = StepSystem::new(n, 2, 2, 2);
        for i in 0..n {
            sys.add(i, i, 5.0);
        }
        for _ in 0..12 {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let d = if i > j { i - j } else { j - i };
            if d <= 2 || i >= n - 2 || j >= n - 2 {
                sys.add(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        sys.set_rank_one(u, v);
        for i in 0..n {
            sys.rhs[i] = rng.gen_range(-1.0..1.0);
        }
        let x = solve_linear(&sys).unwrap();
        let res = sys
            .apply(&x)
            .iter()
            .zip(&sys.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(res < 1e-12);
    }

    struct CubeRoot;

    impl NonlinearSystem for CubeRoot {
        fn dim(&self) -> usize {
            1
        }
        fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![u[0] * u[0] * u[0] - 8.0])
        }
        fn jacobian(&self, u: &[f64]) -> Result<StepSystem> {
            let mut sys = StepSystem::new(1, 0, 0, 0);
            sys.add(0, 0, 3.0 * u[0] * u[0]);
            Ok(sys)
        }
    }

    #[test]
    fn newton_scalar_cube_root() {
        let (x, iters) = newton_solve(&CubeRoot, vec![3.0], &NewtonConfig::default()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!(iters <= 8);
    }

    struct LinearProblem;

    impl NonlinearSystem for LinearProblem {
        fn dim(&self) -> usize {
            2
        }
        fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![2.0 * u[0] - 1.0, 3.0 * u[1] + 2.0])
        }
        fn jacobian(&self, _u: &[f64]) -> Result<StepSystem> {
            let mut sys = StepSystem::new(2, 0, 0, 0);
            sys.add(0, 0, 2.0);
            sys.add(1, 1, 3.0);
            Ok(sys)
        }
    }

    #[test]
    fn newton_linear_single_iteration() {
        let (x, iters) =
            newton_solve(&LinearProblem, vec![0.0, 0.0], &NewtonConfig::default()).unwrap();
        assert_eq!(iters, 1);
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(x[1], -2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn newton_reports_no_convergence() {
        let cfg = NewtonConfig {
            tolerance: 1e-16,
            max_iterations: 1,
            damping_halvings: 0,
        };
        let err = newton_solve(&CubeRoot, vec![100.0], &cfg).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn guard_outcomes() {
        let torus = crate::harness::generate::torus_circle(1.0, 0.5, 16).unwrap();
        assert_eq!(timestep_guard(&torus, 1e-4), GuardOutcome::Pass);
        // min r = 0.5: bound = 0.75.
        assert!(matches!(
            timestep_guard(&torus, 0.75),
            GuardOutcome::Warn { .. }
        ));
        let sphere = crate::harness::generate::nonuniform_semicircle(1.0, 8).unwrap();
        assert_eq!(
            timestep_guard(&sphere, 1e-3),
            GuardOutcome::SkippedAxisContact
        );
    }

    #[test]
    fn guard_example_small_radius() {
        // min r = 0.01, dt = 1e-3: 3e-4 < 1e-3, so warn.
        let c = crate::harness::generate::torus_circle(1.01, 1.0, 64).unwrap();
        assert!((c.min_radius_off_axis() - 0.01).abs() < 1e-12);
        assert!(matches!(
            timestep_guard(&c, 1e-3),
            GuardOutcome::Warn { .. }
        ));
        assert_eq!(timestep_guard(&c, 1e-5), GuardOutcome::Pass);
    }
}
