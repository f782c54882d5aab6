//! Symmetric one-site TDVP with adaptive bond expansion.
//!
//! One step, state entering and leaving with its center on site 0:
//!   1. right environments for every bond
//!   2. left-to-right expansion pass: at each bond, measure the two-site
//!      tangent residual (the part of H|psi> the current manifold cannot
//!      represent); enrich the bond with the residual's dominant directions
//!      where the norm exceeds the precision threshold
//!   3. right-to-left half sweep at dt/2, then left-to-right at dt/2
//!      (forward site evolutions, backward bond evolutions)
//!   4. regauge the center home
//!
//! Expansion keeps the state bit-for-bit identical (new directions enter with
//! zero amplitude) and never shrinks a bond. The residual norm is obtained
//! from factored Gram matrices, so the cost of the singular-vector extraction
//! is only paid on bonds that actually grow.

use ndarray::prelude::*;
use ndarray_linalg::{JobSvd, SVDDC, QR};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensornet::krylov::lanczos_expm;
use crate::tensornet::mpo::MpoOperator;
use crate::tensornet::mps::{dagger, lq, merge12, merge23, split12, split23, MpsState};

#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub chi_max: usize,
    /// Expansion threshold p: residual singular directions above p are added.
    pub precision: f64,
    pub krylov_tol: f64,
    pub krylov_max: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: 0.1,
            chi_max: 100,
            precision: 1e-3,
            krylov_tol: 1e-12,
            krylov_max: 30,
        }
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    /// Largest two-site tangent residual seen across bonds.
    pub max_residual: f64,
    /// Number of bonds that grew this step.
    pub expanded_bonds: usize,
    /// Expansion wanted more room than chi_max allowed somewhere.
    pub chi_saturated: bool,
    /// State norm after the step.
    pub norm: f64,
}

type Env = Array3<C64>;

fn boundary_env() -> Env {
    Array3::from_elem((1, 1, 1), C64::new(1.0, 0.0))
}

fn mat3(t: &Array3<C64>, perm: [usize; 3], row_axes: usize) -> Array2<C64> {
    let p = t.view().permuted_axes(perm);
    let (d0, d1, d2) = p.dim();
    let std = p.as_standard_layout();
    let out = match row_axes {
        1 => std.to_shape((d0, d1 * d2)),
        2 => std.to_shape((d0 * d1, d2)),
        _ => unreachable!(),
    };
    out.expect("contiguous reshape").to_owned()
}

fn mat4(t: &Array4<C64>, perm: [usize; 4], row_axes: usize) -> Array2<C64> {
    let p = t.view().permuted_axes(perm);
    let (d0, d1, d2, d3) = p.dim();
    let std = p.as_standard_layout();
    let out = match row_axes {
        1 => std.to_shape((d0, d1 * d2 * d3)),
        2 => std.to_shape((d0 * d1, d2 * d3)),
        3 => std.to_shape((d0 * d1 * d2, d3)),
        _ => unreachable!(),
    };
    out.expect("contiguous reshape").to_owned()
}

fn to4(m: Array2<C64>, dims: (usize, usize, usize, usize)) -> Array4<C64> {
    m.as_standard_layout()
        .to_owned()
        .into_shape_with_order(dims)
        .expect("contiguous reshape")
}

/// L'(rk, wr, rb) after absorbing site tensor `a` and MPO tensor `w`.
pub(crate) fn update_left(l: &Env, a: &Array3<C64>, w: &Array4<C64>) -> Env {
    let (lk, wl, lb) = l.dim();
    let (alk, p, rk) = a.dim();
    let (wwl, wr, po, pi) = w.dim();
    debug_assert_eq!(lk, alk);
    debug_assert_eq!(wl, wwl);
    debug_assert_eq!(p, pi);
    // T1(wl*lb, p*rk) = sum_lk L(lk, wl*lb)^T A(lk, p*rk)
    let t1 = mat3(l, [0, 1, 2], 1).t().dot(&merge23(a));
    // T2(lb*rk, wr*po) = sum_{wl,pi} T1(lb, rk, wl, pi) W(wl, pi, wr, po)
    let t1 = to4(t1, (wl, lb, p, rk));
    let t2 = mat4(&t1, [1, 3, 0, 2], 2).dot(&mat4(w, [0, 3, 1, 2], 2));
    // T3(rk*wr, rb) = sum_{lb,po} T2(rk, wr, lb, po) conj A(lb, po, rb)
    let t2 = to4(t2, (lb, rk, wr, po));
    let t3 = mat4(&t2, [1, 2, 0, 3], 2).dot(&merge12(a).map(|z| z.conj()));
    let rb = t3.dim().1;
    t3.into_shape_with_order((rk, wr, rb)).expect("contiguous reshape")
}

/// R'(lk, wl, lb) after absorbing site tensor `a` and MPO tensor `w`.
pub(crate) fn update_right(r: &Env, a: &Array3<C64>, w: &Array4<C64>) -> Env {
    let (rk, wr, rb) = r.dim();
    let (lk, p, ark) = a.dim();
    let (wl, wwr, po, pi) = w.dim();
    debug_assert_eq!(rk, ark);
    debug_assert_eq!(wr, wwr);
    debug_assert_eq!(p, pi);
    // T1(lk*pi, wr*rb) = sum_rk A(lk*pi, rk) R(rk, wr*rb)
    let t1 = merge12(a).dot(&mat3(r, [0, 1, 2], 1));
    // T2(lk*rb, wl*po) = sum_{pi,wr} T1(lk, rb, pi, wr) W(pi, wr, wl, po)
    let t1 = to4(t1, (lk, p, wr, rb));
    let t2 = mat4(&t1, [0, 3, 1, 2], 2).dot(&mat4(w, [3, 1, 0, 2], 2));
    // T3(lk*wl, lb) = sum_{rb,po} T2(lk, wl, rb, po) conj A(rb?, ...) --
    // bra tensor enters as conj A(lb, po, rb) reshaped to (rb*po, lb)
    let t2 = to4(t2, (lk, rb, wl, po));
    let bra = mat3(a, [2, 1, 0], 2).map(|z| z.conj());
    let t3 = mat4(&t2, [0, 2, 1, 3], 2).dot(&bra);
    let lb = t3.dim().1;
    t3.into_shape_with_order((lk, wl, lb)).expect("contiguous reshape")
}

/// One-site effective Hamiltonian application.
pub(crate) fn apply_site(l: &Env, w: &Array4<C64>, r: &Env, a: &Array3<C64>) -> Array3<C64> {
    let (_lk, wl, lb) = l.dim();
    let (rk, wr, rb) = r.dim();
    let (_, p, _) = a.dim();
    let (_, _, po, _) = w.dim();
    let t1 = mat3(l, [0, 1, 2], 1).t().dot(&merge23(a));
    let t1 = to4(t1, (wl, lb, p, rk));
    let t2 = mat4(&t1, [1, 3, 0, 2], 2).dot(&mat4(w, [0, 3, 1, 2], 2));
    let t2 = to4(t2, (lb, rk, wr, po));
    let t3 = mat4(&t2, [0, 3, 1, 2], 2).dot(&mat3(r, [0, 1, 2], 2));
    debug_assert_eq!(t3.dim(), (lb * po, rb));
    t3.into_shape_with_order((lb, po, rb)).expect("contiguous reshape")
}

/// Zero-site (bond) effective Hamiltonian application.
pub(crate) fn apply_bond(l: &Env, r: &Env, c: &Array2<C64>) -> Array2<C64> {
    let (_lk, wl, lb) = l.dim();
    let (rk, _wr, rb) = r.dim();
    let t1 = mat3(l, [0, 1, 2], 1).t().dot(c);
    let t1 = t1.into_shape_with_order((wl, lb, rk)).expect("contiguous reshape");
    let t1 = mat3(&t1, [1, 2, 0], 1);
    debug_assert_eq!(t1.dim().1, rk * wl);
    let rmat = mat3(r, [0, 1, 2], 2);
    let y = t1.dot(&rmat);
    debug_assert_eq!(y.dim(), (lb, rb));
    y
}

/// <psi| H |psi> by full network contraction; gauge-independent.
pub fn expectation(state: &MpsState, mpo: &MpoOperator) -> C64 {
    let mut env = boundary_env();
    for i in 0..state.n_sites() {
        env = update_left(&env, state.tensor(i), mpo.tensor(i));
    }
    env[[0, 0, 0]]
}

fn krylov_site(
    l: &Env,
    w: &Array4<C64>,
    r: &Env,
    a: &Array3<C64>,
    tau: f64,
    cfg: &EvolutionConfig,
) -> Result<Array3<C64>> {
    let dims = a.dim();
    let flat = a
        .as_standard_layout()
        .to_owned()
        .into_shape_with_order(dims.0 * dims.1 * dims.2)
        .expect("contiguous reshape");
    let out = lanczos_expm(
        |v| {
            let a3 = v
                .clone()
                .into_shape_with_order(dims)
                .expect("contiguous reshape");
            let y = apply_site(l, w, r, &a3);
            y.into_shape_with_order(dims.0 * dims.1 * dims.2)
                .expect("contiguous reshape")
        },
        &flat,
        tau,
        cfg.krylov_tol,
        cfg.krylov_max,
    )?;
    Ok(out.into_shape_with_order(dims).expect("contiguous reshape"))
}

fn krylov_bond(l: &Env, r: &Env, c: &Array2<C64>, tau: f64, cfg: &EvolutionConfig) -> Result<Array2<C64>> {
    let dims = c.dim();
    let flat = c
        .as_standard_layout()
        .to_owned()
        .into_shape_with_order(dims.0 * dims.1)
        .expect("contiguous reshape");
    let out = lanczos_expm(
        |v| {
            let c2 = v
                .clone()
                .into_shape_with_order(dims)
                .expect("contiguous reshape");
            apply_bond(l, r, &c2)
                .into_shape_with_order(dims.0 * dims.1)
                .expect("contiguous reshape")
        },
        &flat,
        tau,
        cfg.krylov_tol,
        cfg.krylov_max,
    )?;
    Ok(out.into_shape_with_order(dims).expect("contiguous reshape"))
}

/// Half of the two-site effective-H image that lives on the left site:
/// F1(lb*po, wr*rk) from L, A(i), W(i).
fn left_half(l: &Env, a: &Array3<C64>, w: &Array4<C64>) -> Array2<C64> {
    let (_lk, wl, lb) = l.dim();
    let (_, p, rk) = a.dim();
    let (_, wr, po, _) = w.dim();
    let t1 = mat3(l, [0, 1, 2], 1).t().dot(&merge23(a));
    let t1 = to4(t1, (wl, lb, p, rk));
    let t2 = mat4(&t1, [1, 3, 0, 2], 2).dot(&mat4(w, [0, 3, 1, 2], 2));
    let t2 = to4(t2, (lb, rk, wr, po));
    mat4(&t2, [0, 3, 2, 1], 2)
}

/// Mirror half on the right site: F2(wl*lk, po*rb) from W(i+1), A(i+1), R.
fn right_half(r: &Env, a: &Array3<C64>, w: &Array4<C64>) -> Array2<C64> {
    let (_rk, wr, rb) = r.dim();
    let (lk, p, _) = a.dim();
    let (wl, _, po, _) = w.dim();
    let t1 = merge12(a).dot(&mat3(r, [0, 1, 2], 1));
    let t1 = to4(t1, (lk, p, wr, rb));
    let t2 = mat4(&t1, [0, 3, 1, 2], 2).dot(&mat4(w, [3, 1, 0, 2], 2));
    let t2 = to4(t2, (lk, rb, wl, po));
    mat4(&t2, [2, 0, 3, 1], 2)
}

struct BondExpansion {
    residual: f64,
    directions: Option<Array2<C64>>,
    saturated: bool,
}

/// Residual of the two-site tangent projection at the bond (center at site i),
/// and the orthonormal directions worth adding under the thresholds.
fn bond_residual(
    lenv: &Env,
    renv2: &Env,
    a_center: &Array3<C64>,
    a_right: &Array3<C64>,
    w1: &Array4<C64>,
    w2: &Array4<C64>,
    q_left: &Array2<C64>,
    cfg: &EvolutionConfig,
) -> Result<BondExpansion> {
    let chi = a_center.dim().2;
    let lp = a_center.dim().0 * a_center.dim().1;
    let pr = a_right.dim().1 * a_right.dim().2;
    let f1 = left_half(lenv, a_center, w1);
    let f2 = right_half(renv2, a_right, w2);
    // project out what the current bases already represent
    let f1p = &f1 - &q_left.dot(&dagger(q_left).dot(&f1));
    let m = merge23(a_right);
    let f2p = &f2 - &f2.dot(&dagger(&m)).dot(&m);
    let g1 = dagger(&f1p).dot(&f1p);
    let g2 = f2p.dot(&dagger(&f2p));
    let norm2 = (&g1 * &g2.t()).sum().re.max(0.0);
    let residual = norm2.sqrt();
    let headroom_rank = lp.saturating_sub(chi).min(pr.saturating_sub(chi));
    let headroom_cap = cfg.chi_max.saturating_sub(chi);
    if residual <= cfg.precision || headroom_rank == 0 {
        return Ok(BondExpansion { residual, directions: None, saturated: residual > cfg.precision && headroom_cap == 0 && headroom_rank > 0 });
    }
    if headroom_cap == 0 {
        return Ok(BondExpansion { residual, directions: None, saturated: true });
    }
    // economy factorization: residual = Q1 (R1 L2) Q2 with a small core
    let (q1, r1) = f1p.qr()?;
    let (l2, _q2) = lq(&f2p)?;
    let core = r1.dot(&l2);
    let (u, sv, _vt) = core.svddc(JobSvd::Some)?;
    let u = u.ok_or_else(|| Error::numeric("svd left vectors missing"))?;
    let want = sv.iter().take_while(|&&s| s > cfg.precision).count();
    let take = want.min(headroom_rank).min(headroom_cap);
    if take == 0 {
        return Ok(BondExpansion { residual, directions: None, saturated: false });
    }
    let dirs = q1.dot(&u.slice(s![.., ..take]));
    Ok(BondExpansion {
        residual,
        directions: Some(dirs),
        saturated: want > headroom_cap,
    })
}

fn hstack(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("column stack")
}

fn vstack_zero(a: &Array2<C64>, extra_rows: usize) -> Array2<C64> {
    if extra_rows == 0 {
        return a.clone();
    }
    let z = Array2::<C64>::zeros((extra_rows, a.dim().1));
    ndarray::concatenate(Axis(0), &[a.view(), z.view()]).expect("row stack")
}

/// One symmetric second-order step of size cfg.dt.
/// Precondition and postcondition: orthogonality center on site 0.
pub fn tdvp_step(state: &mut MpsState, mpo: &MpoOperator, cfg: &EvolutionConfig) -> Result<StepReport> {
    let n = state.n_sites();
    assert_eq!(mpo.n_sites(), n);
    state.canonicalize_to(0)?;
    let mut report = StepReport::default();

    // right environments: renvs[i] spans sites i..n-1
    let mut renvs: Vec<Env> = vec![boundary_env(); n + 1];
    for i in (1..n).rev() {
        renvs[i] = update_right(&renvs[i + 1], state.tensor(i), mpo.tensor(i));
    }

    // expansion pass, left to right; lenvs[i] spans sites 0..i-1
    let mut lenvs: Vec<Env> = vec![boundary_env(); n + 1];
    for i in 0..n - 1 {
        let a = state.tensor(i).clone();
        let (l, p, _chi) = a.dim();
        let (q, rmat) = merge12(&a).qr()?;
        let next = state.tensor(i + 1).clone();
        let (_, p2, r2) = next.dim();
        let exp = bond_residual(
            &lenvs[i],
            &renvs[i + 2],
            &a,
            &next,
            mpo.tensor(i),
            mpo.tensor(i + 1),
            &q,
            cfg,
        )?;
        report.max_residual = report.max_residual.max(exp.residual);
        report.chi_saturated |= exp.saturated;
        let (q_new, c_new) = match exp.directions {
            Some(dirs) => {
                report.expanded_bonds += 1;
                let k = dirs.dim().1;
                (hstack(&q, &dirs), vstack_zero(&rmat, k))
            }
            None => (q, rmat),
        };
        state.set_tensor(i, split12(q_new, l, p));
        state.set_tensor(i + 1, split23(c_new.dot(&merge23(&next)), p2, r2));
        state.set_center(i + 1);
        lenvs[i + 1] = update_left(&lenvs[i], state.tensor(i), mpo.tensor(i));
    }
    if report.chi_saturated {
        state.chi_saturated = true;
    }

    let half = 0.5 * cfg.dt;

    // right-to-left half sweep
    for i in (0..n).rev() {
        let evolved = krylov_site(&lenvs[i], mpo.tensor(i), &renvs[i + 1], state.tensor(i), half, cfg)?;
        if i == 0 {
            state.set_tensor(0, evolved);
            state.set_center(0);
            break;
        }
        let (_, p, r) = evolved.dim();
        let (cmat, qmat) = lq(&merge23(&evolved))?;
        state.set_tensor(i, split23(qmat, p, r));
        renvs[i] = update_right(&renvs[i + 1], state.tensor(i), mpo.tensor(i));
        let cback = krylov_bond(&lenvs[i], &renvs[i], &cmat, -half, cfg)?;
        let prev = state.tensor(i - 1);
        let (lp, pp, _) = prev.dim();
        let absorbed = merge12(prev).dot(&cback);
        state.set_tensor(i - 1, split12(absorbed, lp, pp));
        state.set_center(i - 1);
    }

    // left-to-right half sweep
    for i in 0..n {
        let evolved = krylov_site(&lenvs[i], mpo.tensor(i), &renvs[i + 1], state.tensor(i), half, cfg)?;
        if i + 1 == n {
            state.set_tensor(i, evolved);
            state.set_center(i);
            break;
        }
        let (l, p, _) = evolved.dim();
        let (qmat, rmat) = merge12(&evolved).qr()?;
        state.set_tensor(i, split12(qmat, l, p));
        lenvs[i + 1] = update_left(&lenvs[i], state.tensor(i), mpo.tensor(i));
        let cback = krylov_bond(&lenvs[i + 1], &renvs[i + 1], &rmat, -half, cfg)?;
        let next = state.tensor(i + 1);
        let (_, pn, rn) = next.dim();
        let absorbed = cback.dot(&merge23(next));
        state.set_tensor(i + 1, split23(absorbed, pn, rn));
        state.set_center(i + 1);
    }

    state.canonicalize_to(0)?;
    report.norm = state.norm();
    Ok(report)
}
