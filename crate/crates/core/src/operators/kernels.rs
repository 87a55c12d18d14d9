//! Sum-factorized volume and face kernels shared by every DG operator.
//!
//! All weak forms here are instances of the flux residual
//!
//! ```text
//! r_i = ∫_K F · ∇ψ_i dΩ − ∫_∂K F̂ ψ_i dΣ
//! ```
//!
//! with `F̂ = {{F}}·n + λ/2 (q_own − q_nbr)` on interior faces and one of the
//! [`WallFlux`] rules on walls. Quadrature is collocated at the basis nodes.
//!
//! Face fluxes are evaluated once per face into a flat array (oriented along
//! the normal of the minus side) and then gathered element by element, so
//! every element block of the output is written by exactly one pass. The
//! element loops are monomorphized on the number of nodes per direction.

use crate::discretization::{DgSpace, Face, LocalFace};

/// Calls `$name::<N>(args)` with `N` the runtime nodes-per-direction `$n1`.
macro_rules! with_n1 {
    ($n1:expr, $name:ident($($arg:expr),* $(,)?)) => {
        match $n1 {
            2 => $name::<2>($($arg),*),
            3 => $name::<3>($($arg),*),
            4 => $name::<4>($($arg),*),
            5 => $name::<5>($($arg),*),
            6 => $name::<6>($($arg),*),
            7 => $name::<7>($($arg),*),
            8 => $name::<8>($($arg),*),
            9 => $name::<9>($($arg),*),
            n => unreachable!("unsupported nodes per direction {n}"),
        }
    };
}

/// Boundary closure applied at wall faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WallFlux {
    /// No flux through the wall.
    Zero,
    /// Mirror state with negated normal velocity for the wall-normal momentum:
    /// `F̂ = F_own·n + λ q_own`.
    Reflect,
}

#[inline]
pub(crate) fn trace_index(n1: usize, element: usize, face: LocalFace, k: usize) -> usize {
    (element * 4 + face.index()) * n1 + k
}

/// Reference-element data in fixed-size arrays.
struct Reference<const N: usize> {
    w: [f64; N],
    tl: [f64; N],
    tr: [f64; N],
    /// `dw[a][i] = w_a l_i'(ξ_a)`.
    dw: [[f64; N]; N],
}

impl<const N: usize> Reference<N> {
    fn new(space: &DgSpace) -> Self {
        let b = space.basis();
        debug_assert_eq!(b.n1(), N);
        let arr = |s: &[f64]| -> [f64; N] { std::array::from_fn(|i| s[i]) };
        let wd = b.weighted_diff();
        Reference {
            w: arr(b.weights()),
            tl: arr(b.trace_left()),
            tr: arr(b.trace_right()),
            dw: std::array::from_fn(|a| std::array::from_fn(|i| wd[a * N + i])),
        }
    }
}

/// Per-element volume terms `scale ∫_K F·∇ψ_i` with the metric factors folded in.
struct Volume<const N: usize> {
    r: Reference<N>,
    cx: f64,
    cz: f64,
}

impl<const N: usize> Volume<N> {
    fn new(space: &DgSpace, scale: f64) -> Self {
        let mesh = space.mesh();
        Volume {
            r: Reference::new(space),
            cx: scale * 0.5 * mesh.hz(),
            cz: scale * 0.5 * mesh.hx(),
        }
    }

    #[inline(always)]
    fn add_x(&self, f: &[f64], o: &mut [f64]) {
        let (f, o) = (&f[..N * N], &mut o[..N * N]);
        for j in 0..N {
            let cj = self.cx * self.r.w[j];
            for i in 0..N {
                let mut s = 0.0;
                for a in 0..N {
                    s += self.r.dw[a][i] * f[j * N + a];
                }
                o[j * N + i] += cj * s;
            }
        }
    }

    #[inline(always)]
    fn add_z(&self, f: &[f64], o: &mut [f64]) {
        let (f, o) = (&f[..N * N], &mut o[..N * N]);
        for j in 0..N {
            for i in 0..N {
                let mut s = 0.0;
                for b in 0..N {
                    s += self.r.dw[b][j] * f[b * N + i];
                }
                o[j * N + i] += self.cz * self.r.w[i] * s;
            }
        }
    }
}

/// Values of a nodal field interpolated to the face points of every element.
pub(crate) fn traces(space: &DgSpace, q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.mesh().n_elements() * 4 * space.n1()];
    traces_into(space, q, &mut out);
    out
}

pub(crate) fn traces_into(space: &DgSpace, q: &[f64], out: &mut [f64]) {
    with_n1!(space.n1(), traces_n(space, q, out))
}

fn traces_n<const N: usize>(space: &DgSpace, q: &[f64], out: &mut [f64]) {
    let r = Reference::<N>::new(space);
    for (block, fb) in q.chunks_exact(N * N).zip(out.chunks_exact_mut(4 * N)) {
        let mut left = [0.0; N];
        let mut right = [0.0; N];
        let mut bottom = [0.0; N];
        let mut top = [0.0; N];
        for j in 0..N {
            for i in 0..N {
                let v = block[j * N + i];
                left[j] += r.tl[i] * v;
                right[j] += r.tr[i] * v;
                bottom[i] += r.tl[j] * v;
                top[i] += r.tr[j] * v;
            }
        }
        fb[..N].copy_from_slice(&left);
        fb[N..2 * N].copy_from_slice(&right);
        fb[2 * N..3 * N].copy_from_slice(&bottom);
        fb[3 * N..4 * N].copy_from_slice(&top);
    }
}

/// Which faces an element gather lifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FaceSet {
    All,
    Vertical,
    Horizontal,
}

type WallFn<'a> = &'a dyn Fn(usize, &Face, usize, usize) -> f64;

/// Fills `flux[fid * n1 + k]` with the numerical flux oriented along the
/// minus-side normal. `interior(fid, face, k, im, ip)` and
/// `wall(fid, face, k, im)` receive trace indices; wall faces are left zero
/// when `wall` is `None`.
fn face_fluxes(
    space: &DgSpace,
    flux: &mut [f64],
    interior: impl Fn(usize, &Face, usize, usize, usize) -> f64,
    wall: Option<WallFn>,
) {
    let n1 = space.n1();
    for (fid, face) in space.mesh().faces().iter().enumerate() {
        let m = face.minus;
        let out = &mut flux[fid * n1..(fid + 1) * n1];
        match face.plus {
            Some(p) => {
                for (k, o) in out.iter_mut().enumerate() {
                    let im = trace_index(n1, m.element, m.local, k);
                    let ip = trace_index(n1, p.element, p.local, k);
                    *o = interior(fid, face, k, im, ip);
                }
            }
            None => match wall {
                Some(wf) => {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = wf(fid, face, k, trace_index(n1, m.element, m.local, k));
                    }
                }
                None => out.iter_mut().for_each(|v| *v = 0.0),
            },
        }
    }
}

/// Element pass: `volume(e, o)` adds the volume term of element `e`, then the
/// face fluxes of the selected faces are lifted, `o_i −= scale ∫_face F̂ ψ_i`.
fn gather<const N: usize>(
    space: &DgSpace,
    flux: &[f64],
    faces: FaceSet,
    scale: f64,
    out: &mut [f64],
    mut volume: impl FnMut(usize, &mut [f64]),
) {
    let mesh = space.mesh();
    let r = Reference::<N>::new(space);
    let cv = scale * 0.5 * mesh.hz();
    let ch = scale * 0.5 * mesh.hx();
    let side = |e: usize, local: LocalFace| -> [f64; N] {
        let (fid, minus) = mesh.face_of(e, local);
        let src = &flux[fid * N..(fid + 1) * N];
        let s = if minus { 1.0 } else { -1.0 };
        std::array::from_fn(|k| s * src[k])
    };
    for (e, o) in out.chunks_exact_mut(N * N).enumerate() {
        volume(e, o);
        if faces != FaceSet::Horizontal {
            let (a, b) = (side(e, LocalFace::Left), side(e, LocalFace::Right));
            for j in 0..N {
                let (pl, pr) = (cv * r.w[j] * a[j], cv * r.w[j] * b[j]);
                for i in 0..N {
                    o[j * N + i] -= pl * r.tl[i] + pr * r.tr[i];
                }
            }
        }
        if faces != FaceSet::Vertical {
            let (a, b) = (side(e, LocalFace::Bottom), side(e, LocalFace::Top));
            for j in 0..N {
                let (sb, st) = (ch * r.tl[j], ch * r.tr[j]);
                for i in 0..N {
                    o[j * N + i] -= r.w[i] * (sb * a[i] + st * b[i]);
                }
            }
        }
    }
}

/// Normal component selector: `(is_vertical, n·e)` for the face.
#[inline]
fn orient(face: &Face) -> (bool, f64) {
    if face.minus.local.is_vertical() {
        (true, face.normal[0])
    } else {
        (false, face.normal[1])
    }
}

/// Full flux residual for nodal fluxes `fx`, `fz` and optional Rusanov penalty
/// on the nodal field `q` with face speeds `lambda`; accumulated into `out`.
pub(crate) fn add_residual(
    space: &DgSpace,
    fx: Option<&[f64]>,
    fz: Option<&[f64]>,
    penalty: Option<(&[f64], &[f64])>,
    wall: WallFlux,
    scale: f64,
    out: &mut [f64],
) {
    let n1 = space.n1();
    let fx_tr = fx.map(|f| traces(space, f));
    let fz_tr = fz.map(|f| traces(space, f));
    let q_tr = penalty.map(|(q, lambda)| (traces(space, q), lambda));
    let normal_trace = |face: &Face| {
        let (vertical, sign) = orient(face);
        (if vertical { fx_tr.as_deref() } else { fz_tr.as_deref() }, sign)
    };
    let mut flux = vec![0.0; space.mesh().faces().len() * n1];
    let interior = |fid: usize, face: &Face, k: usize, im: usize, ip: usize| {
        let (tr, sign) = normal_trace(face);
        let mut f = tr.map_or(0.0, |t| 0.5 * sign * (t[im] + t[ip]));
        if let Some((q, lambda)) = &q_tr {
            f += 0.5 * lambda[fid * n1 + k] * (q[im] - q[ip]);
        }
        f
    };
    let on_wall = |fid: usize, face: &Face, k: usize, im: usize| {
        let (tr, sign) = normal_trace(face);
        let mut f = tr.map_or(0.0, |t| sign * t[im]);
        if let (WallFlux::Reflect, Some((q, lambda))) = (wall, &q_tr) {
            f += lambda[fid * n1 + k] * q[im];
        }
        f
    };
    let wall_fn: Option<WallFn> = match wall {
        WallFlux::Zero => None,
        _ => Some(&on_wall),
    };
    face_fluxes(space, &mut flux, interior, wall_fn);
    with_n1!(n1, residual_gather(space, &flux, fx, fz, scale, out))
}

fn residual_gather<const N: usize>(
    space: &DgSpace,
    flux: &[f64],
    fx: Option<&[f64]>,
    fz: Option<&[f64]>,
    scale: f64,
    out: &mut [f64],
) {
    let vol = Volume::<N>::new(space, scale);
    gather::<N>(space, flux, FaceSet::All, scale, out, |e, o| {
        let range = e * N * N..(e + 1) * N * N;
        if let Some(fx) = fx {
            vol.add_x(&fx[range.clone()], o);
        }
        if let Some(fz) = fz {
            vol.add_z(&fz[range], o);
        }
    });
}

/// Traces of the horizontal and vertical velocity and the face speeds.
pub(crate) struct FaceVelocity {
    pub ut: Vec<f64>,
    pub wt: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl FaceVelocity {
    /// Velocity traces without face speeds, for unpenalized fluxes.
    pub fn traces_only(space: &DgSpace, velocity: &[f64]) -> Self {
        let n = space.n_dofs();
        FaceVelocity {
            ut: traces(space, &velocity[..n]),
            wt: traces(space, &velocity[2 * n..3 * n]),
            lambda: Vec::new(),
        }
    }

    pub fn new(space: &DgSpace, velocity: &[f64]) -> Self {
        let n1 = space.n1();
        let FaceVelocity { ut, wt, .. } = Self::traces_only(space, velocity);
        let faces = space.mesh().faces();
        let mut lambda = vec![0.0; faces.len() * n1];
        for (fid, face) in faces.iter().enumerate() {
            let comp = if face.minus.local.is_vertical() { &ut } else { &wt };
            for k in 0..n1 {
                let a = comp[trace_index(n1, face.minus.element, face.minus.local, k)].abs();
                let b = face
                    .plus
                    .map(|p| comp[trace_index(n1, p.element, p.local, k)].abs())
                    .unwrap_or(0.0);
                lambda[fid * n1 + k] = a.max(b);
            }
        }
        FaceVelocity { ut, wt, lambda }
    }
}

/// Residual of the advective flux `q u`: nodal products in the volume, and
/// products of the traces `q_tr` and the velocity traces `ut`, `wt` on faces,
/// with a Rusanov penalty on `q_tr` when face speeds are given.
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_advection(
    space: &DgSpace,
    q: &[f64],
    q_tr: &[f64],
    velocity: &[f64],
    (ut, wt): (&[f64], &[f64]),
    lambda: Option<&[f64]>,
    wall: WallFlux,
    scale: f64,
    out: &mut [f64],
) {
    let n1 = space.n1();
    let normal_velocity = |face: &Face| {
        let (vertical, sign) = orient(face);
        (if vertical { ut } else { wt }, sign)
    };
    let interior = |fid: usize, face: &Face, k: usize, im: usize, ip: usize| {
        let (vn, sign) = normal_velocity(face);
        let mut f = 0.5 * sign * (q_tr[im] * vn[im] + q_tr[ip] * vn[ip]);
        if let Some(l) = lambda {
            f += 0.5 * l[fid * n1 + k] * (q_tr[im] - q_tr[ip]);
        }
        f
    };
    let on_wall = |fid: usize, face: &Face, k: usize, im: usize| {
        let (vn, sign) = normal_velocity(face);
        let mut f = sign * q_tr[im] * vn[im];
        if let (WallFlux::Reflect, Some(l)) = (wall, lambda) {
            f += l[fid * n1 + k] * q_tr[im];
        }
        f
    };
    let wall_fn: Option<WallFn> = match wall {
        WallFlux::Zero => None,
        _ => Some(&on_wall),
    };
    let mut flux = vec![0.0; space.mesh().faces().len() * n1];
    face_fluxes(space, &mut flux, interior, wall_fn);
    with_n1!(n1, advection_gather(space, &flux, q, velocity, scale, out))
}

fn advection_gather<const N: usize>(
    space: &DgSpace,
    flux: &[f64],
    q: &[f64],
    velocity: &[f64],
    scale: f64,
    out: &mut [f64],
) {
    let n = space.n_dofs();
    let vol = Volume::<N>::new(space, scale);
    let (vx, vz) = (&velocity[..n], &velocity[2 * n..3 * n]);
    let mut fx = vec![0.0; N * N];
    let mut fz = vec![0.0; N * N];
    gather::<N>(space, flux, FaceSet::All, scale, out, |e, o| {
        let range = e * N * N..(e + 1) * N * N;
        let (qe, ue, we) = (&q[range.clone()], &vx[range.clone()], &vz[range]);
        for k in 0..N * N {
            fx[k] = qe[k] * ue[k];
            fz[k] = qe[k] * we[k];
        }
        vol.add_x(&fx, o);
        vol.add_z(&fz, o);
    });
}

/// Weak gradient of `p` accumulated into `ox`, `oz`: centered faces and the
/// interior trace on walls. `p_tr` holds the traces of `p`.
pub(crate) fn add_gradient(space: &DgSpace, p: &[f64], p_tr: &[f64], scale: f64, ox: &mut [f64], oz: &mut [f64]) {
    let n1 = space.n1();
    let mut flux = vec![0.0; space.mesh().faces().len() * n1];
    let interior = |_: usize, face: &Face, _: usize, im: usize, ip: usize| 0.5 * orient(face).1 * (p_tr[im] + p_tr[ip]);
    let on_wall = |_: usize, face: &Face, _: usize, im: usize| orient(face).1 * p_tr[im];
    face_fluxes(space, &mut flux, interior, Some(&on_wall));
    with_n1!(n1, gradient_gather(space, &flux, p, scale, ox, oz))
}

fn gradient_gather<const N: usize>(
    space: &DgSpace,
    flux: &[f64],
    p: &[f64],
    scale: f64,
    ox: &mut [f64],
    oz: &mut [f64],
) {
    let vol = Volume::<N>::new(space, scale);
    let block = |e: usize| &p[e * N * N..(e + 1) * N * N];
    gather::<N>(space, flux, FaceSet::Vertical, scale, ox, |e, o| vol.add_x(block(e), o));
    gather::<N>(space, flux, FaceSet::Horizontal, scale, oz, |e, o| vol.add_z(block(e), o));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_constant_flux_vanishes_on_periodic_rows() {
        // F = (1, 0): no net divergence anywhere on a periodic channel.
        let s = DgSpace::build(3, 2, 3.0, 2.0, 3).unwrap();
        let one = vec![1.0; s.n_dofs()];
        let mut out = vec![0.0; s.n_dofs()];
        add_residual(&s, Some(&one), None, None, WallFlux::Zero, 1.0, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn residual_matches_strong_divergence_for_smooth_periodic_flux() {
        // F = (sin(2πx/L), 0): r_i ≈ −W_i ∂x F at nodes (exactly for polynomials,
        // spectrally close here).
        let s = DgSpace::build(8, 1, 1.0, 1.0, 6).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let fx = s.interpolate(|x, _| (tau * x).sin());
        let mut out = vec![0.0; s.n_dofs()];
        add_residual(&s, Some(&fx), None, None, WallFlux::Zero, 1.0, &mut out);
        for k in 0..s.n_dofs() {
            let expect = -s.mass()[k] * tau * (tau * s.node_x()[k]).cos();
            assert!((out[k] - expect).abs() < 1e-6, "{k}: {} vs {expect}", out[k]);
        }
    }
}
