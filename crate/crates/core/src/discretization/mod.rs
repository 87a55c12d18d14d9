//! Mesh, nodal basis and the combined discrete space.

pub mod basis;
pub mod layout;
pub mod mesh;

pub use basis::{gauss_legendre, TensorBasis, MAX_DEGREE};
pub use layout::DofLayout;
pub use mesh::{build_mesh, min_diameter, ChannelMesh, Face, FaceKind, FaceSide, LocalFace};

use crate::error::{Error, Result};

/// Mesh + basis + layout, with the per-node quadrature weights and coordinates
/// cached. Immutable after construction.
#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: ChannelMesh,
    basis: TensorBasis,
    layout: DofLayout,
    /// `w_i w_j |J|` at every node.
    mass: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
}

impl DgSpace {
    pub fn new(mesh: ChannelMesh, basis: TensorBasis) -> Self {
        let n1 = basis.n1();
        let layout = DofLayout::new(n1, mesh.n_elements());
        let jac = mesh.jacobian();
        let mut mass = vec![0.0; layout.len()];
        let mut x = vec![0.0; layout.len()];
        let mut z = vec![0.0; layout.len()];
        let (hx, hz) = (mesh.hx(), mesh.hz());
        for e in 0..mesh.n_elements() {
            let (x0, z0) = mesh.element_origin(e);
            for j in 0..n1 {
                for i in 0..n1 {
                    let k = layout.index(e, i, j);
                    mass[k] = basis.weights()[i] * basis.weights()[j] * jac;
                    x[k] = x0 + 0.5 * (basis.nodes()[i] + 1.0) * hx;
                    z[k] = z0 + 0.5 * (basis.nodes()[j] + 1.0) * hz;
                }
            }
        }
        DgSpace {
            mesh,
            basis,
            layout,
            mass,
            x,
            z,
        }
    }

    /// Convenience constructor from mesh counts, extents and degree.
    pub fn build(nx: usize, nz: usize, lx: f64, lz: f64, degree: usize) -> Result<Self> {
        Ok(DgSpace::new(
            build_mesh(nx, nz, lx, lz)?,
            gauss_legendre(degree)?,
        ))
    }

    pub fn mesh(&self) -> &ChannelMesh {
        &self.mesh
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn n1(&self) -> usize {
        self.basis.n1()
    }

    /// Dofs per scalar field.
    pub fn n_dofs(&self) -> usize {
        self.layout.len()
    }

    /// Diagonal of the (unweighted) collocated mass matrix.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn node_x(&self) -> &[f64] {
        &self.x
    }

    pub fn node_z(&self) -> &[f64] {
        &self.z
    }

    pub(crate) fn check_len(&self, v: &[f64], components: usize) -> Result<()> {
        let expected = components * self.n_dofs();
        if v.len() != expected {
            return Err(Error::LayoutMismatch {
                expected,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Element containing a physical point and the reference coordinates there.
    pub fn locate(&self, x: f64, z: f64) -> (usize, f64, f64) {
        let m = &self.mesh;
        let ex = ((x / m.hx()).floor().max(0.0) as usize).min(m.nx() - 1);
        let ez = ((z / m.hz()).floor().max(0.0) as usize).min(m.nz() - 1);
        let e = m.element_index(ex, ez);
        let (x0, z0) = m.element_origin(e);
        let xi = (2.0 * (x - x0) / m.hx() - 1.0).clamp(-1.0, 1.0);
        let eta = (2.0 * (z - z0) / m.hz() - 1.0).clamp(-1.0, 1.0);
        (e, xi, eta)
    }

    /// Evaluates the nodal expansion of a scalar field inside `element` at
    /// reference coordinates `(xi, eta)`.
    pub fn eval_at_point(&self, field: &[f64], element: usize, xi: f64, eta: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&xi) || !(-1.0..=1.0).contains(&eta) {
            return Err(Error::OutsideReferenceElement(xi, eta));
        }
        self.check_len(field, 1)?;
        let lx = self.basis.lagrange_values(xi);
        let lz = self.basis.lagrange_values(eta);
        Ok(self.contract(field, element, &lx, &lz))
    }

    /// `sum_{i,j} lx[i] lz[j] q(e, i, j)`.
    pub(crate) fn contract(&self, field: &[f64], element: usize, lx: &[f64], lz: &[f64]) -> f64 {
        let n1 = self.n1();
        let base = self.layout.index(element, 0, 0);
        let mut acc = 0.0;
        for j in 0..n1 {
            let row = &field[base + j * n1..base + (j + 1) * n1];
            let mut s = 0.0;
            for i in 0..n1 {
                s += lx[i] * row[i];
            }
            acc += lz[j] * s;
        }
        acc
    }

    /// Nodal values of `d/dx` of the local polynomial (exact for the interpolant).
    pub fn x_derivative(&self, field: &[f64]) -> Vec<f64> {
        let n1 = self.n1();
        let scale = 2.0 / self.mesh.hx();
        let d = self.basis.diff_matrix();
        let mut out = vec![0.0; field.len()];
        for (row_in, row_out) in field.chunks_exact(n1).zip(out.chunks_exact_mut(n1)) {
            for i in 0..n1 {
                let mut s = 0.0;
                for a in 0..n1 {
                    s += d[i * n1 + a] * row_in[a];
                }
                row_out[i] = scale * s;
            }
        }
        out
    }

    /// Nodal interpolation of a function of position.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.x.iter().zip(&self.z).map(|(&x, &z)| f(x, z)).collect()
    }
}
