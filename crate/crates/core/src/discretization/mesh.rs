//! Structured channel of axis-aligned quadrilaterals, periodic in x and
//! bounded by walls in z.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalFace {
    Left = 0,
    Right = 1,
    Bottom = 2,
    Top = 3,
}

impl LocalFace {
    pub const ALL: [LocalFace; 4] = [
        LocalFace::Left,
        LocalFace::Right,
        LocalFace::Bottom,
        LocalFace::Top,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Outward unit normal `(n_x, n_z)` of this side of the reference element.
    pub fn normal(self) -> [f64; 2] {
        match self {
            LocalFace::Left => [-1.0, 0.0],
            LocalFace::Right => [1.0, 0.0],
            LocalFace::Bottom => [0.0, -1.0],
            LocalFace::Top => [0.0, 1.0],
        }
    }

    /// True for the faces normal to x (their points run along z).
    pub fn is_vertical(self) -> bool {
        matches!(self, LocalFace::Left | LocalFace::Right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Periodic,
    WallBottom,
    WallTop,
}

impl FaceKind {
    pub fn is_wall(self) -> bool {
        matches!(self, FaceKind::WallBottom | FaceKind::WallTop)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceSide {
    pub element: usize,
    pub local: LocalFace,
}

/// A mesh face. `normal` is the outward normal of the `minus` side; wall
/// faces have no `plus` side.
#[derive(Debug, Clone)]
pub struct Face {
    pub minus: FaceSide,
    pub plus: Option<FaceSide>,
    pub normal: [f64; 2],
    pub kind: FaceKind,
}

#[derive(Debug, Clone)]
pub struct ChannelMesh {
    nx: usize,
    nz: usize,
    lx: f64,
    lz: f64,
    hx: f64,
    hz: f64,
    faces: Vec<Face>,
    /// For each element and local face: (face id, is minus side).
    element_faces: Vec<[(usize, bool); 4]>,
}

pub fn build_mesh(nx: usize, nz: usize, lx: f64, lz: f64) -> Result<ChannelMesh> {
    ChannelMesh::new(nx, nz, lx, lz)
}

impl ChannelMesh {
    pub fn new(nx: usize, nz: usize, lx: f64, lz: f64) -> Result<Self> {
        if nx == 0 || nz == 0 {
            return Err(Error::InvalidMesh(format!(
                "element counts must be positive (nx={nx}, nz={nz})"
            )));
        }
        if !(lx > 0.0 && lz > 0.0) || !lx.is_finite() || !lz.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "extents must be positive and finite (Lx={lx}, Lz={lz})"
            )));
        }
        let elem = |ex: usize, ez: usize| ez * nx + ex;
        let mut faces = Vec::with_capacity(nx * nz + nx * (nz + 1));

        for ez in 0..nz {
            for ex in 0..nx {
                faces.push(Face {
                    minus: FaceSide {
                        element: elem(ex, ez),
                        local: LocalFace::Right,
                    },
                    plus: Some(FaceSide {
                        element: elem((ex + 1) % nx, ez),
                        local: LocalFace::Left,
                    }),
                    normal: [1.0, 0.0],
                    kind: if ex + 1 == nx {
                        FaceKind::Periodic
                    } else {
                        FaceKind::Interior
                    },
                });
            }
        }
        for ex in 0..nx {
            faces.push(Face {
                minus: FaceSide {
                    element: elem(ex, 0),
                    local: LocalFace::Bottom,
                },
                plus: None,
                normal: [0.0, -1.0],
                kind: FaceKind::WallBottom,
            });
            for ez in 0..nz - 1 {
                faces.push(Face {
                    minus: FaceSide {
                        element: elem(ex, ez),
                        local: LocalFace::Top,
                    },
                    plus: Some(FaceSide {
                        element: elem(ex, ez + 1),
                        local: LocalFace::Bottom,
                    }),
                    normal: [0.0, 1.0],
                    kind: FaceKind::Interior,
                });
            }
            faces.push(Face {
                minus: FaceSide {
                    element: elem(ex, nz - 1),
                    local: LocalFace::Top,
                },
                plus: None,
                normal: [0.0, 1.0],
                kind: FaceKind::WallTop,
            });
        }

        let mut element_faces = vec![[(usize::MAX, true); 4]; nx * nz];
        for (id, face) in faces.iter().enumerate() {
            element_faces[face.minus.element][face.minus.local.index()] = (id, true);
            if let Some(plus) = face.plus {
                element_faces[plus.element][plus.local.index()] = (id, false);
            }
        }
        debug_assert!(element_faces
            .iter()
            .all(|f| f.iter().all(|&(id, _)| id != usize::MAX)));

        Ok(ChannelMesh {
            nx,
            nz,
            lx,
            lz,
            hx: lx / nx as f64,
            hz: lz / nz as f64,
            faces,
            element_faces,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn lz(&self) -> f64 {
        self.lz
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hz(&self) -> f64 {
        self.hz
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.nz
    }

    pub fn element_index(&self, ex: usize, ez: usize) -> usize {
        ez * self.nx + ex
    }

    /// Column and row of an element.
    pub fn element_coords(&self, e: usize) -> (usize, usize) {
        (e % self.nx, e / self.nx)
    }

    /// Lower-left corner of an element.
    pub fn element_origin(&self, e: usize) -> (f64, f64) {
        let (ex, ez) = self.element_coords(e);
        (ex as f64 * self.hx, ez as f64 * self.hz)
    }

    /// Determinant of the affine map from [-1, 1]^2.
    pub fn jacobian(&self) -> f64 {
        self.hx * self.hz / 4.0
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Face id attached to a local face and whether the element is its minus side.
    pub fn face_of(&self, element: usize, local: LocalFace) -> (usize, bool) {
        self.element_faces[element][local.index()]
    }

    /// The opposite side of a face, `None` on walls.
    pub fn neighbor(&self, side: FaceSide) -> Option<FaceSide> {
        let (id, is_minus) = self.face_of(side.element, side.local);
        let face = &self.faces[id];
        if is_minus {
            face.plus
        } else {
            Some(face.minus)
        }
    }

    /// Faces normal to x (interior and periodic).
    pub fn x_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| f.minus.local.is_vertical())
    }

    /// Faces normal to z (interior and walls).
    pub fn z_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| !f.minus.local.is_vertical())
    }

    /// Minimum element diameter; every element is the same rectangle.
    pub fn min_diameter(&self) -> f64 {
        self.hx.hypot(self.hz)
    }
}

pub fn min_diameter(mesh: &ChannelMesh) -> f64 {
    mesh.min_diameter()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_mesh() {
        let m = build_mesh(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(m.n_elements(), 1);
        let x: Vec<_> = m.x_faces().collect();
        assert_eq!(x.len(), 1);
        assert_eq!(x[0].kind, FaceKind::Periodic);
        assert_eq!(x[0].minus.element, 0);
        assert_eq!(x[0].plus.unwrap().element, 0);
        let walls = m.faces().iter().filter(|f| f.kind.is_wall()).count();
        assert_eq!(walls, 2);
    }

    #[test]
    fn standard_channel_sizes() {
        let m = build_mesh(300, 20, 6.0e6, 1.0e4).unwrap();
        assert_eq!(m.hx(), 20_000.0);
        assert_eq!(m.hz(), 500.0);
    }

    #[test]
    fn three_by_two_face_enumeration() {
        let m = build_mesh(3, 2, 3.0, 2.0).unwrap();
        assert_eq!(m.n_elements(), 6);
        // Brute force: every element has a left and a right side; each side
        // must appear exactly once in the x-face table.
        let mut sides = Vec::new();
        for f in m.x_faces() {
            sides.push(f.minus);
            sides.push(f.plus.unwrap());
        }
        assert_eq!(sides.len(), 12);
        for e in 0..6 {
            for local in [LocalFace::Left, LocalFace::Right] {
                let n = sides
                    .iter()
                    .filter(|s| s.element == e && s.local == local)
                    .count();
                assert_eq!(n, 1);
            }
        }
        let z: Vec<_> = m.z_faces().collect();
        assert_eq!(z.len(), 9);
        assert_eq!(z.iter().filter(|f| f.kind == FaceKind::WallBottom).count(), 3);
        assert_eq!(z.iter().filter(|f| f.kind == FaceKind::WallTop).count(), 3);
        // periodic wrap: right side of column 2 meets left side of column 0
        for ez in 0..2 {
            let side = FaceSide {
                element: m.element_index(2, ez),
                local: LocalFace::Right,
            };
            let nb = m.neighbor(side).unwrap();
            assert_eq!(nb.element, m.element_index(0, ez));
            assert_eq!(nb.local, LocalFace::Left);
        }
    }

    #[test]
    fn opposed_normals_and_involution() {
        let m = build_mesh(4, 3, 8.0, 3.0).unwrap();
        for e in 0..m.n_elements() {
            for local in LocalFace::ALL {
                let side = FaceSide { element: e, local };
                match m.neighbor(side) {
                    Some(nb) => {
                        assert_eq!(m.neighbor(nb), Some(side));
                        let (a, b) = (local.normal(), nb.local.normal());
                        assert_eq!([a[0] + b[0], a[1] + b[1]], [0.0, 0.0]);
                    }
                    None => assert!(!local.is_vertical()),
                }
            }
        }
        for f in m.faces() {
            assert_eq!(f.normal, f.minus.local.normal());
        }
    }

    #[test]
    fn diameters() {
        assert!((build_mesh(1, 1, 1.0, 1.0).unwrap().min_diameter() - 2f64.sqrt()).abs() < 1e-15);
        let m = build_mesh(300, 20, 6.0e6, 1.0e4).unwrap();
        assert!((m.min_diameter() - (20000f64.powi(2) + 500f64.powi(2)).sqrt()).abs() < 1e-9);
        assert!((m.min_diameter() - 20_006.249_023_7).abs() < 1e-3);
        assert_eq!(build_mesh(1, 1, 3.0, 4.0).unwrap().min_diameter(), 5.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_mesh(0, 1, 1.0, 1.0).is_err());
        assert!(build_mesh(1, 0, 1.0, 1.0).is_err());
        assert!(build_mesh(1, 1, 0.0, 1.0).is_err());
        assert!(build_mesh(1, 1, 1.0, -2.0).is_err());
    }

    #[test]
    fn jacobian_constant() {
        let m = build_mesh(2, 2, 4.0, 4.0).unwrap();
        assert_eq!(m.jacobian(), 1.0);
    }
}
