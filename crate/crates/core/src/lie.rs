//! Matrix Lie-algebra primitives for a pluggable group description.
//!
//! The generic layer computes in a fixed orthonormal basis of the algebra:
//! velocities are coordinate vectors ([`AlgebraVec`]), momenta are
//! coordinate vectors of linear functionals ([`CoalgebraVec`]), and the
//! adjoint family of operators becomes small dense matrices. With an
//! orthonormal basis every dual operator is the transpose of its primal,
//! which keeps the coadjoint formulas free of metric bookkeeping.
//!
//! [`GroupDescription::so3`] is the canonical instance;
//! [`GroupDescription::special_orthogonal`] covers SO(n). Other matrix
//! groups plug in a basis plus membership/exp/retract/inverse maps via
//! [`GroupDescription::new`].

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use std::ops::{Add, Neg, Sub};
use thiserror::Error;

/// Default distance-to-group tolerance for membership tests.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Orthonormality and bracket-closure tolerance for basis validation.
const BASIS_TOL: f64 = 1e-12;

/// Skew-symmetry tolerance accepted by [`vee`].
const SKEW_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LieError {
    #[error("algebra basis is not orthonormal under the Frobenius product (residual {0:.3e})")]
    BasisNotOrthonormal(f64),
    #[error("algebra basis is not closed under the matrix commutator (residual {0:.3e})")]
    BasisNotClosed(f64),
    #[error("basis matrices must be square and share one shape")]
    BasisShape,
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    WrongShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix fails the group membership test")]
    NotOnGroup,
    #[error("matrix is not skew-symmetric (residual {0:.3e})")]
    NotSkew(f64),
    #[error("value contains a non-finite entry")]
    NonFinite,
}

/// Membership test: whether `mat` lies on the group within `tol`.
pub type MembershipFn = fn(&DMatrix<f64>, f64) -> bool;
/// Exponential: maps the matrix form of an algebra element into the group.
pub type ExpFn = fn(&DMatrix<f64>) -> DMatrix<f64>;
/// Retraction: nearest group element to an ambient matrix, when defined.
pub type RetractFn = fn(&DMatrix<f64>) -> Option<DMatrix<f64>>;
/// Group inverse in matrix form.
pub type InverseFn = fn(&DMatrix<f64>) -> DMatrix<f64>;

/// Everything the generic layer needs to compute with one matrix Lie
/// group: an orthonormal basis `E_1..E_n` of the algebra inside
/// ℝ^{m×m}, a membership test with its tolerance, and the group maps.
#[derive(Clone, Debug)]
pub struct GroupDescription {
    dim_matrix: usize,
    dim_algebra: usize,
    basis: Vec<DMatrix<f64>>,
    membership_tol: f64,
    membership: MembershipFn,
    exp: ExpFn,
    retract: RetractFn,
    inverse: InverseFn,
}

impl GroupDescription {
    /// Builds a description from an algebra basis and the group maps,
    /// validating that the basis is orthonormal under the Frobenius
    /// product and closed under the matrix commutator.
    pub fn new(
        basis: Vec<DMatrix<f64>>,
        membership_tol: f64,
        membership: MembershipFn,
        exp: ExpFn,
        retract: RetractFn,
        inverse: InverseFn,
    ) -> Result<Self, LieError> {
        if basis.is_empty() {
            return Err(LieError::BasisShape);
        }
        let m = basis[0].nrows();
        if basis.iter().any(|e| e.nrows() != m || e.ncols() != m) {
            return Err(LieError::BasisShape);
        }
        let n = basis.len();

        let mut ortho_residual = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho_residual =
                    ortho_residual.max((frobenius(&basis[i], &basis[j]) - target).abs());
            }
        }
        if ortho_residual >= BASIS_TOL {
            return Err(LieError::BasisNotOrthonormal(ortho_residual));
        }

        let desc = Self {
            dim_matrix: m,
            dim_algebra: n,
            basis,
            membership_tol,
            exp,
            membership,
            retract,
            inverse,
        };

        // Closure under the bracket: [E_i, E_j] must expand exactly in the basis.
        let mut closure_residual = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let bracket = &desc.basis[i] * &desc.basis[j] - &desc.basis[j] * &desc.basis[i];
                let projected = desc.project_algebra(&bracket).matrix(&desc);
                closure_residual = closure_residual.max((bracket - projected).norm());
            }
        }
        if closure_residual >= BASIS_TOL {
            return Err(LieError::BasisNotClosed(closure_residual));
        }
        Ok(desc)
    }

    /// The rotation group SO(3) with the orthonormal basis `hat(e_i)/sqrt(2)`
    /// and the closed-form (Rodrigues) exponential.
    pub fn so3() -> Self {
        let basis = (0..3)
            .map(|i| {
                let mut axis = Vector3::zeros();
                axis[i] = 1.0 / std::f64::consts::SQRT_2;
                let h = hat(&axis);
                DMatrix::from_fn(3, 3, |r, c| h[(r, c)])
            })
            .collect();
        Self::new(
            basis,
            DEFAULT_MEMBERSHIP_TOL,
            orthogonal_membership,
            so3_matrix_exp,
            polar_retract,
            transpose_inverse,
        )
        .expect("so3 basis is orthonormal and closed")
    }

    /// SO(n) with the pair basis `(e_i e_j^T - e_j e_i^T)/sqrt(2)`, generic
    /// scaling-and-squaring exponential, polar retraction and transpose
    /// inverse.
    pub fn special_orthogonal(n: usize) -> Self {
        assert!(n >= 2, "special_orthogonal needs n >= 2");
        let mut basis = Vec::with_capacity(n * (n - 1) / 2);
        let inv_sqrt2 = 1.0 / std::f64::consts::SQRT_2;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = inv_sqrt2;
                e[(j, i)] = -inv_sqrt2;
                basis.push(e);
            }
        }
        Self::new(
            basis,
            DEFAULT_MEMBERSHIP_TOL,
            orthogonal_membership,
            pade_matrix_exp,
            polar_retract,
            transpose_inverse,
        )
        .expect("so(n) basis is orthonormal and closed")
    }

    /// Ambient matrix size m.
    pub fn dim_matrix(&self) -> usize {
        self.dim_matrix
    }

    /// Algebra dimension n.
    pub fn dim_algebra(&self) -> usize {
        self.dim_algebra
    }

    /// The orthonormal basis matrices.
    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// Distance-to-group tolerance used by the membership test.
    pub fn membership_tol(&self) -> f64 {
        self.membership_tol
    }

    /// Whether `mat` passes the group membership test.
    pub fn is_on_group(&self, mat: &DMatrix<f64>) -> bool {
        mat.nrows() == self.dim_matrix
            && mat.ncols() == self.dim_matrix
            && (self.membership)(mat, self.membership_tol)
    }

    /// The m×m identity matrix.
    pub fn identity_matrix(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim_matrix, self.dim_matrix)
    }

    /// Orthogonal projection of an ambient matrix onto the algebra,
    /// returned in basis coordinates.
    pub fn project_algebra(&self, mat: &DMatrix<f64>) -> AlgebraVec {
        assert_eq!(
            mat.shape(),
            (self.dim_matrix, self.dim_matrix),
            "project_algebra: ambient shape mismatch"
        );
        AlgebraVec::new(DVector::from_fn(self.dim_algebra, |i, _| {
            frobenius(&self.basis[i], mat)
        }))
    }

    pub(crate) fn retract(&self, mat: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        (self.retract)(mat)
    }

    pub(crate) fn exp_matrix(&self, mat: &DMatrix<f64>) -> DMatrix<f64> {
        (self.exp)(mat)
    }

    pub(crate) fn inverse_matrix(&self, mat: &DMatrix<f64>) -> DMatrix<f64> {
        (self.inverse)(mat)
    }
}

/// An element of the configuration group, stored as its m×m matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    mat: DMatrix<f64>,
}

impl GroupElement {
    /// Wraps a matrix after checking group membership.
    pub fn new(mat: DMatrix<f64>, desc: &GroupDescription) -> Result<Self, LieError> {
        if mat.nrows() != desc.dim_matrix() || mat.ncols() != desc.dim_matrix() {
            return Err(LieError::WrongShape {
                expected: desc.dim_matrix(),
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if !desc.is_on_group(&mat) {
            return Err(LieError::NotOnGroup);
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix the caller guarantees to be on the group.
    pub fn from_matrix_unchecked(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    /// The group identity.
    pub fn identity(desc: &GroupDescription) -> Self {
        Self {
            mat: desc.identity_matrix(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    /// Group inverse via the description's inverse map.
    pub fn inverse(&self, desc: &GroupDescription) -> Self {
        Self {
            mat: desc.inverse_matrix(&self.mat),
        }
    }

    /// Group product `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat * &other.mat,
        }
    }
}

/// An algebra element in orthonormal-basis coordinates; the matrix form
/// is `sum_i coords_i E_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraVec {
    coords: DVector<f64>,
}

/// A linear functional on the algebra, as coordinates in the dual of the
/// orthonormal basis: pairing with an [`AlgebraVec`] is the dot product
/// of coordinate vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CoalgebraVec {
    coords: DVector<f64>,
}

macro_rules! coord_vector_impl {
    ($name:ident) => {
        impl $name {
            pub fn new(coords: DVector<f64>) -> Self {
                Self { coords }
            }

            pub fn from_slice(coords: &[f64]) -> Self {
                Self {
                    coords: DVector::from_column_slice(coords),
                }
            }

            pub fn zeros(dim: usize) -> Self {
                Self {
                    coords: DVector::zeros(dim),
                }
            }

            pub fn coords(&self) -> &DVector<f64> {
                &self.coords
            }

            pub fn dim(&self) -> usize {
                self.coords.len()
            }

            pub fn norm(&self) -> f64 {
                self.coords.norm()
            }

            pub fn scale(&self, factor: f64) -> Self {
                Self {
                    coords: &self.coords * factor,
                }
            }

            pub fn is_finite(&self) -> bool {
                self.coords.iter().all(|x| x.is_finite())
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name {
                    coords: self.coords + rhs.coords,
                }
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                $name {
                    coords: &self.coords + &rhs.coords,
                }
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name {
                    coords: self.coords - rhs.coords,
                }
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                $name {
                    coords: &self.coords - &rhs.coords,
                }
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name {
                    coords: -self.coords,
                }
            }
        }
    };
}

coord_vector_impl!(AlgebraVec);
coord_vector_impl!(CoalgebraVec);

impl AlgebraVec {
    /// Matrix form `sum_i coords_i E_i`.
    pub fn matrix(&self, desc: &GroupDescription) -> DMatrix<f64> {
        assert_eq!(self.dim(), desc.dim_algebra(), "algebra dimension mismatch");
        let mut out = DMatrix::zeros(desc.dim_matrix(), desc.dim_matrix());
        for (c, e) in self.coords.iter().zip(desc.basis()) {
            out += e * *c;
        }
        out
    }

    /// The functional `<self, .>` under the Frobenius pairing; in the
    /// orthonormal basis this is the identity on coordinates.
    pub fn flat(&self) -> CoalgebraVec {
        CoalgebraVec::new(self.coords.clone())
    }
}

impl CoalgebraVec {
    /// Applies the functional to an algebra element.
    pub fn pair(&self, v: &AlgebraVec) -> f64 {
        assert_eq!(self.dim(), v.dim(), "pairing dimension mismatch");
        self.coords.dot(&v.coords)
    }

    /// The algebra element representing this functional under the
    /// Frobenius pairing; inverse of [`AlgebraVec::flat`].
    pub fn sharp(&self) -> AlgebraVec {
        AlgebraVec::new(self.coords.clone())
    }
}

/// The skew-symmetric map on ℝ³: `hat(v) * u == v × u`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

/// Inverse of [`hat`]; the input must be skew-symmetric to 1e-10.
pub fn vee(m: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
    let residual = (m + m.transpose()).norm();
    if residual >= SKEW_TOL {
        return Err(LieError::NotSkew(residual));
    }
    Ok(Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// Frobenius inner product `tr(A^T B)`.
///
/// Panics on shape mismatch.
pub fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "frobenius: shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Orthogonal projection onto the algebra, in basis coordinates.
pub fn project_algebra(desc: &GroupDescription, mat: &DMatrix<f64>) -> AlgebraVec {
    desc.project_algebra(mat)
}

/// Group exponential of an algebra element.
pub fn group_exp(desc: &GroupDescription, u: &AlgebraVec) -> GroupElement {
    let mat = desc.exp_matrix(&u.matrix(desc));
    debug_assert!(desc.is_on_group(&mat), "exponential left the group");
    GroupElement::from_matrix_unchecked(mat)
}

/// Adjoint action `Ad_X u = X u X^{-1}` in coordinates.
pub fn adjoint(desc: &GroupDescription, x: &GroupElement, u: &AlgebraVec) -> AlgebraVec {
    let x_inv = desc.inverse_matrix(x.matrix());
    desc.project_algebra(&(x.matrix() * u.matrix(desc) * x_inv))
}

/// The n×n coordinate matrix of `Ad_X`.
pub fn adjoint_matrix(desc: &GroupDescription, x: &GroupElement) -> DMatrix<f64> {
    let n = desc.dim_algebra();
    let x_inv = desc.inverse_matrix(x.matrix());
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = x.matrix() * &desc.basis()[j] * &x_inv;
        for i in 0..n {
            out[(i, j)] = frobenius(&desc.basis()[i], &col);
        }
    }
    out
}

/// Coadjoint action `Ad*_X p`, the dual of [`adjoint`]: its coordinate
/// matrix is the transpose of the adjoint matrix.
pub fn co_adjoint(desc: &GroupDescription, x: &GroupElement, p: &CoalgebraVec) -> CoalgebraVec {
    CoalgebraVec::new(adjoint_matrix(desc, x).transpose() * p.coords())
}

/// Algebra bracket `ad_u v = uv - vu` in coordinates.
pub fn ad(desc: &GroupDescription, u: &AlgebraVec, v: &AlgebraVec) -> AlgebraVec {
    let um = u.matrix(desc);
    let vm = v.matrix(desc);
    desc.project_algebra(&(&um * &vm - vm * um))
}

/// The n×n coordinate matrix of `ad_u`.
pub fn ad_matrix(desc: &GroupDescription, u: &AlgebraVec) -> DMatrix<f64> {
    let n = desc.dim_algebra();
    let um = u.matrix(desc);
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = &um * &desc.basis()[j] - &desc.basis()[j] * &um;
        for i in 0..n {
            out[(i, j)] = frobenius(&desc.basis()[i], &col);
        }
    }
    out
}

/// Coadjoint operator `ad*_u p`, the dual of [`ad`].
pub fn co_ad(desc: &GroupDescription, u: &AlgebraVec, p: &CoalgebraVec) -> CoalgebraVec {
    CoalgebraVec::new(ad_matrix(desc, u).transpose() * p.coords())
}

/// Membership test for SO(n): `||Q^T Q - I|| < tol` and `det(Q) > 0`.
pub fn orthogonal_membership(mat: &DMatrix<f64>, tol: f64) -> bool {
    let n = mat.nrows();
    if mat.ncols() != n || mat.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let gram_defect = (mat.transpose() * mat - DMatrix::identity(n, n)).norm();
    gram_defect < tol && mat.determinant() > 0.0
}

/// Nearest proper-rotation factor of an ambient matrix via the polar
/// decomposition. Returns `None` when the polar factor is singular
/// (rank-deficient input).
pub fn polar_retract(mat: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let svd = mat.clone().svd(true, true);
    let mut u = svd.u?;
    let v_t = svd.v_t?;
    let largest = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let smallest = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(largest > 0.0) || !(smallest > 1e-14 * largest) {
        return None;
    }
    if (&u * &v_t).determinant() < 0.0 {
        // Flip the column belonging to the smallest singular value.
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty singular values");
        for i in 0..u.nrows() {
            u[(i, k)] = -u[(i, k)];
        }
    }
    Some(u * v_t)
}

/// Transpose as the group inverse (orthogonal groups).
pub fn transpose_inverse(mat: &DMatrix<f64>) -> DMatrix<f64> {
    mat.transpose()
}

/// Group inverse by LU factorisation, for groups where the transpose is
/// not the inverse.
pub fn lu_inverse(mat: &DMatrix<f64>) -> DMatrix<f64> {
    mat.clone()
        .try_inverse()
        .expect("group element must be invertible")
}

/// Scaling-and-squaring matrix exponential (nalgebra's Pade-based `exp`).
pub fn pade_matrix_exp(mat: &DMatrix<f64>) -> DMatrix<f64> {
    mat.exp()
}

/// Rodrigues rotation from an axis-angle vector.
pub fn rotation_exp(axis_angle: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = axis_angle.norm_squared();
    let k = hat(axis_angle);
    if theta2 < 1e-24 {
        Matrix3::identity() + k + k * k * 0.5
    } else {
        let theta = theta2.sqrt();
        Matrix3::identity() + k * (theta.sin() / theta) + k * k * ((1.0 - theta.cos()) / theta2)
    }
}

fn so3_matrix_exp(mat: &DMatrix<f64>) -> DMatrix<f64> {
    // Matrix forms arriving here are skew by construction; average out
    // rounding asymmetry instead of re-checking.
    let v = Vector3::new(
        0.5 * (mat[(2, 1)] - mat[(1, 2)]),
        0.5 * (mat[(0, 2)] - mat[(2, 0)]),
        0.5 * (mat[(1, 0)] - mat[(0, 1)]),
    );
    let r = rotation_exp(&v);
    DMatrix::from_fn(3, 3, |i, j| r[(i, j)])
}
