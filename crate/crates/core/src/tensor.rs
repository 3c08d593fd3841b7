//! Fixed-size 4-dimensional arrays and a labeled dense tensor for reports.

use nalgebra::Matrix4;

pub type Vec4 = [f64; 4];
/// `m[row][col]`; for tetrads row is the upper (coordinate) index.
pub type Mat4 = [[f64; 4]; 4];
pub type Rank3 = [[[f64; 4]; 4]; 4];
pub type Rank4 = [[[[f64; 4]; 4]; 4]; 4];

/// Minkowski signature diag(+1, -1, -1, -1).
pub const ETA: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
];

/// Diagonal entry of the signature.
#[inline]
pub fn eta(i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

pub const IDENTITY: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

pub fn zero3() -> Rank3 {
    [[[0.0; 4]; 4]; 4]
}

pub fn zero4() -> Rank4 {
    [[[[0.0; 4]; 4]; 4]; 4]
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn to_na(a: &Mat4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| a[i][j])
}

pub fn from_na(m: &Matrix4<f64>) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

pub fn det(a: &Mat4) -> f64 {
    to_na(a).determinant()
}

pub fn inverse(a: &Mat4) -> Option<Mat4> {
    to_na(a).try_inverse().map(|m| from_na(&m))
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &Mat4, b: &Vec4) -> Option<Vec4> {
    let rhs = nalgebra::Vector4::from_column_slice(b);
    to_na(a).lu().solve(&rhs).map(|x| [x[0], x[1], x[2], x[3]])
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn mat_max_diff(a: &Mat4, b: &Mat4) -> f64 {
    max_abs((0..16).map(|i| a[i / 4][i % 4] - b[i / 4][i % 4]))
}

/// What an index of a [`TensorValue`] ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexRole {
    Group,
    Spacetime,
    Frame,
    Representation,
}

impl IndexRole {
    pub fn name(self) -> &'static str {
        match self {
            IndexRole::Group => "group",
            IndexRole::Spacetime => "spacetime",
            IndexRole::Frame => "frame",
            IndexRole::Representation => "representation",
        }
    }
}

/// Row-major dense array with one role per index.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorValue {
    pub shape: Vec<usize>,
    pub roles: Vec<IndexRole>,
    pub data: Vec<f64>,
}

impl TensorValue {
    pub fn zeros(shape: &[usize], roles: &[IndexRole]) -> TensorValue {
        assert_eq!(shape.len(), roles.len(), "one role per index");
        TensorValue { shape: shape.to_vec(), roles: roles.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index rank mismatch");
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            assert!(i < n, "index {i} out of range {n}");
            acc * n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn from_mat4(m: &Mat4, roles: [IndexRole; 2]) -> TensorValue {
        let mut t = TensorValue::zeros(&[4, 4], &roles);
        t.data = m.iter().flatten().copied().collect();
        t
    }

    pub fn from_rank3(m: &Rank3, roles: [IndexRole; 3]) -> TensorValue {
        let mut t = TensorValue::zeros(&[4, 4, 4], &roles);
        t.data = m.iter().flatten().flatten().copied().collect();
        t
    }

    /// Nested rows for serialization, innermost index last.
    pub fn nested(&self) -> Nested {
        fn build(data: &[f64], shape: &[usize]) -> Nested {
            match shape {
                [] => Nested::Scalar(data[0]),
                [n, rest @ ..] => {
                    let stride: usize = rest.iter().product();
                    Nested::List((0..*n).map(|i| build(&data[i * stride..(i + 1) * stride], rest)).collect())
                }
            }
        }
        build(&self.data, &self.shape)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Nested {
    Scalar(f64),
    List(Vec<Nested>),
}
