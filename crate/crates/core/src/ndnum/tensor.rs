use crate::error::{Error, Result};

/// Dense row-major `f64` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Contract(format!(
                "tensor extents must be positive, got {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape {
                op: "tensor",
                left: shape,
                right: vec![data.len()],
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    /// Builds a `rows x cols` matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Shape {
                op: "from_rows",
                left: vec![cols],
                right: vec![bad.len()],
            });
        }
        Tensor::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() == 2 {
            self.shape[1]
        } else {
            1
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn require_matrix(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            _ => Err(Error::Shape {
                op,
                left: self.shape.clone(),
                right: vec![0, 0],
            }),
        }
    }

    /// `self (n x k) * rhs (k x m)`.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        let (n, k) = self.require_matrix("matmul")?;
        let (k2, m) = rhs.require_matrix("matmul")?;
        if k != k2 {
            return Err(Error::Shape {
                op: "matmul",
                left: self.shape.clone(),
                right: rhs.shape.clone(),
            });
        }
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                let brow = &rhs.data[p * m..(p + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Tensor {
            shape: vec![n, m],
            data: out,
        })
    }

    /// `self (n x m) * rhs^T` where `rhs` is `k x m`.
    pub(crate) fn matmul_nt(&self, rhs: &Tensor) -> Tensor {
        let (n, m) = (self.shape[0], self.shape[1]);
        let k = rhs.shape[0];
        let mut out = vec![0.0; n * k];
        for i in 0..n {
            let arow = &self.data[i * m..(i + 1) * m];
            for j in 0..k {
                let brow = &rhs.data[j * m..(j + 1) * m];
                out[i * k + j] = arow.iter().zip(brow).map(|(a, b)| a * b).sum();
            }
        }
        Tensor {
            shape: vec![n, k],
            data: out,
        }
    }

    /// `self^T * rhs` where `self` is `n x k` and `rhs` is `n x m`.
    pub(crate) fn matmul_tn(&self, rhs: &Tensor) -> Tensor {
        let (n, k) = (self.shape[0], self.shape[1]);
        let m = rhs.shape[1];
        let mut out = vec![0.0; k * m];
        for i in 0..n {
            let brow = &rhs.data[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                let orow = &mut out[p * m..(p + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Tensor {
            shape: vec![k, m],
            data: out,
        }
    }
}

/// Row-wise softmax of a `rows x classes` matrix, computed with max
/// subtraction.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let c = logits.cols();
    let mut data = Vec::with_capacity(logits.numel());
    for i in 0..logits.rows() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        data.extend(exps.iter().map(|e| e / z));
    }
    debug_assert_eq!(data.len(), logits.rows() * c);
    Tensor {
        shape: logits.shape.clone(),
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(vec![0, 2], vec![]).is_err());
    }

    #[test]
    fn matmul_hand_example() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().data(), &[11.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        let msg = a.matmul(&b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3] vs [2, 3]"), "{msg}");
    }

    #[test]
    fn transposed_products_agree_with_plain_matmul() {
        let a = Tensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Tensor::new(vec![4, 3], (0..12).map(f64::from).collect()).unwrap();
        let bt = Tensor::new(
            vec![3, 4],
            (0..3)
                .flat_map(|c| (0..4).map(move |r| (r * 3 + c) as f64))
                .collect(),
        )
        .unwrap();
        assert_eq!(a.matmul_nt(&b), a.matmul(&bt).unwrap());

        let at = Tensor::new(vec![3, 2], vec![1., 4., 2., 5., 3., 6.]).unwrap();
        let c = Tensor::new(vec![2, 2], vec![1., -1., 0.5, 2.]).unwrap();
        assert_eq!(a.matmul_tn(&c), at.matmul(&c).unwrap());
    }

    #[test]
    fn softmax_closed_forms() {
        let p = softmax_rows(&Tensor::from_rows(&[vec![0.0, 0.0], vec![3f64.ln(), 0.0]]).unwrap());
        assert_eq!(p.row(0), &[0.5, 0.5]);
        assert!((p.row(1)[0] - 0.75).abs() < 1e-15);
        assert!((p.row(1)[1] - 0.25).abs() < 1e-15);
    }
}
