use alloc::vec;
use alloc::vec::Vec;

/// dense row-major integer array; a scalar has an empty shape and one element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<i64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<i64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "tensor size mismatch");
        Tensor { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![0; shape.iter().product()] }
    }

    pub fn scalar(v: i64) -> Self {
        Tensor { shape: Vec::new(), data: vec![v] }
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// linear offset of an in-bounds index, or none when any component is out of bounds.
    pub fn offset(&self, idx: &[i64]) -> Option<usize> {
        linear_index(&self.shape, idx)
    }

    /// element at `idx`; out-of-bounds positions read as zero.
    pub fn get(&self, idx: &[i64]) -> i64 {
        self.offset(idx).map_or(0, |o| self.data[o])
    }

    pub fn set(&mut self, idx: &[usize], v: i64) {
        let idx: Vec<i64> = idx.iter().map(|&i| i as i64).collect();
        let o = self.offset(&idx).expect("index in bounds");
        self.data[o] = v;
    }
}

/// row-major linear index of `idx` in `shape`, none when out of bounds.
pub fn linear_index(shape: &[usize], idx: &[i64]) -> Option<usize> {
    if shape.len() != idx.len() {
        return None;
    }
    let mut o = 0usize;
    for (&e, &i) in shape.iter().zip(idx) {
        if i < 0 || i as usize >= e {
            return None;
        }
        o = o * e + i as usize;
    }
    Some(o)
}

/// inverse of [`linear_index`].
pub fn unlinear(shape: &[usize], mut o: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = o % shape[k];
        o /= shape[k];
    }
    idx
}

/// every index of `shape` in row-major order.
pub fn positions(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let n: usize = shape.iter().product();
    (0..n).map(move |o| unlinear(shape, o))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oob_reads_zero() {
        let t = Tensor::new(vec![2, 2], vec![1, 2, 3, 4]);
        assert_eq!(t.get(&[1, 0]), 3);
        assert_eq!(t.get(&[2, 0]), 0);
        assert_eq!(t.get(&[0, -1]), 0);
    }

    #[test]
    fn unlinear_roundtrip() {
        let shape = [3, 4, 2];
        for (o, p) in positions(&shape).enumerate() {
            let p: Vec<i64> = p.iter().map(|&x| x as i64).collect();
            assert_eq!(linear_index(&shape, &p), Some(o));
        }
    }
}
