use crate::{Error, Result};

/// A bijection on `0..n`, stored as its forward map.
///
/// `permute` gathers (`out[i] = v[map[i]]`); `ipermute` scatters
/// (`out[map[i]] = v[i]`). The two are inverses and adjoints of each other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &i in &map {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!(
                    "index {i} appears twice in permutation"
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.0.len() {
            return Err(Error::LengthMismatch {
                expected: self.0.len(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    pub fn permute(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(self.0.iter().map(|&i| v[i]).collect())
    }

    pub fn ipermute(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let mut out = vec![0.0; v.len()];
        for (&dst, &x) in self.0.iter().zip(v) {
            out[dst] = x;
        }
        Ok(out)
    }
}
