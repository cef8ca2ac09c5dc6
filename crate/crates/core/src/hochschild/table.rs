//! Cochains over `M_k` stored by their values on tuples of matrix units.

use rand::Rng;

use super::{probes, HochschildError};
use crate::operators::{BandOperator, C64};

/// Largest matrix size for stored cochains.
pub const MAX_TABLE_SIZE: usize = 4;
const MAX_TABLE_DEGREE: usize = 4;

/// Values `φ(E_{u_1}, …, E_{u_n})` for all tuples of matrix units of `M_k`,
/// the unit `E_{ij}` numbered `i * k + j`.
#[derive(Debug, Clone)]
pub struct TableCochain {
    size: usize,
    degree: usize,
    values: Vec<BandOperator>,
}

impl TableCochain {
    pub fn new(size: usize, degree: usize, values: Vec<BandOperator>) -> Result<Self, HochschildError> {
        if size == 0 || size > MAX_TABLE_SIZE {
            return Err(HochschildError::InvalidArgument(format!(
                "tables cover M_1 to M_{MAX_TABLE_SIZE}, not M_{size}"
            )));
        }
        if degree > MAX_TABLE_DEGREE {
            return Err(HochschildError::ArityCap {
                degree,
                cap: MAX_TABLE_DEGREE,
            });
        }
        let expected = (size * size).pow(degree as u32);
        if values.len() != expected || values.iter().any(|v| v.dim() != size) {
            return Err(HochschildError::InvalidArgument(format!(
                "expected {expected} values of size {size}"
            )));
        }
        Ok(TableCochain { size, degree, values })
    }

    pub fn random(size: usize, degree: usize, seed: u64) -> Result<Self, HochschildError> {
        let count = (size * size).pow(degree as u32);
        let mut rng = probes::rng(seed, 0);
        let values = (0..count)
            .map(|_| {
                BandOperator::from_fn(size, |_, _| {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                })
            })
            .collect();
        TableCochain::new(size, degree, values)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn units(&self) -> usize {
        self.size * self.size
    }

    /// Matrix unit number `u`.
    pub fn unit(&self, u: usize) -> BandOperator {
        BandOperator::matrix_unit(self.size, u / self.size, u % self.size)
    }

    pub fn value(&self, tuple: &[usize]) -> &BandOperator {
        let index = tuple.iter().fold(0, |acc, &u| acc * self.units() + u);
        &self.values[index]
    }

    /// Multilinear expansion over the nonzero entries of the arguments.
    pub fn eval(&self, args: &[BandOperator]) -> Result<BandOperator, HochschildError> {
        if args.iter().any(|a| a.dim() != self.size) {
            return Err(HochschildError::InvalidArgument(format!(
                "arguments must be {0}x{0}",
                self.size
            )));
        }
        let expansions: Vec<Vec<(usize, C64)>> = args
            .iter()
            .map(|a| a.nonzeros().map(|(i, j, v)| (i * self.size + j, v)).collect())
            .collect();
        let mut total = nalgebra::DMatrix::from_element(self.size, self.size, C64::new(0.0, 0.0));
        let mut stack = vec![(0usize, 0usize, C64::new(1.0, 0.0))];
        while let Some((depth, index, coeff)) = stack.pop() {
            if depth == args.len() {
                total += self.values[index].matrix() * coeff;
                continue;
            }
            for &(u, v) in &expansions[depth] {
                stack.push((depth + 1, index * self.units() + u, coeff * v));
            }
        }
        Ok(BandOperator::from_matrix(total)?)
    }

    /// `δφ` materialised on unit tuples.
    pub fn coboundary(&self) -> Result<TableCochain, HochschildError> {
        if self.degree + 1 > MAX_TABLE_DEGREE {
            return Err(HochschildError::ArityCap {
                degree: self.degree + 1,
                cap: MAX_TABLE_DEGREE,
            });
        }
        let c = super::Cochain::Table(self.clone());
        let count = self.units().pow(self.degree as u32 + 1);
        let values = (0..count)
            .map(|index| super::delta(&c, &self.unit_tuple(index, self.degree + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        TableCochain::new(self.size, self.degree + 1, values)
    }

    /// The `index`-th tuple of `len` matrix units.
    pub fn unit_tuple(&self, mut index: usize, len: usize) -> Vec<BandOperator> {
        let mut units = vec![0; len];
        for slot in units.iter_mut().rev() {
            *slot = index % self.units();
            index /= self.units();
        }
        units.into_iter().map(|u| self.unit(u)).collect()
    }

    /// Largest Frobenius norm of `δδφ` over every tuple of matrix units.
    pub fn exhaustive_delta_squared(&self) -> Result<f64, HochschildError> {
        use rayon::prelude::*;
        let once = super::Cochain::Table(self.coboundary()?);
        let len = self.degree + 2;
        let count = self.units().pow(len as u32);
        (0..count)
            .into_par_iter()
            .map(|index| super::delta(&once, &self.unit_tuple(index, len)).map(|v| v.frobenius()))
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
    }
}
