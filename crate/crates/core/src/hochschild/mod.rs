//! Low-degree Hochschild cochains with operator coefficients.
//!
//! Cochains are evaluators over lists of operators rather than stored tensors;
//! only [`TableCochain`] stores values, and only over small matrix algebras.

mod classes;
mod presentation;
pub mod probes;
mod sparse;
mod table;

use thiserror::Error;

use crate::functions::FunctionError;
use crate::operators::{commutator, BandOperator, OperatorError, C64};

pub use classes::{
    cup_derivations, hh0_family, hh0_window, odd_cocycle, outer_class, outer_class_family, witness_leakage,
    CupProduct, Hh0Verdict, Hh0Window, OddCocycle, OuterClass, OuterFamily, ODD_ARITY_CAP,
};
pub use presentation::{
    commutant_dimension, leibniz_check, matrix_unit_basis, solve_inner, solve_inner_with, standard_generators,
    DerivationPresentation, InnerSolution, LeibnizConfig, LeibnizReport, OperatorDoc, PresentationDoc,
    SolveConfig, SparseOperatorDoc,
};
pub use sparse::SparseOp;
pub use table::TableCochain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HochschildError {
    #[error("cochain of degree {degree} expects {expected} arguments, got {got}")]
    ArityMismatch { degree: usize, expected: usize, got: usize },
    #[error("degree {degree} exceeds the supported maximum {cap}")]
    ArityCap { degree: usize, cap: usize },
    #[error("generators do not determine the derivation: {0}")]
    UnderdeterminedGenerators(String),
    #[error("presentation admits no consistent linear extension (residual {residual:e})")]
    PresentationInconsistent { residual: f64 },
    #[error("inner solver stopped after {iterations} iterations at relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Function(#[from] FunctionError),
}

/// A multilinear map `A^n -> M` given by a formula.
#[derive(Debug, Clone)]
pub enum Cochain {
    /// Explicit values on tuples of matrix units.
    Table(TableCochain),
    /// Degree 0: the element `m`.
    Constant(BandOperator),
    /// `a ↦ [a, b]`.
    Inner(BandOperator),
    /// `a ↦ [a, f]` for a diagonal `f`.
    CommDeriv(BandOperator),
    /// `(a_1, …, a_{2k}) ↦ a_1⋯a_{2k} f`.
    Product { k: usize, f: BandOperator },
    /// `(a_1, …, a_{2k+1}) ↦ s · a_1⋯a_{2k} [a_{2k+1}, f]`.
    Odd { k: usize, f: BandOperator, sign: f64 },
    /// `(a, b) ↦ [a, f][b, g]`.
    Cup { f: BandOperator, g: BandOperator },
    /// `a ↦ [a, f] g`.
    CupWitness { f: BandOperator, g: BandOperator },
    /// `δ` of another cochain.
    Coboundary(Box<Cochain>),
}

impl Cochain {
    pub fn comm_deriv(f: BandOperator) -> Result<Self, HochschildError> {
        if !f.is_diagonal() {
            return Err(HochschildError::InvalidArgument(
                "commutator derivations need a diagonal operator".into(),
            ));
        }
        Ok(Cochain::CommDeriv(f))
    }

    pub fn coboundary(self) -> Self {
        Cochain::Coboundary(Box::new(self))
    }

    pub fn degree(&self) -> usize {
        match self {
            Cochain::Table(t) => t.degree(),
            Cochain::Constant(_) => 0,
            Cochain::Inner(_) | Cochain::CommDeriv(_) | Cochain::CupWitness { .. } => 1,
            Cochain::Cup { .. } => 2,
            Cochain::Product { k, .. } => 2 * k,
            Cochain::Odd { k, .. } => 2 * k + 1,
            Cochain::Coboundary(c) => c.degree() + 1,
        }
    }

    pub fn eval(&self, args: &[BandOperator]) -> Result<BandOperator, HochschildError> {
        let degree = self.degree();
        if args.len() != degree {
            return Err(HochschildError::ArityMismatch {
                degree,
                expected: degree,
                got: args.len(),
            });
        }
        if let Some(first) = args.first() {
            if let Some(bad) = args.iter().find(|a| a.dim() != first.dim()) {
                return Err(OperatorError::DimensionMismatch {
                    left: first.dim(),
                    right: bad.dim(),
                }
                .into());
            }
        }
        self.eval_unchecked(args)
    }

    fn eval_unchecked(&self, args: &[BandOperator]) -> Result<BandOperator, HochschildError> {
        Ok(match self {
            Cochain::Table(t) => t.eval(args)?,
            Cochain::Constant(m) => m.clone(),
            Cochain::Inner(b) | Cochain::CommDeriv(b) => commutator(&args[0], b)?,
            Cochain::Product { f, .. } => product(args)?.try_mul(f)?,
            Cochain::Odd { k, f, sign } => {
                let head = product(&args[..2 * k])?;
                let tail = commutator(&args[2 * k], f)?;
                head.try_mul(&tail)?.scale(C64::new(*sign, 0.0))
            }
            Cochain::Cup { f, g } => commutator(&args[0], f)?.try_mul(&commutator(&args[1], g)?)?,
            Cochain::CupWitness { f, g } => commutator(&args[0], f)?.try_mul(g)?,
            Cochain::Coboundary(c) => delta(c, args)?,
        })
    }
}

fn product(args: &[BandOperator]) -> Result<BandOperator, OperatorError> {
    let (first, rest) = args
        .split_first()
        .ok_or_else(|| OperatorError::InvalidArgument("empty product".into()))?;
    rest.iter().try_fold(first.clone(), |acc, a| acc.try_mul(a))
}

/// The Hochschild differential
/// `δφ(a_1, …, a_{n+1}) = a_1 φ(a_2, …) + Σ_{i=1}^{n} (-1)^i φ(…, a_i a_{i+1}, …)
///  + (-1)^{n+1} φ(a_1, …, a_n) a_{n+1}`.
pub fn delta(c: &Cochain, args: &[BandOperator]) -> Result<BandOperator, HochschildError> {
    let n = c.degree();
    if args.len() != n + 1 {
        return Err(HochschildError::ArityMismatch {
            degree: n + 1,
            expected: n + 1,
            got: args.len(),
        });
    }
    let mut total = args[0].try_mul(&c.eval(&args[1..])?)?;
    let mut merged: Vec<BandOperator> = Vec::with_capacity(n);
    for i in 0..n {
        merged.clear();
        merged.extend_from_slice(&args[..i]);
        merged.push(args[i].try_mul(&args[i + 1])?);
        merged.extend_from_slice(&args[i + 2..]);
        let term = c.eval(&merged)?;
        total = if i % 2 == 0 { &total - &term } else { &total + &term };
    }
    let last = c.eval(&args[..n])?.try_mul(&args[n])?;
    Ok(if n % 2 == 0 { &total - &last } else { &total + &last })
}

/// Largest Frobenius norm of `δc` over the given argument tuples.
pub fn cocycle_residual(c: &Cochain, tuples: &[Vec<BandOperator>]) -> Result<f64, HochschildError> {
    use rayon::prelude::*;
    tuples
        .par_iter()
        .map(|args| delta(c, args).map(|v| v.frobenius()))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

#[cfg(test)]
mod tests {
    use super::probes::{random_dense, random_tuples};
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn degree_zero_coboundary_is_a_commutator() {
        let m = BandOperator::from_fn(3, |x, y| c((x * 3 + y) as f64));
        let a = BandOperator::from_fn(3, |x, y| c(if x == y { 1.0 } else { 0.5 * y as f64 }));
        let d = delta(&Cochain::Constant(m.clone()), &[a.clone()]).unwrap();
        let expected = &a.try_mul(&m).unwrap() - &m.try_mul(&a).unwrap();
        assert!((&d - &expected).frobenius() < 1e-14);
    }

    #[test]
    fn inner_derivations_are_cocycles() {
        let b = random_dense(5, &mut probes::rng(3, 0));
        let tuples = random_tuples(|rng| random_dense(5, rng), 2, 20, 7);
        let res = cocycle_residual(&Cochain::Inner(b), &tuples).unwrap();
        assert!(res <= 1e-12, "{res}");
    }

    #[test]
    fn arity_is_checked() {
        let c = Cochain::Inner(BandOperator::identity(2));
        assert!(matches!(
            c.eval(&[]),
            Err(HochschildError::ArityMismatch { expected: 1, got: 0, .. })
        ));
        assert!(delta(&c, &[BandOperator::identity(2)]).is_err());
        assert!(c
            .eval(&[BandOperator::identity(3)])
            .is_err());
    }

    #[test]
    fn cup_coboundary_sign_by_hand() {
        // δψ(a, b) = a[b,f]g − [ab,f]g + [a,f]gb = −[a,f][b,g]
        let f = BandOperator::diagonal(&[c(1.0), c(-2.0), c(0.5)]);
        let g = BandOperator::diagonal(&[c(0.0), c(3.0), c(1.0)]);
        let a = BandOperator::from_fn(3, |x, y| c((x + 2 * y) as f64 - 1.5));
        let b = BandOperator::from_fn(3, |x, y| c((x * y) as f64 * 0.25 + 1.0));
        let witness = Cochain::CupWitness { f: f.clone(), g: g.clone() };
        let d = delta(&witness, &[a.clone(), b.clone()]).unwrap();
        let cup = Cochain::Cup { f, g }.eval(&[a, b]).unwrap();
        assert!((&d + &cup).frobenius() < 1e-12);
    }

    #[test]
    fn odd_cochain_is_the_coboundary_of_the_product() {
        let f = BandOperator::diagonal(&[c(0.3), c(-1.0), c(2.0), c(0.0)]);
        let product = Cochain::Product { k: 1, f: f.clone() };
        let odd = Cochain::Odd { k: 1, f, sign: 1.0 };
        for args in random_tuples(|rng| random_dense(4, rng), 3, 10, 1) {
            let lhs = delta(&product, &args).unwrap();
            let rhs = odd.eval(&args).unwrap();
            assert!((&lhs - &rhs).frobenius() < 1e-12);
        }
    }
}
