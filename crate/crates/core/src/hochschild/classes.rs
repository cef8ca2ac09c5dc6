//! Outer classes of derivations, `HH^0`, cup products and odd cocycles at
//! window scale.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::presentation::{commutant_dimension, solve_inner, DerivationPresentation, InnerSolution};
use super::{cocycle_residual, delta, Cochain, HochschildError, SparseOp};
use crate::doubled::{DoubledMetric, ExpandingSequence};
use crate::functions::{class_equal, classify, ClassComparison, Classification, ClassifyConfig, FamilyMember, ScalarField};
use crate::operators::{diagonal_split, dyadic_radii, membership_profile, BandOperator, MembershipProfile, C64};

/// Largest cochain degree handled by [`odd_cocycle`].
pub const ODD_ARITY_CAP: usize = 5;

/// Radius at which a window's profile is read: half the natural horizon,
/// and never below one.
fn reading_radius(m: &DoubledMetric) -> f64 {
    ((m.natural_horizon() / 2) as f64).max(1.0)
}

/// Window-scale image of a derivation under `j`.
#[derive(Debug, Clone, Serialize)]
pub struct OuterClass {
    pub solution: InnerSolution,
    /// The diagonal part `b_0` of the implementing operator.
    #[serde(skip)]
    pub representative: ScalarField,
    /// Profile of the off-diagonal part `b_1`.
    pub off_diagonal_profile: MembershipProfile,
    pub reading_radius: f64,
    /// `b_1` lies in the bimodule at the reading radius.
    pub off_diagonal_in_bimodule: bool,
}

/// Solves `d = [·, b]`, splits `b = b_0 + b_1` and returns `b_0` as the class
/// representative. Membership of the values of `d` is not checked here.
pub fn outer_class(d: &DerivationPresentation, m: &DoubledMetric, tol: f64) -> Result<OuterClass, HochschildError> {
    if d.dim() != m.len() {
        return Err(HochschildError::InvalidArgument(format!(
            "presentation on {} points, metric on {}",
            d.dim(),
            m.len()
        )));
    }
    let solution = solve_inner(d)?;
    let (b0, b1) = diagonal_split(&solution.b);
    let r = reading_radius(m);
    let profile = membership_profile(&b1, m, &dyadic_radii(r))?;
    let inside = profile.at(r).is_some_and(|(_, upper)| upper <= tol);
    let representative = ScalarField::from_diagonal(Arc::clone(m.base()), &b0)?;
    Ok(OuterClass {
        solution,
        representative,
        off_diagonal_profile: profile,
        reading_radius: r,
        off_diagonal_in_bimodule: inside,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OuterFamily {
    pub windows: Vec<OuterClass>,
    pub classification: Classification,
    pub versus_zero: ClassComparison,
    /// The class differs from zero across the family.
    pub outer: bool,
}

/// [`outer_class`] on each window of a family, then the verdict on the
/// representatives.
pub fn outer_class_family(
    members: &[(DerivationPresentation, DoubledMetric, ExpandingSequence)],
    cfg: &ClassifyConfig,
    tol: f64,
) -> Result<OuterFamily, HochschildError> {
    let windows: Vec<OuterClass> = members
        .iter()
        .map(|(d, m, _)| outer_class(d, m, tol))
        .collect::<Result<_, _>>()?;
    let family: Vec<FamilyMember> = windows
        .iter()
        .zip(members)
        .map(|(w, (_, _, seq))| FamilyMember {
            field: w.representative.clone(),
            seq: seq.clone(),
        })
        .collect();
    let classification = classify(&family, cfg)?;
    let zeros: Vec<ScalarField> = family
        .iter()
        .map(|m| ScalarField::constant(Arc::clone(m.field.window()), 0.0))
        .collect();
    let versus_zero = class_equal(&family, &zeros, cfg)?;
    Ok(OuterFamily {
        windows,
        classification,
        outer: !versus_zero.equal,
        versus_zero,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Hh0Window {
    /// Dimension of the commutant of the generators.
    pub dimension: usize,
    #[serde(skip)]
    pub basis: Vec<BandOperator>,
    pub identity_profile: MembershipProfile,
    pub reading_radius: f64,
    /// The identity lies in the bimodule at the reading radius.
    pub scalars_in_bimodule: bool,
    /// The identity has an entry of size one beyond the reading radius.
    pub identity_escapes: bool,
}

/// Solves `[g, m] = 0` over the generators and tests whether the scalars
/// belong to the bimodule of `m`.
pub fn hh0_window(generators: &[SparseOp], m: &DoubledMetric, tol: f64) -> Result<Hh0Window, HochschildError> {
    let dimension = commutant_dimension(generators, m.len())?;
    let basis = if dimension == 1 {
        vec![BandOperator::identity(m.len())]
    } else {
        Vec::new()
    };
    let r = reading_radius(m);
    let identity_profile = membership_profile(&BandOperator::identity(m.len()), m, &dyadic_radii(r))?;
    let (lower, upper) = identity_profile.at(r).unwrap_or((1.0, 1.0));
    Ok(Hh0Window {
        dimension,
        basis,
        identity_profile,
        reading_radius: r,
        scalars_in_bimodule: upper <= tol,
        identity_escapes: lower >= 1.0 - tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hh0Verdict {
    /// `HH^0 = C`.
    Scalars,
    /// `HH^0 = 0`.
    Zero,
    Inconclusive,
}

pub fn hh0_family(windows: &[Hh0Window]) -> Hh0Verdict {
    if windows.is_empty() || windows.iter().any(|w| w.dimension != 1) {
        Hh0Verdict::Inconclusive
    } else if windows.iter().all(|w| w.scalars_in_bimodule) {
        Hh0Verdict::Scalars
    } else if windows.iter().all(|w| w.identity_escapes) {
        Hh0Verdict::Zero
    } else {
        Hh0Verdict::Inconclusive
    }
}

/// Compares `c` with `s · other` over probes and reads off `s ∈ {±1}`.
fn matched_sign(
    pairs: &[(BandOperator, BandOperator)],
) -> (Option<i8>, f64) {
    let worst = pairs
        .iter()
        .max_by(|a, b| a.1.frobenius().total_cmp(&b.1.frobenius()));
    let sign = worst.and_then(|(c, other)| {
        if other.frobenius() <= 1e-12 {
            return None;
        }
        let overlap: C64 = c
            .matrix()
            .iter()
            .zip(other.matrix().iter())
            .map(|(x, y)| y.conj() * x)
            .sum();
        Some(if overlap.re >= 0.0 { 1 } else { -1 })
    });
    let s = C64::new(f64::from(sign.unwrap_or(1)), 0.0);
    let residual = pairs
        .iter()
        .map(|(c, other)| (c - &other.scale(s)).frobenius())
        .fold(0.0, f64::max);
    (sign, residual)
}

#[derive(Debug, Clone, Serialize)]
pub struct CupProduct {
    #[serde(skip)]
    pub c2: Cochain,
    #[serde(skip)]
    pub witness: Cochain,
    /// `c2 = sign · δ(witness)`; `None` when every probe of `δ(witness)`
    /// vanishes.
    pub sign: Option<i8>,
    /// Largest `‖c2(a, b) − sign · δψ(a, b)‖` over the probes.
    pub residual: f64,
    /// Largest `‖c2(a, b)‖` over the probes.
    pub largest_value: f64,
    pub probes: usize,
}

/// `c2(a, b) = [a, f][b, g]` against `ψ(a) = [a, f] g`.
pub fn cup_derivations(
    f: &BandOperator,
    g: &BandOperator,
    probes: &[Vec<BandOperator>],
) -> Result<CupProduct, HochschildError> {
    let c2 = Cochain::Cup {
        f: f.clone(),
        g: g.clone(),
    };
    let witness = Cochain::CupWitness {
        f: f.clone(),
        g: g.clone(),
    };
    let values: Vec<(BandOperator, BandOperator)> = probes
        .par_iter()
        .map(|args| Ok((c2.eval(args)?, delta(&witness, args)?)))
        .collect::<Result<_, HochschildError>>()?;
    let (sign, residual) = matched_sign(&values);
    let largest_value = values.iter().map(|v| v.0.frobenius()).fold(0.0, f64::max);
    Ok(CupProduct {
        c2,
        witness,
        sign,
        residual,
        largest_value,
        probes: probes.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OddCocycle {
    #[serde(skip)]
    pub phi: Cochain,
    pub k: usize,
    /// `a_1⋯a_{2k}[a_{2k+1}, f] = sign · δψ` for `ψ = a_1⋯a_{2k} f`.
    pub sign: Option<i8>,
    pub sign_residual: f64,
    /// Largest `‖δφ‖` over the probes.
    pub cocycle_residual: f64,
    pub probes: usize,
}

/// The degree `2k + 1` cochain `φ = s · a_1⋯a_{2k}[a_{2k+1}, f]`, with `s`
/// matched against `δψ`, and its cocycle residual. Probes must have `2k + 2`
/// operators; the first `2k + 1` are used for the sign.
pub fn odd_cocycle(k: usize, f: &BandOperator, probes: &[Vec<BandOperator>]) -> Result<OddCocycle, HochschildError> {
    if k == 0 {
        return Err(HochschildError::InvalidArgument("k must be positive".into()));
    }
    let degree = 2 * k + 1;
    if degree > ODD_ARITY_CAP {
        return Err(HochschildError::ArityCap {
            degree,
            cap: ODD_ARITY_CAP,
        });
    }
    if let Some(bad) = probes.iter().find(|p| p.len() != degree + 1) {
        return Err(HochschildError::ArityMismatch {
            degree: degree + 1,
            expected: degree + 1,
            got: bad.len(),
        });
    }
    let unsigned = Cochain::Odd {
        k,
        f: f.clone(),
        sign: 1.0,
    };
    let psi = Cochain::Product { k, f: f.clone() };
    let pairs: Vec<(BandOperator, BandOperator)> = probes
        .par_iter()
        .map(|args| Ok((unsigned.eval(&args[..degree])?, delta(&psi, &args[..degree])?)))
        .collect::<Result<_, HochschildError>>()?;
    let (sign, sign_residual) = matched_sign(&pairs);
    let phi = Cochain::Odd {
        k,
        f: f.clone(),
        sign: f64::from(sign.unwrap_or(1)),
    };
    let cocycle_residual = cocycle_residual(&phi, probes)?;
    Ok(OddCocycle {
        phi,
        k,
        sign,
        sign_residual,
        cocycle_residual,
        probes: probes.len(),
    })
}

/// Profile of the witness value `ψ(a_1, …, a_{2k}) = a_1⋯a_{2k} f`.
pub fn witness_leakage(
    k: usize,
    f: &BandOperator,
    args: &[BandOperator],
    m: &DoubledMetric,
    radii: &[f64],
) -> Result<MembershipProfile, HochschildError> {
    let value = Cochain::Product { k, f: f.clone() }.eval(args)?;
    Ok(membership_profile(&value, m, radii)?)
}
