//! Bosonic Fock states carried by arbitrary classical modes.
//!
//! A state is a finite linear combination of creation-operator monomials
//! `coeff * Bdag_{psi_1} ... Bdag_{psi_N} |vac>`. The carrying modes need not
//! be normalized or mutually orthogonal; the commutator
//! `[B_a, Bdag_b] = <a|b>` fixes the whole algebra. Inner products of
//! monomial states close into permanents of the Gram matrix of overlaps,
//! which is evaluated with Ryser's inclusion-exclusion. A literal rewriting
//! oracle evaluates vacuum expectation values of small operator words
//! independently, so the closed form can always be cross-checked.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Mode;
use crate::propagation::{Circuit, FrequencyOperator1D, RailMode};

/// Monomials with more photons than this would need intractable permanents.
pub const PERMANENT_PHOTON_CAP: usize = 20;

/// The rewriting oracle is exponential; keep it a desk-scale tool.
pub const ORACLE_PHOTON_CAP: usize = 6;

/// Coefficients at or below this magnitude are dropped after arithmetic.
const PRUNE_TOL: f64 = 1e-15;

/// Anything that can label a creation operator: it must expose the scalar
/// product of the underlying classical Hilbert space.
pub trait ModeLike: Clone {
    /// `<self|other>`, conjugate-linear in `self`.
    fn overlap(&self, other: &Self) -> Result<Complex64>;

    fn is_zero(&self) -> bool;

    /// Stable content fingerprint; used only to order monomial factors
    /// canonically so that physically equal states compare bit-identically.
    fn content_bits(&self) -> Vec<u64>;
}

impl ModeLike for Mode {
    fn overlap(&self, other: &Self) -> Result<Complex64> {
        self.scalar_product(other)
    }

    fn is_zero(&self) -> bool {
        Mode::is_zero(self)
    }

    fn content_bits(&self) -> Vec<u64> {
        Mode::content_bits(self)
    }
}

impl ModeLike for RailMode {
    fn overlap(&self, other: &Self) -> Result<Complex64> {
        RailMode::overlap(self, other)
    }

    fn is_zero(&self) -> bool {
        RailMode::is_zero(self)
    }

    fn content_bits(&self) -> Vec<u64> {
        RailMode::content_bits(self)
    }
}

/// `coeff * Bdag_{modes[0]} ... Bdag_{modes[N-1]} |vac>`. The factor order is
/// canonical (creation operators commute), never meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<M: ModeLike> {
    coeff: Complex64,
    modes: Vec<M>,
}

impl<M: ModeLike> Monomial<M> {
    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    pub fn modes(&self) -> &[M] {
        &self.modes
    }
}

/// A finite combination of same-photon-number monomials; the empty
/// combination is the zero vector and the empty monomial is the vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState<M: ModeLike> {
    photon_number: usize,
    terms: Vec<Monomial<M>>,
}

/// Build `coeff * Bdag ... Bdag |vac>`. A zero mode anywhere makes the whole
/// monomial the zero vector.
pub fn monomial_state<M: ModeLike>(coeff: Complex64, modes: Vec<M>) -> FockState<M> {
    let photon_number = modes.len();
    if coeff.norm() <= PRUNE_TOL || modes.iter().any(|m| m.is_zero()) {
        return FockState { photon_number, terms: Vec::new() };
    }
    let mut keyed: Vec<(Vec<u64>, M)> =
        modes.into_iter().map(|m| (m.content_bits(), m)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    FockState {
        photon_number,
        terms: vec![Monomial { coeff, modes: keyed.into_iter().map(|(_, m)| m).collect() }],
    }
}

impl<M: ModeLike> FockState<M> {
    /// The normalized no-photon state.
    pub fn vacuum() -> Self {
        FockState {
            photon_number: 0,
            terms: vec![Monomial { coeff: Complex64::new(1.0, 0.0), modes: Vec::new() }],
        }
    }

    /// The zero vector (not a physical state).
    pub fn zero_state() -> Self {
        FockState { photon_number: 0, terms: Vec::new() }
    }

    pub fn photon_number(&self) -> usize {
        self.photon_number
    }

    pub fn terms(&self) -> &[Monomial<M>] {
        &self.terms
    }

    pub fn is_zero_state(&self) -> bool {
        self.terms.is_empty()
    }

    /// Apply the creation operator labeled by `psi`.
    pub fn create(&self, psi: &M) -> Result<Self> {
        if psi.is_zero() {
            return Err(Error::ZeroMode);
        }
        let key = psi.content_bits();
        let mut terms = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let mut modes = term.modes.clone();
            let at = modes
                .iter()
                .position(|m| m.content_bits() > key)
                .unwrap_or(modes.len());
            modes.insert(at, psi.clone());
            terms.push(Monomial { coeff: term.coeff, modes });
        }
        Ok(FockState { photon_number: self.photon_number + 1, terms })
    }

    /// Apply the annihilation operator labeled by `psi` via the commutator
    /// push-through: `B_psi` picks out each factor in turn with weight
    /// `<psi|factor>`, and kills the vacuum.
    pub fn annihilate(&self, psi: &M) -> Result<Self> {
        let mut out = FockState {
            photon_number: self.photon_number.saturating_sub(1),
            terms: Vec::new(),
        };
        for term in &self.terms {
            for j in 0..term.modes.len() {
                let weight = psi.overlap(&term.modes[j])?;
                let coeff = term.coeff * weight;
                let mut modes = term.modes.clone();
                modes.remove(j);
                out.terms.push(Monomial { coeff, modes });
            }
        }
        out.simplify();
        Ok(out)
    }

    /// `<self|other>`. States with different photon numbers are exactly
    /// orthogonal; within a sector the bracket is a sum of Gram permanents.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.is_zero_state() || other.is_zero_state() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if self.photon_number != other.photon_number {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let n = self.photon_number;
        if n > PERMANENT_PHOTON_CAP {
            return Err(Error::PhotonNumberTooLarge { n, cap: PERMANENT_PHOTON_CAP });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for bra in &self.terms {
            for ket in &other.terms {
                let mut gram = Vec::with_capacity(n);
                for a in &bra.modes {
                    let mut row = Vec::with_capacity(n);
                    for b in &ket.modes {
                        row.push(a.overlap(b)?);
                    }
                    gram.push(row);
                }
                acc += bra.coeff.conj() * ket.coeff * permanent(&gram);
            }
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> Result<f64> {
        Ok(self.inner_product(self)?.re)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.coeff *= factor;
        }
        out.simplify();
        out
    }

    /// Sum of two combinations in the same photon sector.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.is_zero_state() {
            return Ok(other.clone());
        }
        if other.is_zero_state() {
            return Ok(self.clone());
        }
        if self.photon_number != other.photon_number {
            return Err(Error::SectorMismatch {
                expected: self.photon_number,
                actual: other.photon_number,
            });
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.simplify();
        Ok(out)
    }

    /// Replace every carried mode, keeping coefficients. This is how states
    /// evolve: photon dynamics is classical mode dynamics.
    pub fn map_modes<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&M) -> Result<M>,
    {
        let mut terms = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let mut keyed = Vec::with_capacity(term.modes.len());
            for mode in &term.modes {
                let mapped = f(mode)?;
                keyed.push((mapped.content_bits(), mapped));
            }
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            terms.push(Monomial {
                coeff: term.coeff,
                modes: keyed.into_iter().map(|(_, m)| m).collect(),
            });
        }
        Ok(FockState { photon_number: self.photon_number, terms })
    }

    /// Drop negligible terms and merge bit-identical monomials.
    fn simplify(&mut self) {
        self.terms.retain(|t| t.coeff.norm() > PRUNE_TOL && !t.modes.iter().any(|m| m.is_zero()));
        let mut merged: Vec<(Vec<Vec<u64>>, Monomial<M>)> = Vec::new();
        for term in self.terms.drain(..) {
            let key: Vec<Vec<u64>> = term.modes.iter().map(|m| m.content_bits()).collect();
            match merged.iter_mut().find(|(k, _)| *k == key) {
                Some((_, existing)) => existing.coeff += term.coeff,
                None => merged.push((key, term)),
            }
        }
        self.terms = merged
            .into_iter()
            .filter(|(_, t)| t.coeff.norm() > PRUNE_TOL)
            .map(|(_, t)| t)
            .collect();
    }
}

/// Permanent of a square complex matrix by Ryser's inclusion-exclusion with
/// Gray-code updates, `O(2^n n)`. The empty matrix has permanent 1.
pub fn permanent(rows: &[Vec<Complex64>]) -> Complex64 {
    let n = rows.len();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    debug_assert!(rows.iter().all(|r| r.len() == n));
    debug_assert!(n <= 63);
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut prev_gray: u64 = 0;
    for s in 1u64..(1u64 << n) {
        let gray = s ^ (s >> 1);
        let flipped = gray ^ prev_gray;
        let j = flipped.trailing_zeros() as usize;
        if gray & flipped != 0 {
            for (sum, row) in row_sums.iter_mut().zip(rows.iter()) {
                *sum += row[j];
            }
        } else {
            for (sum, row) in row_sums.iter_mut().zip(rows.iter()) {
                *sum -= row[j];
            }
        }
        prev_gray = gray;
        let product: Complex64 = row_sums.iter().product();
        if gray.count_ones() as usize % 2 == n % 2 {
            total += product;
        } else {
            total -= product;
        }
    }
    total
}

/// The generalized commutator `[B_a, Bdag_b] = <a|b>`.
pub fn commutator_b_bdag<M: ModeLike>(a: &M, b: &M) -> Result<Complex64> {
    a.overlap(b)
}

/// One factor of an operator word acting between vacua.
#[derive(Debug, Clone)]
pub enum FockOp<M: ModeLike> {
    Create(M),
    Annihilate(M),
}

/// Evaluate `<vac| word |vac>` by literally rewriting
/// `B_a Bdag_b -> Bdag_b B_a + <a|b>` until every annihilator has been pushed
/// onto the vacuum. Exponential cost; this is the independent oracle the
/// permanent closed form is checked against.
pub fn vacuum_expectation_oracle<M: ModeLike>(word: &[FockOp<M>]) -> Result<Complex64> {
    let creators = word.iter().filter(|op| matches!(op, FockOp::Create(_))).count();
    let annihilators = word.len() - creators;
    let cap = ORACLE_PHOTON_CAP;
    if creators > cap || annihilators > cap {
        return Err(Error::PhotonNumberTooLarge { n: creators.max(annihilators), cap });
    }
    eval_word(word.to_vec())
}

fn eval_word<M: ModeLike>(word: Vec<FockOp<M>>) -> Result<Complex64> {
    if word.is_empty() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if matches!(word.last(), Some(FockOp::Annihilate(_))) {
        return Ok(Complex64::new(0.0, 0.0)); // annihilator meets the vacuum
    }
    if matches!(word.first(), Some(FockOp::Create(_))) {
        return Ok(Complex64::new(0.0, 0.0)); // creator meets the left vacuum
    }
    for i in 0..word.len() - 1 {
        let swap = matches!(
            (&word[i], &word[i + 1]),
            (FockOp::Annihilate(_), FockOp::Create(_))
        );
        if swap {
            let scalar = match (&word[i], &word[i + 1]) {
                (FockOp::Annihilate(a), FockOp::Create(b)) => a.overlap(b)?,
                _ => unreachable!(),
            };
            let mut contracted = word.clone();
            contracted.drain(i..=i + 1);
            let mut swapped = word;
            swapped.swap(i, i + 1);
            return Ok(scalar * eval_word(contracted)? + eval_word(swapped)?);
        }
    }
    unreachable!("a word that starts with an annihilator and ends with a creator has an adjacent pair");
}

/// Evolve every carried mode with the free-propagation generator; the
/// coefficients never change.
pub fn evolve_fock_state(
    state: &FockState<Mode>,
    op: &FrequencyOperator1D,
    t: f64,
) -> Result<FockState<Mode>> {
    state.map_modes(|m| op.evolve(m, t))
}

/// Evolve every carried rail mode through a circuit to time `t`.
pub fn evolve_fock_state_through(
    state: &FockState<RailMode>,
    circuit: &Circuit,
    t: f64,
) -> Result<FockState<RailMode>> {
    state.map_modes(|m| circuit.propagate_mode(m, t))
}

/// `<state| H |state> / <state|state>` for the normally ordered energy
/// `H = sum_k omega_k Bdag_k B_k` over the discrete eigenbasis (hbar = 1).
///
/// A single monomial over orthonormal modes reduces to the sum of per-photon
/// spectral energies. Everything else goes through the general contraction
/// `sum_{j,k} <bra_j|Omega|ket_k> perm(G with row j, column k removed)`,
/// which is the eigenbasis insertion evaluated in closed form.
pub fn energy_expectation(state: &FockState<Mode>, op: &FrequencyOperator1D) -> Result<f64> {
    if state.is_zero_state() {
        return Err(Error::ZeroMode);
    }
    if state.photon_number == 0 {
        return Ok(0.0); // normal ordering annihilates the vacuum
    }

    if state.terms.len() == 1 {
        let modes = &state.terms[0].modes;
        let mut orthonormal = true;
        'outer: for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (a.overlap(b)? - expect).norm() > 1e-10 {
                    orthonormal = false;
                    break 'outer;
                }
            }
        }
        if orthonormal {
            let mut total = 0.0;
            for mode in modes {
                total += mode.scalar_product(&op.apply(mode)?)?.re;
            }
            return Ok(total);
        }
    }

    let n = state.photon_number;
    let mut numerator = Complex64::new(0.0, 0.0);
    for bra in &state.terms {
        for ket in &state.terms {
            let mut gram = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            let mut omega_elems = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            for (j, a) in bra.modes.iter().enumerate() {
                for (k, b) in ket.modes.iter().enumerate() {
                    gram[j][k] = a.overlap(b)?;
                    omega_elems[j][k] = a.scalar_product(&op.apply(b)?)?;
                }
            }
            for (j, omega_row) in omega_elems.iter().enumerate() {
                for (k, omega_jk) in omega_row.iter().enumerate() {
                    let minor: Vec<Vec<Complex64>> = gram
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| *r != j)
                        .map(|(_, row)| {
                            row.iter()
                                .enumerate()
                                .filter(|(c, _)| *c != k)
                                .map(|(_, z)| *z)
                                .collect()
                        })
                        .collect();
                    numerator += bra.coeff.conj() * ket.coeff * omega_jk * permanent(&minor);
                }
            }
        }
    }
    let denominator = state.norm_sq()?;
    if denominator <= 0.0 {
        return Err(Error::ZeroMode);
    }
    Ok((numerator / denominator).re)
}
