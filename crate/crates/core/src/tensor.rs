//! Dense small-tensor arithmetic in dimension 3.
//!
//! Tensors are stored flat in row-major order: component `(i1, ..., ir)`
//! of a rank-`r` tensor lives at offset `sum_k i_k * 3^(r-k)` with
//! zero-based indices, i.e. the first index is the most significant.
//! Derivative slots, where they occur, are always appended last; all
//! divergences in this crate contract the last slot.
//!
//! Ranks up to [`MAX_RANK`] are supported: the constitutive tensor `C`
//! has rank 6 and its spatial gradient rank 7.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::math;

/// Spatial dimension. Fixed at 3; the scaling dimensions in
/// [`crate::currents`] keep `n` symbolic, everything else is hard-wired.
pub const DIM: usize = 3;

/// Highest representable rank (gradient of a rank-6 tensor).
pub const MAX_RANK: usize = 7;

/// Upper bound on the slot-permutation group generated by a
/// [`SymmetrySpec`]; far above anything the constitutive relations need.
const MAX_SYMMETRY_GROUP: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("rank {0} out of range 0..={MAX_RANK}")]
    RankOutOfRange(usize),
    #[error("entry count {got} does not match 3^{rank} = {want}")]
    EntryCount { rank: usize, got: usize, want: usize },
    #[error("contraction references slot {slot} of a rank-{rank} operand")]
    ContractSlot { slot: usize, rank: usize },
    #[error("contraction repeats slot {0}")]
    ContractDuplicate(usize),
    #[error("contraction result would exceed rank {MAX_RANK}")]
    ContractRank,
    #[error("symmetry relation references slot {slot} for rank {rank}")]
    SymmetrySlot { slot: usize, rank: usize },
    #[error("symmetry block lengths {0} and {1} differ")]
    SymmetryBlockLen(usize, usize),
    #[error("symmetry group exceeds {MAX_SYMMETRY_GROUP} elements")]
    SymmetryGroupTooLarge,
    #[error("rank mismatch: expected {want}, got {got}")]
    RankMismatch { want: usize, got: usize },
    #[error("rotation matrix is not orthogonal: max |R^T R - I| = {0:e}")]
    NotOrthogonal(f64),
    #[error("no delta-product isotropic basis exists for rank {0}")]
    NoIsotropicBasis(usize),
    #[error("non-finite entry at offset {0}")]
    NonFinite(usize),
}

/// Dense real tensor of rank 0..=[`MAX_RANK`] over dimension 3.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rank: usize,
    entries: Vec<f64>,
}

/// 3^rank.
pub fn entry_count(rank: usize) -> usize {
    DIM.pow(rank as u32)
}

/// Steps all indices of `idx[..rank]` through 0..3 in row-major order.
/// Returns false once the odometer wraps around.
#[inline]
pub(crate) fn advance(idx: &mut [usize], rank: usize) -> bool {
    for k in (0..rank).rev() {
        idx[k] += 1;
        if idx[k] < DIM {
            return true;
        }
        idx[k] = 0;
    }
    false
}

impl Tensor {
    pub fn zeros(rank: usize) -> Self {
        assert!(rank <= MAX_RANK, "rank {rank} out of range");
        Self {
            rank,
            entries: vec![0.0; entry_count(rank)],
        }
    }

    pub fn from_entries(rank: usize, entries: Vec<f64>) -> Result<Self, TensorError> {
        if rank > MAX_RANK {
            return Err(TensorError::RankOutOfRange(rank));
        }
        let want = entry_count(rank);
        if entries.len() != want {
            return Err(TensorError::EntryCount {
                rank,
                got: entries.len(),
                want,
            });
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite(pos));
        }
        Ok(Self { rank, entries })
    }

    /// Rank-0 tensor wrapping a scalar.
    pub fn scalar(value: f64) -> Self {
        Self {
            rank: 0,
            entries: vec![value],
        }
    }

    pub fn from_fn(rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(rank);
        let mut idx = [0usize; MAX_RANK];
        loop {
            let off = offset(&idx[..rank]);
            t.entries[off] = f(&idx[..rank]);
            if !advance(&mut idx, rank) {
                break;
            }
        }
        t
    }

    pub fn vector(v: [f64; 3]) -> Self {
        Self {
            rank: 1,
            entries: vec![v[0], v[1], v[2]],
        }
    }

    /// Kronecker delta.
    pub fn delta() -> Self {
        Self::from_fn(2, |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    /// Levi-Civita permutation symbol.
    pub fn levi_civita() -> Self {
        Self::from_fn(3, |i| match (i[0], i[1], i[2]) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    /// Value of the rank-0 tensor.
    pub fn as_scalar(&self) -> f64 {
        assert_eq!(self.rank, 0, "as_scalar on rank-{} tensor", self.rank);
        self.entries[0]
    }

    pub fn as_vector(&self) -> [f64; 3] {
        assert_eq!(self.rank, 1, "as_vector on rank-{} tensor", self.rank);
        [self.entries[0], self.entries[1], self.entries[2]]
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.rank);
        self.entries[offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], value: f64) {
        debug_assert_eq!(idx.len(), self.rank);
        self.entries[offset(idx)] = value;
    }

    #[inline]
    pub fn add_at(&mut self, idx: &[usize], value: f64) {
        self.entries[offset(idx)] += value;
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rank: self.rank,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank, "rank mismatch in add");
        Self {
            rank: self.rank,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank, "rank mismatch in sub");
        Self {
            rank: self.rank,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Adds `factor * other` in place.
    pub fn axpy(&mut self, factor: f64, other: &Self) {
        assert_eq!(self.rank, other.rank, "rank mismatch in axpy");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += factor * b;
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        math::sqrt(self.entries.iter().map(|v| v * v).sum())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .fold(0.0, |acc, v| math::max(acc, math::abs(*v)))
    }

    /// Full inner product: all slots of `self` contracted against `other`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.rank, other.rank, "rank mismatch in inner");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Trace over two slots (sums entries with equal indices there).
    pub fn trace(&self, slot_a: usize, slot_b: usize) -> Self {
        assert!(slot_a < self.rank && slot_b < self.rank && slot_a != slot_b);
        let (lo, hi) = if slot_a < slot_b {
            (slot_a, slot_b)
        } else {
            (slot_b, slot_a)
        };
        let out_rank = self.rank - 2;
        let mut out = Tensor::zeros(out_rank);
        let mut out_idx = [0usize; MAX_RANK];
        let mut src = [0usize; MAX_RANK];
        loop {
            let mut sum = 0.0;
            for d in 0..DIM {
                let mut p = 0;
                for s in 0..self.rank {
                    src[s] = if s == lo || s == hi {
                        d
                    } else {
                        let v = out_idx[p];
                        p += 1;
                        v
                    };
                }
                sum += self.get(&src[..self.rank]);
            }
            out.set(&out_idx[..out_rank], sum);
            if !advance(&mut out_idx, out_rank) {
                break;
            }
        }
        out
    }

    /// Applies a slot permutation: output slot `s` carries what input
    /// slot `perm[s]` carried, so `out.get(idx) = self.get(src)` with
    /// `src[perm[s]] = idx[s]`. Example: `perm = [1, 0]` is the
    /// transpose.
    pub fn permute_slots(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank);
        let rank = self.rank;
        let mut out = Tensor::zeros(rank);
        let mut idx = [0usize; MAX_RANK];
        let mut src = [0usize; MAX_RANK];
        loop {
            for s in 0..rank {
                src[perm[s]] = idx[s];
            }
            out.set(&idx[..rank], self.get(&src[..rank]));
            if !advance(&mut idx, rank) {
                break;
            }
        }
        out
    }
}

/// Row-major flat offset of a multi-index.
#[inline]
pub fn offset(idx: &[usize]) -> usize {
    let mut off = 0;
    for &i in idx {
        debug_assert!(i < DIM);
        off = off * DIM + i;
    }
    off
}

/// Contracts `a` and `b` over the given `(a_slot, b_slot)` pairs,
/// zero-based. Paired slots are summed over 0..3; free slots keep their
/// original order, `a` first, then `b`. Summation runs in row-major order
/// over the paired indices, so results are deterministic.
pub fn contract(a: &Tensor, b: &Tensor, pairing: &[(usize, usize)]) -> Result<Tensor, TensorError> {
    for &(sa, sb) in pairing {
        if sa >= a.rank {
            return Err(TensorError::ContractSlot { slot: sa, rank: a.rank });
        }
        if sb >= b.rank {
            return Err(TensorError::ContractSlot { slot: sb, rank: b.rank });
        }
    }
    for (n, &(sa, sb)) in pairing.iter().enumerate() {
        for &(ta, tb) in &pairing[..n] {
            if sa == ta {
                return Err(TensorError::ContractDuplicate(sa));
            }
            if sb == tb {
                return Err(TensorError::ContractDuplicate(sb));
            }
        }
    }
    let k = pairing.len();
    let free_a: Vec<usize> = (0..a.rank)
        .filter(|s| !pairing.iter().any(|&(sa, _)| sa == *s))
        .collect();
    let free_b: Vec<usize> = (0..b.rank)
        .filter(|s| !pairing.iter().any(|&(_, sb)| sb == *s))
        .collect();
    let out_rank = free_a.len() + free_b.len();
    if out_rank > MAX_RANK {
        return Err(TensorError::ContractRank);
    }

    let mut out = Tensor::zeros(out_rank);
    let mut out_idx = [0usize; MAX_RANK];
    let mut sum_idx = [0usize; MAX_RANK];
    let mut ia = [0usize; MAX_RANK];
    let mut ib = [0usize; MAX_RANK];
    loop {
        for (n, &s) in free_a.iter().enumerate() {
            ia[s] = out_idx[n];
        }
        for (n, &s) in free_b.iter().enumerate() {
            ib[s] = out_idx[free_a.len() + n];
        }
        let mut sum = 0.0;
        sum_idx[..k].fill(0);
        loop {
            for (n, &(sa, sb)) in pairing.iter().enumerate() {
                ia[sa] = sum_idx[n];
                ib[sb] = sum_idx[n];
            }
            sum += a.get(&ia[..a.rank]) * b.get(&ib[..b.rank]);
            if k == 0 || !advance(&mut sum_idx, k) {
                break;
            }
        }
        out.set(&out_idx[..out_rank], sum);
        if !advance(&mut out_idx, out_rank) {
            break;
        }
    }
    Ok(out)
}

/// One symmetry relation on the slots of a tensor, zero-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymmetryRelation {
    /// Invariance under exchanging two slots, `t[..i..j..] = t[..j..i..]`.
    PairExchange(usize, usize),
    /// Invariance under exchanging two slot blocks of equal length,
    /// e.g. `(0,1,2) <-> (3,4,5)` for the major symmetry of a rank-6
    /// tensor.
    BlockExchange(Vec<usize>, Vec<usize>),
}

impl SymmetryRelation {
    fn as_permutation(&self, rank: usize) -> Result<Vec<usize>, TensorError> {
        let mut perm: Vec<usize> = (0..rank).collect();
        match self {
            SymmetryRelation::PairExchange(i, j) => {
                for &s in [i, j] {
                    if s >= rank {
                        return Err(TensorError::SymmetrySlot { slot: s, rank });
                    }
                }
                perm.swap(*i, *j);
            }
            SymmetryRelation::BlockExchange(a, b) => {
                if a.len() != b.len() {
                    return Err(TensorError::SymmetryBlockLen(a.len(), b.len()));
                }
                for &s in a.iter().chain(b.iter()) {
                    if s >= rank {
                        return Err(TensorError::SymmetrySlot { slot: s, rank });
                    }
                }
                for (&x, &y) in a.iter().zip(b.iter()) {
                    perm.swap(x, y);
                }
            }
        }
        Ok(perm)
    }
}

/// A set of symmetry relations for tensors of one fixed rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetrySpec {
    rank: usize,
    relations: Vec<SymmetryRelation>,
}

impl SymmetrySpec {
    pub fn new(rank: usize, relations: Vec<SymmetryRelation>) -> Result<Self, TensorError> {
        if rank > MAX_RANK {
            return Err(TensorError::RankOutOfRange(rank));
        }
        for r in &relations {
            r.as_permutation(rank)?;
        }
        Ok(Self { rank, relations })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn relations(&self) -> &[SymmetryRelation] {
        &self.relations
    }

    /// The slot-permutation group generated by the relations, by BFS
    /// closure from the identity.
    pub fn group(&self) -> Result<Vec<Vec<usize>>, TensorError> {
        let generators: Vec<Vec<usize>> = self
            .relations
            .iter()
            .map(|r| r.as_permutation(self.rank))
            .collect::<Result<_, _>>()?;
        let identity: Vec<usize> = (0..self.rank).collect();
        let mut group = vec![identity];
        let mut frontier = 0;
        while frontier < group.len() {
            let current = group[frontier].clone();
            frontier += 1;
            for g in &generators {
                // compose: apply `current`, then `g`
                let composed: Vec<usize> = (0..self.rank).map(|s| g[current[s]]).collect();
                if !group.contains(&composed) {
                    group.push(composed);
                    if group.len() > MAX_SYMMETRY_GROUP {
                        return Err(TensorError::SymmetryGroupTooLarge);
                    }
                }
            }
        }
        Ok(group)
    }

    pub fn describe(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = write!(s, "rank {} with {} relations", self.rank, self.relations.len());
        s
    }
}

/// True iff every relation of `spec` holds entrywise within `tol`.
///
/// The tensor's rank must match `spec.rank()`; that is a caller
/// contract, not a runtime condition.
pub fn check_symmetry(t: &Tensor, spec: &SymmetrySpec, tol: f64) -> bool {
    assert_eq!(t.rank(), spec.rank(), "rank mismatch in check_symmetry");
    for r in &spec.relations {
        let perm = r
            .as_permutation(t.rank())
            .expect("spec validated at construction");
        let permuted = t.permute_slots(&perm);
        let mut max_dev = 0.0;
        for (a, b) in t.entries.iter().zip(&permuted.entries) {
            max_dev = math::max(max_dev, math::abs(a - b));
        }
        if max_dev > tol {
            return false;
        }
    }
    true
}

/// Group-average of `t` over the permutation group generated by `spec`.
///
/// The output satisfies [`check_symmetry`] at machine level and the map
/// is idempotent. Group orders in this crate are powers of two, so the
/// averaging divisions are exact.
pub fn symmetrize(t: &Tensor, spec: &SymmetrySpec) -> Result<Tensor, TensorError> {
    if t.rank() != spec.rank() {
        return Err(TensorError::RankMismatch {
            want: spec.rank(),
            got: t.rank(),
        });
    }
    let group = spec.group()?;
    let mut acc = Tensor::zeros(t.rank());
    for perm in &group {
        acc.axpy(1.0, &t.permute_slots(perm));
    }
    Ok(acc.scale(1.0 / group.len() as f64))
}

/// All distinct Kronecker-delta product tensors of the given rank: the
/// 3 pairings for rank 4, the 15 perfect matchings for rank 6. These
/// span the rotation-invariant tensors built from deltas alone; no such
/// basis exists in odd rank.
pub fn isotropic_basis(rank: usize) -> Result<Vec<Tensor>, TensorError> {
    if rank != 4 && rank != 6 {
        return Err(TensorError::NoIsotropicBasis(rank));
    }
    let mut matchings = Vec::new();
    let slots: Vec<usize> = (0..rank).collect();
    collect_matchings(&slots, &mut Vec::new(), &mut matchings);
    let basis = matchings
        .iter()
        .map(|pairs| {
            Tensor::from_fn(rank, |idx| {
                if pairs.iter().all(|&(a, b)| idx[a] == idx[b]) {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(basis)
}

fn collect_matchings(
    remaining: &[usize],
    current: &mut Vec<(usize, usize)>,
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    if remaining.is_empty() {
        out.push(current.clone());
        return;
    }
    let first = remaining[0];
    for k in 1..remaining.len() {
        let partner = remaining[k];
        let rest: Vec<usize> = remaining[1..]
            .iter()
            .copied()
            .filter(|&s| s != partner)
            .collect();
        current.push((first, partner));
        collect_matchings(&rest, current, out);
        current.pop();
    }
}

/// Applies the orthogonal matrix `r` to every slot of `t`:
/// `t'_{i...} = R_{ia} ... t_{a...}`.
pub fn rotate(t: &Tensor, r: &Tensor, tol: f64) -> Result<Tensor, TensorError> {
    if r.rank() != 2 {
        return Err(TensorError::RankMismatch {
            want: 2,
            got: r.rank(),
        });
    }
    let rt_r = contract(r, r, &[(0, 0)])?;
    let mut dev = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            let want = if i == j { 1.0 } else { 0.0 };
            dev = math::max(dev, math::abs(rt_r.get(&[i, j]) - want));
        }
    }
    if dev > tol {
        return Err(TensorError::NotOrthogonal(dev));
    }
    let mut out = t.clone();
    for slot in 0..t.rank() {
        // contract R over this slot, then move the new index back in place
        let rotated = contract(r, &out, &[(1, slot)])?;
        // rotated slots: (new index, free slots of `out` except `slot`);
        // move the new index back to `slot`, keep the rest in order
        let mut perm = vec![0usize; t.rank()];
        let mut next = 1;
        for (s, p) in perm.iter_mut().enumerate() {
            *p = if s == slot {
                0
            } else {
                let v = next;
                next += 1;
                v
            };
        }
        out = rotated.permute_slots(&perm);
    }
    Ok(out)
}

/// Rotation by `angle` about the unit-normalized `axis` (Rodrigues).
pub fn rotation_matrix(axis: [f64; 3], angle: f64) -> Tensor {
    let n = math::hypot3(axis[0], axis[1], axis[2]);
    let u = [axis[0] / n, axis[1] / n, axis[2] / n];
    let c = math::cos(angle);
    let s = math::sin(angle);
    let eps = Tensor::levi_civita();
    Tensor::from_fn(2, |i| {
        let kron = if i[0] == i[1] { 1.0 } else { 0.0 };
        let mut skew = 0.0;
        for k in 0..DIM {
            skew += eps.get(&[i[0], i[1], k]) * u[k];
        }
        c * kron - s * skew + (1.0 - c) * u[i[0]] * u[i[1]]
    })
}
