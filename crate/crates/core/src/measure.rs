//! Finite computational model of a measure space.
//!
//! A space is a list of atoms (labelled, weighted) followed by `M` equal
//! cells standing in for the non-atomic part; `M` is the resolution knob.
//! Coordinate order is canonical — atoms first, then cells — so serialized
//! subsets are reproducible. The countable-copy space is modelled by
//! [`CopiedSpace`], a truncation to `N` copies with block coordinate
//! layout `copy * base_dim + i`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpcore::LpOperator;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpace {
    atoms: Vec<(String, f64)>,
    cell_count: usize,
    cell_weight: f64,
    convenient: bool,
}

impl MeasureSpace {
    /// A space with the given atoms and `cell_count` equal cells.
    ///
    /// `convenient` declares the modelling intent: the finite model stands
    /// in for a space whose atom set is empty or infinite. Declaring it
    /// requires at least two cells, so that indicator splitting has room.
    pub fn new(
        atoms: Vec<(String, f64)>,
        cell_count: usize,
        cell_weight: f64,
        convenient: bool,
    ) -> Result<Self> {
        for (label, w) in &atoms {
            if *w <= 0.0 || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "atom '{label}' must have strictly positive weight, got {w}"
                )));
            }
        }
        if cell_count > 0 && (cell_weight <= 0.0 || !cell_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cell weight must be strictly positive, got {cell_weight}"
            )));
        }
        if atoms.len() + cell_count == 0 {
            return Err(Error::InvalidParameter("space must have dimension >= 1".into()));
        }
        if convenient && cell_count < 2 {
            return Err(Error::InvalidParameter(
                "a convenient space needs cell_count >= 2 (or model it as a CopiedSpace)".into(),
            ));
        }
        Ok(MeasureSpace { atoms, cell_count, cell_weight, convenient })
    }

    /// `n` unit atoms labelled `a0..`; the workhorse of small examples.
    pub fn unit_atoms(n: usize) -> Self {
        let atoms = (0..n).map(|i| (format!("a{i}"), 1.0)).collect();
        MeasureSpace::new(atoms, 0, 1.0, false).expect("unit atoms are valid")
    }

    /// An atomless model: `m` cells of equal weight, total measure `total`.
    pub fn cells(m: usize, total: f64) -> Result<Self> {
        MeasureSpace::new(Vec::new(), m, total / m as f64, m >= 2)
    }

    pub fn dim(&self) -> usize {
        self.atoms.len() + self.cell_count
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_convenient(&self) -> bool {
        self.convenient
    }

    pub fn weight(&self, i: usize) -> f64 {
        if i < self.atoms.len() {
            self.atoms[i].1
        } else {
            self.cell_weight
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.weight(i)).collect()
    }

    pub fn label(&self, i: usize) -> String {
        if i < self.atoms.len() {
            self.atoms[i].0.clone()
        } else {
            format!("cell{}", i - self.atoms.len())
        }
    }

    pub fn total_measure(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum::<f64>() + self.cell_count as f64 * self.cell_weight
    }
}

/// Truncation of the countable disjoint union of copies of a base space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopiedSpace {
    base: MeasureSpace,
    copies: usize,
}

impl CopiedSpace {
    pub fn new(base: MeasureSpace, copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidParameter("copies must be >= 1".into()));
        }
        Ok(CopiedSpace { base, copies })
    }

    /// Copies of an arbitrary space; a copied base is flattened first.
    pub fn over(space: &Space, copies: usize) -> Result<Self> {
        CopiedSpace::new(space.flattened(), copies)
    }

    pub fn base(&self) -> &MeasureSpace {
        &self.base
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn dim(&self) -> usize {
        self.copies * self.base.dim()
    }

    /// Linear coordinate of `(copy, base index)`.
    pub fn coord(&self, copy: usize, i: usize) -> usize {
        debug_assert!(copy < self.copies && i < self.base.dim());
        copy * self.base.dim() + i
    }

    /// Inverse of [`coord`](Self::coord).
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.base.dim(), index % self.base.dim())
    }
}

/// Either a plain space or a truncated copy space; the `L`-side of every
/// vector, operator, and amplification in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Space {
    Plain(MeasureSpace),
    Copied(CopiedSpace),
}

impl From<MeasureSpace> for Space {
    fn from(m: MeasureSpace) -> Self {
        Space::Plain(m)
    }
}

impl From<CopiedSpace> for Space {
    fn from(c: CopiedSpace) -> Self {
        Space::Copied(c)
    }
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Plain(m) => m.dim(),
            Space::Copied(c) => c.dim(),
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        match self {
            Space::Plain(m) => m.weight(i),
            Space::Copied(c) => {
                let (_, base_idx) = c.split(i);
                c.base().weight(base_idx)
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.weight(i)).collect()
    }

    pub fn label(&self, i: usize) -> String {
        match self {
            Space::Plain(m) => m.label(i),
            Space::Copied(c) => {
                let (copy, base_idx) = c.split(i);
                format!("c{copy}:{}", c.base().label(base_idx))
            }
        }
    }

    /// Copy spaces are always convenient; plain spaces carry the declared flag.
    pub fn is_convenient(&self) -> bool {
        match self {
            Space::Plain(m) => m.is_convenient(),
            Space::Copied(_) => true,
        }
    }

    /// View the coordinates as a plain space (atoms named after the
    /// originals). Used when a copied space itself has to be copied.
    pub fn flattened(&self) -> MeasureSpace {
        match self {
            Space::Plain(m) => m.clone(),
            Space::Copied(_) => {
                let atoms =
                    (0..self.dim()).map(|i| (self.label(i), self.weight(i))).collect::<Vec<_>>();
                MeasureSpace::new(atoms, 0, 1.0, false).expect("flattened space is valid")
            }
        }
    }
}

/// A union of model coordinates with its (derived) measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurableSubset {
    indices: BTreeSet<usize>,
    measure: f64,
    space_dim: usize,
}

impl MeasurableSubset {
    pub fn new(space: &Space, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let indices: BTreeSet<usize> = indices.into_iter().collect();
        if indices.is_empty() {
            return Err(Error::InvalidParameter(
                "subset needs at least one coordinate; use `empty` for the empty subset".into(),
            ));
        }
        if let Some(&max) = indices.iter().next_back() {
            if max >= space.dim() {
                return Err(Error::InvalidParameter(format!(
                    "coordinate {max} out of range for dimension {}",
                    space.dim()
                )));
            }
        }
        let measure = indices.iter().map(|&i| space.weight(i)).sum();
        Ok(MeasurableSubset { indices, measure, space_dim: space.dim() })
    }

    pub fn empty(space: &Space) -> Self {
        MeasurableSubset { indices: BTreeSet::new(), measure: 0.0, space_dim: space.dim() }
    }

    pub fn full(space: &Space) -> Self {
        MeasurableSubset::new(space, 0..space.dim()).expect("full subset is valid")
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn is_disjoint(&self, other: &MeasurableSubset) -> bool {
        self.indices.is_disjoint(&other.indices)
    }
}

/// The characteristic function of `Z`, normalized in `L_p`: equals
/// `mu(Z)^{-1/p}` on `Z` and zero elsewhere, so its weighted p-norm is 1.
pub fn normalized_indicator<S: crate::scalar::Scalar>(
    space: &Space,
    z: &MeasurableSubset,
    p: f64,
) -> Result<crate::lpcore::LpVector<S>> {
    crate::lpcore::validate_p(p)?;
    if z.measure() <= 0.0 {
        return Err(Error::DegenerateSubset);
    }
    let value = z.measure().powf(-1.0 / p);
    let mut coeffs = vec![S::from_real_f64(0.0); space.dim()];
    for i in z.indices() {
        coeffs[i] = S::from_real_f64(value);
    }
    crate::lpcore::LpVector::new(space.clone(), p, coeffs)
}

/// Pairwise-disjointness check used by every family constructor.
pub fn check_pairwise_disjoint(subsets: &[MeasurableSubset]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for z in subsets {
        for i in z.indices() {
            if !seen.insert(i) {
                return Err(Error::OverlappingSubsets { index: i });
            }
        }
    }
    Ok(())
}

/// `n` pairwise-disjoint subsets of strictly positive measure, drawn
/// deterministically from `seed` by partitioning a shuffled coordinate
/// list round-robin.
pub fn disjoint_family(space: &Space, n: usize, seed: u64) -> Result<Vec<MeasurableSubset>> {
    if n == 0 {
        return Err(Error::InvalidParameter("family size must be >= 1".into()));
    }
    let dim = space.dim();
    if n > dim {
        return Err(Error::InsufficientResolution { needed: n, available: dim });
    }
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..dim).collect();
    let mut r = rng::rng(seed, "disjoint_family", n as u64);
    order.shuffle(&mut r);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, idx) in order.into_iter().enumerate() {
        groups[pos % n].push(idx);
    }
    groups.into_iter().map(|g| MeasurableSubset::new(space, g)).collect()
}

/// The copy embeddings `I_j : L_p(base) -> L_p(NX)`, one per copy.
///
/// Each is a weight-preserving coordinate shift, hence an isometry for
/// every `p`, and the images are the ranges of transversal proper
/// projections (the per-copy blocks).
pub fn copy_isometries(cs: &CopiedSpace) -> Vec<LpOperator> {
    (0..cs.copies()).map(|j| LpOperator::copy_embedding(cs, j)).collect()
}
