//! Tensor-product Hilbert spaces, sparse operators, and density matrices.
//!
//! Spaces are built from an ordered list of slots (few-level atoms or
//! Fock-truncated bosonic modes) with an optional global excitation cap.
//! Basis ordering is lexicographic in slot order, so construction is
//! deterministic and repeated builds yield bit-identical structures.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::SimError;
use crate::C64;

/// Purge threshold for explicit zeros in sparse operator storage.
pub const ZERO_PURGE: f64 = 1e-15;

/// Probability below which a herald projection is reported as impossible.
pub const HERALD_EPS: f64 = 1e-12;

/// One subsystem of a composite space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    /// Few-level atom with named levels (order as declared).
    Atom { name: String, levels: Vec<String> },
    /// Bosonic mode truncated at occupation `n_max`.
    Mode { name: String, n_max: u32 },
}

impl Slot {
    pub fn atom(name: &str, levels: &[&str]) -> Self {
        Slot::Atom {
            name: name.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn mode(name: &str, n_max: u32) -> Self {
        Slot::Mode {
            name: name.to_string(),
            n_max,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Slot::Atom { levels, .. } => levels.len(),
            Slot::Mode { n_max, .. } => *n_max as usize + 1,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Slot::Atom { name, .. } => name,
            Slot::Mode { name, .. } => name,
        }
    }

    pub fn is_mode(&self) -> bool {
        matches!(self, Slot::Mode { .. })
    }

    /// Excitation number carried by local state `k`: photon count for modes,
    /// one for the atomic excited levels `e`, `E1`, `E2`, zero otherwise.
    pub fn excitation_of(&self, k: u8) -> u32 {
        match self {
            Slot::Mode { .. } => k as u32,
            Slot::Atom { levels, .. } => {
                let lv = &levels[k as usize];
                if lv == "e" || lv == "E1" || lv == "E2" {
                    1
                } else {
                    0
                }
            }
        }
    }

    /// Index of a named atomic level.
    pub fn level_index(&self, level: &str) -> Option<u8> {
        match self {
            Slot::Atom { levels, .. } => levels.iter().position(|l| l == level).map(|i| i as u8),
            Slot::Mode { .. } => None,
        }
    }
}

/// Tensor-product basis with optional global excitation cap.
#[derive(Debug)]
pub struct HilbertSpace {
    pub slots: Vec<Slot>,
    pub excitation_cap: Option<u32>,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl HilbertSpace {
    /// Number of retained basis states.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Multi-index of retained basis state `i`.
    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    /// Flat index of a multi-index, if retained.
    pub fn find(&self, multi: &[u8]) -> Option<usize> {
        self.index.get(multi).copied()
    }

    /// Total excitation number of a multi-index.
    pub fn excitation(&self, multi: &[u8]) -> u32 {
        self.slots
            .iter()
            .zip(multi)
            .map(|(s, &k)| s.excitation_of(k))
            .sum()
    }

    /// Slot index by name.
    pub fn slot_named(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name() == name)
    }
}

/// Build a space from slot descriptors, optionally capping total excitation.
///
/// Basis states are enumerated lexicographically (first slot slowest); with a
/// cap, states exceeding it are dropped from the retained set.
pub fn build_space(
    slots: Vec<Slot>,
    excitation_cap: Option<u32>,
) -> Result<Arc<HilbertSpace>, SimError> {
    if slots.is_empty() {
        return Err(SimError::InvalidSpace("zero slots".into()));
    }
    for (i, s) in slots.iter().enumerate() {
        match s {
            Slot::Atom { levels, .. } => {
                if levels.len() < 2 {
                    return Err(SimError::InvalidSpace(format!(
                        "atom slot {i} has fewer than 2 levels"
                    )));
                }
                for (a, la) in levels.iter().enumerate() {
                    if levels[..a].contains(la) {
                        return Err(SimError::InvalidSpace(format!(
                            "duplicate level `{la}` on slot {i}"
                        )));
                    }
                }
            }
            Slot::Mode { n_max, .. } => {
                if *n_max < 1 {
                    return Err(SimError::InvalidSpace(format!(
                        "mode slot {i} has n_max < 1"
                    )));
                }
            }
        }
    }

    let dims: Vec<usize> = slots.iter().map(|s| s.dim()).collect();
    let mut states = Vec::new();
    let mut multi = vec![0u8; slots.len()];
    'outer: loop {
        let exc: u32 = slots
            .iter()
            .zip(&multi)
            .map(|(s, &k)| s.excitation_of(k))
            .sum();
        if excitation_cap.is_none_or(|cap| exc <= cap) {
            states.push(multi.clone());
        }
        // lexicographic increment, last slot fastest
        for j in (0..multi.len()).rev() {
            multi[j] += 1;
            if (multi[j] as usize) < dims[j] {
                continue 'outer;
            }
            multi[j] = 0;
        }
        break;
    }

    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(Arc::new(HilbertSpace {
        slots,
        excitation_cap,
        states,
        index,
    }))
}

/// Sparse complex operator on a [`HilbertSpace`].
///
/// Entries are stored as coordinate triples canonicalized to sorted row-major
/// order with explicit zeros purged, so equal operators have equal storage.
#[derive(Debug, Clone)]
pub struct Operator {
    pub space: Arc<HilbertSpace>,
    pub entries: Vec<(u32, u32, C64)>,
    pub label: String,
}

impl Operator {
    /// Build from raw coordinates: sorts row-major, merges duplicates, purges
    /// entries below [`ZERO_PURGE`].
    pub fn from_coo(
        space: Arc<HilbertSpace>,
        mut entries: Vec<(u32, u32, C64)>,
        label: &str,
    ) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v.norm() > ZERO_PURGE);
        Operator {
            space,
            entries: merged,
            label: label.to_string(),
        }
    }

    pub fn zero(space: Arc<HilbertSpace>, label: &str) -> Self {
        Operator {
            space,
            entries: Vec::new(),
            label: label.to_string(),
        }
    }

    pub fn identity(space: Arc<HilbertSpace>) -> Self {
        let entries = (0..space.dim())
            .map(|i| (i as u32, i as u32, C64::new(1.0, 0.0)))
            .collect();
        Operator::from_coo(space, entries, "I")
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn adjoint(&self) -> Operator {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        Operator::from_coo(self.space.clone(), entries, &format!("{}^+", self.label))
    }

    pub fn scale(&self, s: C64) -> Operator {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, s * v))
            .collect();
        Operator::from_coo(self.space.clone(), entries, &self.label)
    }

    pub fn add(&self, other: &Operator) -> Operator {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Operator::from_coo(self.space.clone(), entries, &self.label)
    }

    /// Matrix product `self * other` (sparse-sparse).
    pub fn matmul(&self, other: &Operator) -> Operator {
        // column index on other for cache-friendly lookup
        let mut by_row: HashMap<u32, Vec<(u32, C64)>> = HashMap::new();
        for &(r, c, v) in &other.entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut out = Vec::new();
        for &(r, k, v) in &self.entries {
            if let Some(cols) = by_row.get(&k) {
                for &(c, w) in cols {
                    out.push((r, c, v * w));
                }
            }
        }
        Operator::from_coo(
            self.space.clone(),
            out,
            &format!("{}*{}", self.label, other.label),
        )
    }

    /// Dense matrix form.
    pub fn to_dense(&self) -> Array2<C64> {
        let d = self.dim();
        let mut m = Array2::zeros((d, d));
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] = v;
        }
        m
    }

    /// `y += alpha * self . x` for a dense vector.
    pub fn apply_vec(&self, x: &[C64], y: &mut [C64], alpha: C64) {
        for &(r, c, v) in &self.entries {
            y[r as usize] += alpha * v * x[c as usize];
        }
    }

    /// Dense product `self . m`.
    pub fn mul_dense(&self, m: &Array2<C64>) -> Array2<C64> {
        let d = self.dim();
        let cols = m.ncols();
        let mut out = Array2::zeros((d, cols));
        for &(r, c, v) in &self.entries {
            let src = m.row(c as usize);
            let mut dst = out.row_mut(r as usize);
            for j in 0..cols {
                dst[j] += v * src[j];
            }
        }
        out
    }

    /// Dense product `m . self`.
    pub fn mul_dense_right(&self, m: &Array2<C64>) -> Array2<C64> {
        let rows = m.nrows();
        let d = self.dim();
        let mut out = Array2::zeros((rows, d));
        for &(r, c, v) in &self.entries {
            let src = m.column(r as usize);
            let mut dst = out.column_mut(c as usize);
            for i in 0..rows {
                dst[i] += v * src[i];
            }
        }
        out
    }

    /// Frobenius norm of `self - other`.
    pub fn diff_norm(&self, other: &Operator) -> f64 {
        let a = self.to_dense();
        let b = other.to_dense();
        (&a - &b).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Embed a local operator on one slot: `local ⊗ I`, restricted to the
/// retained basis. Matrix elements whose source or target state falls outside
/// an excitation cap are dropped.
pub fn embed(
    local: &Array2<C64>,
    slot_index: usize,
    space: &Arc<HilbertSpace>,
) -> Result<Operator, SimError> {
    let sd = space.slots[slot_index].dim();
    if local.nrows() != sd || local.ncols() != sd {
        return Err(SimError::DimensionMismatch(format!(
            "local operator {}x{} vs slot dim {}",
            local.nrows(),
            local.ncols(),
            sd
        )));
    }
    product_embed(&[(slot_index, local)], space)
}

/// Embed a product of local operators acting on distinct slots,
/// `A_1 ⊗ A_2 ⊗ … ⊗ I`, restricted to the retained basis.
///
/// The product is formed on the uncapped product space before restriction, so
/// excitation-conserving cross-slot terms (for example `a |e⟩⟨1|`) keep the
/// matrix elements that pass through over-cap intermediate states. Composing
/// already-restricted single-slot embeds would silently drop those paths.
pub fn product_embed(
    factors: &[(usize, &Array2<C64>)],
    space: &Arc<HilbertSpace>,
) -> Result<Operator, SimError> {
    for &(slot, m) in factors {
        if slot >= space.slots.len() {
            return Err(SimError::DimensionMismatch(format!(
                "slot index {slot} out of range"
            )));
        }
        let sd = space.slots[slot].dim();
        if m.nrows() != sd || m.ncols() != sd {
            return Err(SimError::DimensionMismatch(format!(
                "factor on slot {slot}: {}x{} vs slot dim {sd}",
                m.nrows(),
                m.ncols()
            )));
        }
        if factors.iter().filter(|&&(s, _)| s == slot).count() > 1 {
            return Err(SimError::DimensionMismatch(format!(
                "slot {slot} appears twice in product_embed"
            )));
        }
    }

    let mut entries = Vec::new();
    let mut target = Vec::new();
    for (col, src) in (0..space.dim()).map(|i| (i, space.state(i))) {
        // enumerate nonzero target levels per factor
        let mut stack: Vec<(usize, Vec<u8>, C64)> = vec![(0, src.to_vec(), C64::new(1.0, 0.0))];
        while let Some((fi, multi, amp)) = stack.pop() {
            if fi == factors.len() {
                target.clear();
                target.extend_from_slice(&multi);
                if let Some(row) = space.find(&target) {
                    entries.push((row as u32, col as u32, amp));
                }
                continue;
            }
            let (slot, m) = factors[fi];
            let s_k = multi[slot] as usize;
            for t_k in 0..m.nrows() {
                let v = m[(t_k, s_k)];
                if v.norm() > 0.0 {
                    let mut next = multi.clone();
                    next[slot] = t_k as u8;
                    stack.push((fi + 1, next, amp * v));
                }
            }
        }
    }
    let label = factors
        .iter()
        .map(|&(s, _)| format!("slot{s}"))
        .collect::<Vec<_>>()
        .join("*");
    Ok(Operator::from_coo(space.clone(), entries, &label))
}

/// Truncated annihilation operator on a mode slot.
pub fn annihilator(space: &Arc<HilbertSpace>, slot_index: usize) -> Result<Operator, SimError> {
    let n_max = match &space.slots[slot_index] {
        Slot::Mode { n_max, .. } => *n_max,
        _ => return Err(SimError::NotAMode(slot_index)),
    };
    let d = n_max as usize + 1;
    let mut local = Array2::zeros((d, d));
    for n in 1..=n_max as usize {
        local[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let mut op = embed(&local, slot_index, space)?;
    op.label = format!("a[{}]", space.slots[slot_index].name());
    Ok(op)
}

/// Transition operator `|upper⟩⟨lower|` on an atom slot.
pub fn transition(
    space: &Arc<HilbertSpace>,
    slot_index: usize,
    upper: &str,
    lower: &str,
) -> Result<Operator, SimError> {
    let slot = &space.slots[slot_index];
    if slot.is_mode() {
        return Err(SimError::NotAnAtom(slot_index));
    }
    let up = slot
        .level_index(upper)
        .ok_or_else(|| SimError::UnknownLevel {
            slot: slot_index,
            level: upper.to_string(),
        })?;
    let lo = slot
        .level_index(lower)
        .ok_or_else(|| SimError::UnknownLevel {
            slot: slot_index,
            level: lower.to_string(),
        })?;
    let d = slot.dim();
    let mut local = Array2::zeros((d, d));
    local[(up as usize, lo as usize)] = C64::new(1.0, 0.0);
    let mut op = embed(&local, slot_index, space)?;
    op.label = format!("|{upper}><{lower}|[{}]", slot.name());
    Ok(op)
}

/// Dense Hermitian state on a [`HilbertSpace`].
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub space: Arc<HilbertSpace>,
    pub data: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(space: Arc<HilbertSpace>, data: Array2<C64>) -> Result<Self, SimError> {
        if data.nrows() != space.dim() || data.ncols() != space.dim() {
            return Err(SimError::DimensionMismatch(format!(
                "density matrix {}x{} vs space dim {}",
                data.nrows(),
                data.ncols(),
                space.dim()
            )));
        }
        Ok(DensityMatrix { space, data })
    }

    /// Pure state from a normalized amplitude vector.
    pub fn pure(space: Arc<HilbertSpace>, psi: &[C64]) -> Result<Self, SimError> {
        if psi.len() != space.dim() {
            return Err(SimError::DimensionMismatch(format!(
                "state vector length {} vs space dim {}",
                psi.len(),
                space.dim()
            )));
        }
        let d = psi.len();
        let mut data = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                data[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        Ok(DensityMatrix { space, data })
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn max_hermiticity_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.data.nrows() {
            for j in i..self.data.ncols() {
                let dev = (self.data[(i, j)] - self.data[(j, i)].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }
}

/// Trace out all slots not in `keep`, lifting through any excitation cap.
///
/// The capped basis is a subset of the full product basis, so lifting amounts
/// to treating excluded states as zero-amplitude; the reduced state lives on
/// an uncapped space over the kept slots.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix, SimError> {
    if keep.is_empty() {
        return Err(SimError::InvalidSpace("empty keep set".into()));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if *keep_sorted.last().unwrap() >= rho.space.slots.len() {
        return Err(SimError::InvalidSpace("keep index out of range".into()));
    }

    let kept_slots: Vec<Slot> = keep_sorted
        .iter()
        .map(|&i| rho.space.slots[i].clone())
        .collect();
    let out_space = build_space(kept_slots, None)?;
    let drop: Vec<usize> = (0..rho.space.slots.len())
        .filter(|i| !keep_sorted.contains(i))
        .collect();

    let d = rho.space.dim();
    let mut out = Array2::zeros((out_space.dim(), out_space.dim()));
    let mut ki = Vec::new();
    let mut kj = Vec::new();
    for i in 0..d {
        let si = rho.space.state(i);
        for j in 0..d {
            let sj = rho.space.state(j);
            if drop.iter().any(|&k| si[k] != sj[k]) {
                continue;
            }
            ki.clear();
            ki.extend(keep_sorted.iter().map(|&k| si[k]));
            kj.clear();
            kj.extend(keep_sorted.iter().map(|&k| sj[k]));
            let r = out_space.find(&ki).unwrap();
            let c = out_space.find(&kj).unwrap();
            out[(r, c)] += rho.data[(i, j)];
        }
    }
    DensityMatrix::new(out_space, out)
}

/// Project one atom slot onto a named level and drop that slot.
///
/// Returns the normalized conditional state on the remaining slots and the
/// projection probability. Fails with [`SimError::HeraldImpossible`] when the
/// probability is below [`HERALD_EPS`].
pub fn herald_project(
    rho: &DensityMatrix,
    slot_index: usize,
    level: &str,
) -> Result<(DensityMatrix, f64), SimError> {
    let slot = &rho.space.slots[slot_index];
    let lv = slot
        .level_index(level)
        .ok_or_else(|| SimError::UnknownLevel {
            slot: slot_index,
            level: level.to_string(),
        })?;

    let remaining: Vec<Slot> = rho
        .space
        .slots
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != slot_index)
        .map(|(_, s)| s.clone())
        .collect();
    let out_space = build_space(remaining, None)?;

    let d = rho.space.dim();
    let mut prob = 0.0;
    let mut out = Array2::zeros((out_space.dim(), out_space.dim()));
    let mut ri = Vec::new();
    let mut rj = Vec::new();
    for i in 0..d {
        let si = rho.space.state(i);
        if si[slot_index] != lv {
            continue;
        }
        prob += rho.data[(i, i)].re;
        for j in 0..d {
            let sj = rho.space.state(j);
            if sj[slot_index] != lv {
                continue;
            }
            ri.clear();
            ri.extend(
                si.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != slot_index)
                    .map(|(_, &v)| v),
            );
            rj.clear();
            rj.extend(
                sj.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != slot_index)
                    .map(|(_, &v)| v),
            );
            let r = out_space.find(&ri).unwrap();
            let c = out_space.find(&rj).unwrap();
            out[(r, c)] = rho.data[(i, j)];
        }
    }
    if prob < HERALD_EPS {
        return Err(SimError::HeraldImpossible { prob });
    }
    out.mapv_inplace(|v| v / prob);
    Ok((DensityMatrix::new(out_space, out)?, prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn atom_cavity(cap: Option<u32>) -> Arc<HilbertSpace> {
        build_space(
            vec![Slot::atom("q1", &["1", "e"]), Slot::mode("cav", 1)],
            cap,
        )
        .unwrap()
    }

    #[test]
    fn annihilator_has_sqrt_n_elements() {
        let space = build_space(vec![Slot::mode("cav", 3)], None).unwrap();
        let a = annihilator(&space, 0).unwrap().to_dense();
        for n in 1..=3usize {
            assert!((a[(n - 1, n)].re - (n as f64).sqrt()).abs() < 1e-14);
        }
        assert!((0..4).all(|n| a[(n, n)].norm() == 0.0));
    }

    #[test]
    fn transition_adjoint_swaps_levels() {
        let space = atom_cavity(None);
        let up = transition(&space, 0, "e", "1").unwrap();
        let down = transition(&space, 0, "1", "e").unwrap();
        assert!(up.adjoint().diff_norm(&down) < 1e-14);
    }

    #[test]
    fn product_embed_keeps_paths_through_over_cap_states() {
        // absorption a |e><1| conserves excitation, but one factor order of
        // composed single-slot embeds passes through a two-excitation
        // intermediate that a capped basis does not contain
        let space = atom_cavity(Some(1));
        let sp = array![[c(0.0), c(0.0)], [c(1.0), c(0.0)]]; // |e><1|
        let a = array![[c(0.0), c(1.0)], [c(0.0), c(0.0)]]; // photon annihilation
        let joint = product_embed(&[(0, &sp), (1, &a)], &space).unwrap();
        let composed = embed(&a, 1, &space)
            .unwrap()
            .matmul(&embed(&sp, 0, &space).unwrap());
        let i_in = space
            .find(&[0, 1]) // |1, one photon>
            .unwrap();
        let i_out = space.find(&[1, 0]).unwrap(); // |e, vacuum>
        assert!((joint.to_dense()[(i_out, i_in)] - c(1.0)).norm() < 1e-14);
        assert_eq!(composed.to_dense()[(i_out, i_in)], c(0.0));
    }

    #[test]
    fn excitation_cap_restricts_basis() {
        let capped = atom_cavity(Some(1));
        assert_eq!(capped.dim(), 3);
        assert!(capped.find(&[1, 1]).is_none()); // |e, photon> carries 2
        let full = atom_cavity(None);
        assert_eq!(full.dim(), 4);
        assert!(full.find(&[1, 1]).is_some());
    }

    #[test]
    fn duplicate_levels_are_rejected() {
        assert!(build_space(vec![Slot::atom("q", &["0", "0"])], None).is_err());
    }

    #[test]
    fn herald_projection_conditions_and_normalizes() {
        let space = build_space(
            vec![Slot::atom("aux", &["g", "f"]), Slot::mode("cav", 1)],
            None,
        )
        .unwrap();
        // sqrt(1/4)|g,0> + sqrt(3/4)|f,1>
        let mut psi = vec![c(0.0); space.dim()];
        psi[space.find(&[0, 0]).unwrap()] = c(0.5);
        psi[space.find(&[1, 1]).unwrap()] = c(0.75f64.sqrt());
        let rho = DensityMatrix::pure(space, &psi).unwrap();
        let (cond, p) = herald_project(&rho, 0, "g").unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        assert!((cond.trace().re - 1.0).abs() < 1e-12);
        assert!((cond.data[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herald_projection_fails_on_empty_branch() {
        let space = build_space(
            vec![Slot::atom("aux", &["g", "f"]), Slot::mode("cav", 1)],
            None,
        )
        .unwrap();
        let mut psi = vec![c(0.0); space.dim()];
        psi[space.find(&[1, 0]).unwrap()] = c(1.0);
        let rho = DensityMatrix::pure(space, &psi).unwrap();
        assert!(matches!(
            herald_project(&rho, 0, "g"),
            Err(SimError::HeraldImpossible { .. })
        ));
    }

    #[test]
    fn partial_trace_of_product_state_factorizes() {
        let space = atom_cavity(None);
        let mut psi = vec![c(0.0); space.dim()];
        // (|1> + |e>)/sqrt2 (x) |0 photons>
        psi[space.find(&[0, 0]).unwrap()] = c(1.0 / 2.0f64.sqrt());
        psi[space.find(&[1, 0]).unwrap()] = c(1.0 / 2.0f64.sqrt());
        let rho = DensityMatrix::pure(space, &psi).unwrap();
        let atom = partial_trace(&rho, &[0]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((atom.data[(a, b)].re - 0.5).abs() < 1e-12);
            }
        }
        let cav = partial_trace(&rho, &[1]).unwrap();
        assert!((cav.data[(0, 0)].re - 1.0).abs() < 1e-12);
    }
}
