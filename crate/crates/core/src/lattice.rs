//! The knot lattice chain complex of a negative-definite forest.
//!
//! Generators are U^j[K,E] with K a characteristic vector on the framed
//! vertices, E a subset of framed vertices and j ≥ 0 a U-power; chains carry
//! F₂ coefficients. Everything is driven by the minimizers
//!
//! ```text
//! f[K,I] = (K(Σ_{u∈I} u) + (Σ_{u∈I} u)²) / 2      g[K,E] = min_{I⊆E} f[K,I]
//! ```
//!
//! The differential removes one vertex of E at a time:
//!
//! ```text
//! ∂ U^j[K,E] = Σ_{v∈E} U^{j+a_v}[K, E−v] + U^{j+b_v}[K+2v*, E−v]
//! a_v = g[K,E−v] − g[K,E]     b_v = min_{I⊆E−v} f[K,I∪v] − g[K,E]
//! ```
//!
//! The Maslov grading is gr = −2j + 2g[K,E] + |E| + (K² + |Vert|)/4 and the
//! knot filtration is A = −j + ½(L(Σ) + Σ²), evaluated through the Σ-class
//! so that the two formal v0² terms cancel.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::plumbing::{
    solve_rational, Forest, ForestError, IntersectionForm, Rational, SigmaClass,
};

/// Integer valuation on the framed vertices (in framed-position order) with
/// K(v) ≡ framing(v) (mod 2).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CharVector(pub Vec<i64>);

impl fmt::Debug for CharVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K{:?}", self.0)
    }
}

/// U^j[K,E]; E is a bitmask over framed positions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Generator {
    pub k: CharVector,
    pub e: u32,
    pub j: u32,
}

impl Generator {
    pub fn new(k: CharVector, e: u32, j: u32) -> Self {
        Generator { k, e, j }
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U^{}[{:?},{:#b}]", self.j, self.k, self.e)
    }
}

/// F₂ linear combination of generators; presence means coefficient 1.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Chain {
    terms: BTreeSet<Generator>,
}

impl Chain {
    pub fn zero() -> Self {
        Chain::default()
    }

    pub fn from_gen(g: Generator) -> Self {
        let mut c = Chain::default();
        c.toggle(g);
        c
    }

    /// Add one generator mod 2.
    pub fn toggle(&mut self, g: Generator) {
        if !self.terms.remove(&g) {
            self.terms.insert(g);
        }
    }

    /// Add another chain mod 2.
    pub fn add(&mut self, other: &Chain) {
        for t in &other.terms {
            self.toggle(t.clone());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Generator> {
        self.terms.iter()
    }

    /// Multiply by U^t (shift every exponent).
    pub fn shift_u(&self, t: u32) -> Chain {
        let mut out = Chain::default();
        for g in &self.terms {
            out.toggle(Generator::new(g.k.clone(), g.e, g.j + t));
        }
        out
    }

    /// Apply a generator-to-chain map linearly.
    pub fn flat_map(&self, mut f: impl FnMut(&Generator) -> Chain) -> Chain {
        let mut out = Chain::default();
        for g in &self.terms {
            out.add(&f(g));
        }
        out
    }
}

impl fmt::Debug for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for t in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{:?}", t)?;
        }
        Ok(())
    }
}

/// A shift site: a framed vertex (by framed position) or the unframed v0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftSite {
    Framed(usize),
    V0,
}

/// Per-forest engine: precomputed intersection data plus a memo table for g.
///
/// Pure with interior mutability for the memo only; use one instance per
/// worker thread.
pub struct Lattice {
    forest: Forest,
    form: IntersectionForm,
    sigma: SigmaClass,
    minv: Vec<Vec<Rational>>,
    /// q[mask] = x_maskᵀ·M·x_mask for every subset of framed positions.
    subset_sq: Vec<i64>,
    g_memo: RefCell<HashMap<(u32, Vec<i64>), i64>>,
    spinc_reps: RefCell<HashMap<Vec<Rational>, CharVector>>,
}

impl Lattice {
    pub fn new(forest: &Forest) -> Result<Lattice, ForestError> {
        if !forest.is_negative_definite() {
            return Err(ForestError::NotNegativeDefinite);
        }
        let form = forest.intersection_form();
        let sigma = forest.sigma_class()?;
        let n = form.order;
        let mut minv = vec![vec![Rational::zero(); n]; n];
        for col in 0..n {
            let mut rhs = vec![Rational::zero(); n];
            rhs[col] = Rational::from(1);
            let x = solve_rational(&form.entries, &rhs)
                .ok_or_else(|| ForestError::Internal("singular definite form".into()))?;
            for row in 0..n {
                minv[row][col] = x[row];
            }
        }
        let mut subset_sq = vec![0i64; 1usize << n];
        for mask in 1u32..(1u32 << n) {
            let v = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            let mut cross = 0i64;
            let mut m = rest;
            while m != 0 {
                let u = m.trailing_zeros() as usize;
                cross += form.entries[v][u];
                m &= m - 1;
            }
            subset_sq[mask as usize] =
                subset_sq[rest as usize] + form.entries[v][v] + 2 * cross;
        }
        Ok(Lattice {
            forest: forest.clone(),
            form,
            sigma,
            minv,
            subset_sq,
            g_memo: RefCell::new(HashMap::new()),
            spinc_reps: RefCell::new(HashMap::new()),
        })
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn form(&self) -> &IntersectionForm {
        &self.form
    }

    pub fn sigma(&self) -> &SigmaClass {
        &self.sigma
    }

    /// Number of framed vertices.
    pub fn rank(&self) -> usize {
        self.form.order
    }

    pub fn full_mask(&self) -> u32 {
        ((1u64 << self.form.order) - 1) as u32
    }

    /// Characteristic vector from (vertex name, value) pairs; unset framed
    /// vertices take their framing as value.
    pub fn char_from_pairs(&self, pairs: &[(&str, i64)]) -> Result<CharVector, ForestError> {
        let mut v: Vec<i64> = self
            .forest
            .framed_vertices()
            .iter()
            .map(|&i| self.forest.framing(i).unwrap())
            .collect();
        for &(name, val) in pairs {
            let idx = self
                .forest
                .index_of(name)
                .ok_or_else(|| ForestError::UnknownVertex(name.to_owned()))?;
            let pos = self
                .forest
                .framed_pos(idx)
                .ok_or_else(|| ForestError::Internal(format!("`{name}` is unframed")))?;
            v[pos] = val;
        }
        let k = CharVector(v);
        if !self.is_characteristic(&k) {
            return Err(ForestError::Internal("parity violation".into()));
        }
        Ok(k)
    }

    /// Subset mask from vertex names; rejects v0 and unknown names.
    pub fn mask_of(&self, names: &[&str]) -> Result<u32, ForestError> {
        let mut mask = 0u32;
        for &name in names {
            let idx = self
                .forest
                .index_of(name)
                .ok_or_else(|| ForestError::UnknownVertex(name.to_owned()))?;
            let pos = self
                .forest
                .framed_pos(idx)
                .ok_or_else(|| ForestError::Internal(format!("`{name}` is unframed")))?;
            mask |= 1 << pos;
        }
        Ok(mask)
    }

    pub fn is_characteristic(&self, k: &CharVector) -> bool {
        k.0.len() == self.form.order
            && (0..self.form.order)
                .all(|p| (k.0[p] - self.form.entries[p][p]).rem_euclid(2) == 0)
    }

    /// f[K,I] = (K(Σ_{u∈I}u) + (Σ_{u∈I}u)²)/2; exact integer by parity.
    pub fn f_val(&self, k: &CharVector, i_mask: u32) -> i64 {
        let mut ksum = 0i64;
        let mut m = i_mask;
        while m != 0 {
            let p = m.trailing_zeros() as usize;
            ksum += k.0[p];
            m &= m - 1;
        }
        let tot = ksum + self.subset_sq[i_mask as usize];
        debug_assert_eq!(tot.rem_euclid(2), 0, "parity forces integrality of f");
        tot / 2
    }

    /// g[K,E] = min over I ⊆ E of f[K,I]; memoized on (E, K restricted to E).
    pub fn g_val(&self, k: &CharVector, e_mask: u32) -> i64 {
        if e_mask == 0 {
            return 0;
        }
        let mut key_vals = Vec::with_capacity(e_mask.count_ones() as usize);
        let mut m = e_mask;
        while m != 0 {
            let p = m.trailing_zeros() as usize;
            key_vals.push(k.0[p]);
            m &= m - 1;
        }
        if let Some(&v) = self.g_memo.borrow().get(&(e_mask, key_vals.clone())) {
            return v;
        }
        let mut best = 0i64; // I = ∅
        let mut sub = e_mask;
        while sub != 0 {
            best = best.min(self.f_val(k, sub));
            sub = (sub - 1) & e_mask;
        }
        self.g_memo.borrow_mut().insert((e_mask, key_vals), best);
        best
    }

    /// min over I ⊆ e_mask of f[K, I∪{v}]; `v` must not lie in `e_mask`.
    pub fn b_min(&self, k: &CharVector, e_mask: u32, v: usize) -> i64 {
        debug_assert_eq!(e_mask & (1 << v), 0);
        let vbit = 1u32 << v;
        let mut best = self.f_val(k, vbit);
        let mut sub = e_mask;
        while sub != 0 {
            best = best.min(self.f_val(k, sub | vbit));
            sub = (sub - 1) & e_mask;
        }
        best
    }

    /// K + 2t·v*: add 2t·(v·u) to K(u) for every framed u. `v` may be v0.
    pub fn shift(&self, k: &CharVector, site: ShiftSite, t: i64) -> CharVector {
        let mut out = k.0.clone();
        match site {
            ShiftSite::Framed(pos) => {
                for (u, val) in out.iter_mut().enumerate() {
                    *val += 2 * t * self.form.entries[pos][u];
                }
            }
            ShiftSite::V0 => {
                for (u, val) in out.iter_mut().enumerate() {
                    *val += 2 * t * self.form.v0_row[u];
                }
            }
        }
        CharVector(out)
    }

    /// The differential.
    pub fn boundary(&self, gen: &Generator) -> Chain {
        let mut out = Chain::zero();
        let g_full = self.g_val(&gen.k, gen.e);
        let mut m = gen.e;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            let rest = gen.e & !(1u32 << v);
            let a_v = self.g_val(&gen.k, rest) - g_full;
            let b_v = self.b_min(&gen.k, rest, v) - g_full;
            debug_assert!(a_v >= 0 && b_v >= 0);
            debug_assert!(a_v.min(b_v) == 0);
            let shifted = self.shift(&gen.k, ShiftSite::Framed(v), 1);
            // Cross-check the closed form of the U-exponent on the shifted term.
            debug_assert_eq!(
                self.b_min(&gen.k, rest, v),
                self.g_val(&shifted, rest) + (gen.k.0[v] + self.form.entries[v][v]) / 2
            );
            out.toggle(Generator::new(gen.k.clone(), rest, gen.j + a_v as u32));
            out.toggle(Generator::new(shifted, rest, gen.j + b_v as u32));
        }
        out
    }

    pub fn boundary_chain(&self, c: &Chain) -> Chain {
        c.flat_map(|g| self.boundary(g))
    }

    /// K² = Kᵀ·M⁻¹·K, exact.
    pub fn char_square(&self, k: &CharVector) -> Rational {
        let n = self.form.order;
        let mut acc = Rational::zero();
        for i in 0..n {
            let mut xi = Rational::zero();
            for j in 0..n {
                xi += self.minv[i][j] * Rational::from(k.0[j]);
            }
            acc += Rational::from(k.0[i]) * xi;
        }
        acc
    }

    /// Maslov grading gr(U^j[K,E]) = −2j + 2g[K,E] + |E| + (K² + |Vert|)/4.
    pub fn maslov(&self, gen: &Generator) -> Rational {
        let g = self.g_val(&gen.k, gen.e);
        Rational::from(-2 * gen.j as i64 + 2 * g + gen.e.count_ones() as i64)
            + (self.char_square(&gen.k) + Rational::from(self.form.order as i64)) / 4
    }

    /// Knot filtration A(U^j[K,E]) = −j + ½(L(Σ) + Σ²). The formal v0² in
    /// L(v0) cancels against the one in Σ², leaving
    /// ½(2g[K,E] − 2g[K+2v0*,E] + Σ_p a_p·K(p) + Σ²−v0²).
    pub fn alpha(&self, gen: &Generator) -> Rational {
        let g = self.g_val(&gen.k, gen.e);
        let shifted = self.shift(&gen.k, ShiftSite::V0, 1);
        let g_shift = self.g_val(&shifted, gen.e);
        let mut lk = Rational::zero();
        for (p, a) in self.sigma.coeffs.iter().enumerate() {
            lk += *a * Rational::from(gen.k.0[p]);
        }
        Rational::from(-(gen.j as i64))
            + (Rational::from(2 * (g - g_shift)) + lk + self.sigma.pairing_with_v0) / 2
    }

    /// All generators (K,E,0) with framing(v) − 2B ≤ K(v) ≤ −framing(v) + 2B,
    /// in deterministic order (K odometer, then E ascending).
    pub fn enumerate_generators(&self, margin: u32) -> Vec<Generator> {
        let (lows, counts) = self.box_ranges(margin);
        let total: usize = counts.iter().product();
        let n = self.form.order;
        let mut out = Vec::with_capacity(total << n);
        for idx in 0..total {
            let k = decode_k(idx, &lows, &counts);
            for e in 0..(1u32 << n) {
                out.push(Generator::new(CharVector(k.clone()), e, 0));
            }
        }
        out
    }

    /// Per-framed-vertex K ranges of the margin-B box: low = framing − 2B,
    /// count = −framing + 2B + 1 values in steps of 2.
    pub(crate) fn box_ranges(&self, margin: u32) -> (Vec<i64>, Vec<usize>) {
        let n = self.form.order;
        let mut lows = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for p in 0..n {
            let m = self.form.entries[p][p];
            lows.push(m - 2 * margin as i64);
            counts.push((-m + 2 * margin as i64 + 1) as usize);
        }
        (lows, counts)
    }

    /// Spin^c label of K: the coordinates of M⁻¹K reduced mod 2. Two
    /// characteristic vectors are in the same class (K + 2·row span of M) iff
    /// their labels agree.
    pub fn sector_label(&self, k: &CharVector) -> Vec<Rational> {
        let n = self.form.order;
        let mut label = Vec::with_capacity(n);
        for i in 0..n {
            let mut xi = Rational::zero();
            for j in 0..n {
                xi += self.minv[i][j] * Rational::from(k.0[j]);
            }
            let two = Rational::from(2);
            let m = xi - two * (xi / two).floor();
            label.push(m);
        }
        label
    }

    /// Canonical Spin^c representative: the lexicographically least coset
    /// element inside the margin-0 box. Every class has one (the maximizer of
    /// K² over the coset lies in that box).
    pub fn spinc_class(&self, k: &CharVector) -> CharVector {
        let label = self.sector_label(k);
        if let Some(rep) = self.spinc_reps.borrow().get(&label) {
            return rep.clone();
        }
        // Fill the table from the margin-0 box in one pass.
        {
            let (lows, counts) = self.box_ranges(0);
            let total: usize = counts.iter().product();
            let mut reps = self.spinc_reps.borrow_mut();
            for idx in 0..total {
                let cand = CharVector(decode_k(idx, &lows, &counts));
                let l = self.sector_label(&cand);
                match reps.get_mut(&l) {
                    Some(best) => {
                        if cand < *best {
                            *best = cand;
                        }
                    }
                    None => {
                        reps.insert(l, cand);
                    }
                }
            }
        }
        self.spinc_reps
            .borrow()
            .get(&label)
            .cloned()
            .expect("every characteristic class has a margin-0 representative")
    }

    /// Truncated homology: open-boundary differential on the (margin, u_cap)
    /// box, dimensions per (Spin^c, grading), with a per-row stability flag
    /// (true iff unchanged at (margin+1, u_cap+1)).
    pub fn truncated_homology(&self, margin: u32, u_cap: u32) -> HomologyReport {
        let fine = BoxComplex::build(self, margin, u_cap);
        let coarse = BoxComplex::build(self, margin + 1, u_cap + 1);
        let dims = fine.homology_dims();
        let dims2 = coarse.homology_dims();
        let mut sectors: BTreeMap<CharVector, Vec<HomologyRow>> = BTreeMap::new();
        for ((rep, grading), dim) in &dims {
            let stable = dims2.get(&(rep.clone(), *grading)).copied().unwrap_or(0) == *dim;
            sectors.entry(rep.clone()).or_default().push(HomologyRow {
                grading: *grading,
                dim: *dim,
                stable,
            });
        }
        HomologyReport {
            margin,
            u_cap,
            sectors: sectors
                .into_iter()
                .map(|(rep, rows)| SectorHomology {
                    spinc: rep.0,
                    rows,
                })
                .collect(),
        }
    }

    /// Filtration profile: for each (Spin^c, grading), the homology dimension
    /// of the sublevel complexes {A ≤ a} as a step function of a (jump list),
    /// with the same stability flag.
    pub fn filtration_profile(&self, margin: u32, u_cap: u32) -> FiltrationReport {
        let fine = BoxComplex::build(self, margin, u_cap);
        let coarse = BoxComplex::build(self, margin + 1, u_cap + 1);
        let rows = fine.filtration_rows();
        let rows2 = coarse.filtration_rows();
        let mut sectors: BTreeMap<CharVector, Vec<FiltrationRow>> = BTreeMap::new();
        for ((rep, grading), jumps) in &rows {
            let stable = rows2.get(&(rep.clone(), *grading)) == Some(jumps);
            sectors.entry(rep.clone()).or_default().push(FiltrationRow {
                grading: *grading,
                jumps: jumps.clone(),
                stable,
            });
        }
        FiltrationReport {
            margin,
            u_cap,
            sectors: sectors
                .into_iter()
                .map(|(rep, rows)| SectorFiltration {
                    spinc: rep.0,
                    rows,
                })
                .collect(),
        }
    }
}

fn decode_k(mut idx: usize, lows: &[i64], counts: &[usize]) -> Vec<i64> {
    let mut k = Vec::with_capacity(lows.len());
    for p in 0..lows.len() {
        let pos = idx % counts[p];
        idx /= counts[p];
        k.push(lows[p] + 2 * pos as i64);
    }
    k
}

#[derive(Debug, Clone, Serialize)]
pub struct HomologyReport {
    pub margin: u32,
    pub u_cap: u32,
    pub sectors: Vec<SectorHomology>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorHomology {
    pub spinc: Vec<i64>,
    pub rows: Vec<HomologyRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomologyRow {
    pub grading: Rational,
    pub dim: i64,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FiltrationReport {
    pub margin: u32,
    pub u_cap: u32,
    pub sectors: Vec<SectorFiltration>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SectorFiltration {
    pub spinc: Vec<i64>,
    pub rows: Vec<FiltrationRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FiltrationRow {
    pub grading: Rational,
    /// (alpha, dimension) at each alpha where the sublevel dimension changes.
    pub jumps: Vec<(Rational, i64)>,
    pub stable: bool,
}

/// Incremental F₂ row-space basis for rank computations.
pub(crate) struct F2Basis {
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl F2Basis {
    pub fn new() -> Self {
        F2Basis {
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Insert a row; returns true if it was independent.
    pub fn insert(&mut self, mut row: Vec<u64>) -> bool {
        loop {
            let Some(lead) = row
                .iter()
                .enumerate()
                .find(|(_, w)| **w != 0)
                .map(|(i, w)| (i << 6) + w.trailing_zeros() as usize)
            else {
                return false;
            };
            match self.pivots.iter().position(|&p| p == lead) {
                Some(i) => {
                    let basis_row = self.rows[i].clone();
                    for (a, b) in row.iter_mut().zip(basis_row) {
                        *a ^= b;
                    }
                }
                None => {
                    self.rows.push(row);
                    self.pivots.push(lead);
                    return true;
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// One boxed instance of the complex: (K,E) pairs in the margin box crossed
/// with U-powers j < u_cap, with the open-boundary differential.
struct BoxComplex<'a> {
    lat: &'a Lattice,
    u_cap: u32,
    n: usize,
    lows: Vec<i64>,
    counts: Vec<usize>,
    total_k: usize,
    /// Spin^c representative per sector id.
    reps: Vec<CharVector>,
    /// sector id per k index.
    sector: Vec<u32>,
    /// gr at j=0 per (k_idx << n | e).
    core_gr: Vec<Rational>,
    terms: Vec<Vec<BTerm>>,
}

#[derive(Clone, Copy)]
struct BTerm {
    pair: u32,
    exp: u32,
}

impl<'a> BoxComplex<'a> {
    fn build(lat: &'a Lattice, margin: u32, u_cap: u32) -> Self {
        let n = lat.form.order;
        let (lows, counts) = lat.box_ranges(margin);
        let total_k: usize = counts.iter().product();
        let mut reps: Vec<CharVector> = Vec::new();
        let mut rep_ids: HashMap<CharVector, u32> = HashMap::new();
        let mut sector = Vec::with_capacity(total_k);
        for idx in 0..total_k {
            let k = CharVector(decode_k(idx, &lows, &counts));
            let rep = lat.spinc_class(&k);
            let id = *rep_ids.entry(rep.clone()).or_insert_with(|| {
                reps.push(rep.clone());
                (reps.len() - 1) as u32
            });
            sector.push(id);
        }

        let pairs = total_k << n;
        let mut core_gr = vec![Rational::zero(); pairs];
        let mut terms: Vec<Vec<BTerm>> = vec![Vec::new(); pairs];
        for idx in 0..total_k {
            let kvec = decode_k(idx, &lows, &counts);
            let k = CharVector(kvec.clone());
            let ksq = lat.char_square(&k);
            for e in 0..(1u32 << n) {
                let pair = (idx << n) | e as usize;
                let gv = lat.g_val(&k, e);
                core_gr[pair] = Rational::from(2 * gv + e.count_ones() as i64)
                    + (ksq + Rational::from(n as i64)) / 4;
                let mut m = e;
                while m != 0 {
                    let v = m.trailing_zeros() as usize;
                    m &= m - 1;
                    let rest = e & !(1u32 << v);
                    let a_v = (lat.g_val(&k, rest) - gv) as u32;
                    let b_v = (lat.b_min(&k, rest, v) - gv) as u32;
                    terms[pair].push(BTerm {
                        pair: ((idx << n) | rest as usize) as u32,
                        exp: a_v,
                    });
                    // Shifted K: in box iff the v-coordinate stays in range
                    // (other coordinates move by 2·adjacency; check all).
                    let shifted = lat.shift(&k, ShiftSite::Framed(v), 1);
                    if let Some(sidx) = encode_k(&shifted.0, &lows, &counts) {
                        terms[pair].push(BTerm {
                            pair: ((sidx << n) | rest as usize) as u32,
                            exp: b_v,
                        });
                    }
                }
            }
        }
        BoxComplex {
            lat,
            u_cap,
            n,
            lows,
            counts,
            total_k,
            reps,
            sector,
            core_gr,
            terms,
        }
    }

    /// Blocks keyed by (sector id, grading); each holds (pair, j) members.
    fn blocks(&self) -> BTreeMap<(u32, Rational), Vec<(u32, u32)>> {
        let mut blocks: BTreeMap<(u32, Rational), Vec<(u32, u32)>> = BTreeMap::new();
        for pair in 0..(self.total_k << self.n) {
            let s = self.sector[pair >> self.n];
            for j in 0..self.u_cap {
                let grading = self.core_gr[pair] - Rational::from(2 * j as i64);
                blocks
                    .entry((s, grading))
                    .or_default()
                    .push((pair as u32, j));
            }
        }
        blocks
    }

    /// Column of the boxed differential for generator (pair, j), as block
    /// coordinates resolved through `pos`: target block positions.
    fn column(
        &self,
        pair: u32,
        j: u32,
        pos: &HashMap<(u32, u32), usize>,
        width: usize,
    ) -> Vec<u64> {
        let mut row = vec![0u64; (width + 63) / 64];
        for t in &self.terms[pair as usize] {
            let tj = j + t.exp;
            if tj >= self.u_cap {
                continue;
            }
            let p = pos[&(t.pair, tj)];
            row[p >> 6] ^= 1u64 << (p & 63);
        }
        row
    }

    /// dim ker − dim im per (sector representative, grading).
    fn homology_dims(&self) -> BTreeMap<(CharVector, Rational), i64> {
        let blocks = self.blocks();
        // Rank of D restricted to each source block.
        let mut rank_from: HashMap<(u32, Rational), usize> = HashMap::new();
        for (&(s, grading), members) in &blocks {
            let target_key = (s, grading - Rational::from(1));
            let Some(target) = blocks.get(&target_key) else {
                // No target block: D vanishes there (any terms would have
                // landed in it).
                rank_from.insert((s, grading), 0);
                continue;
            };
            let pos: HashMap<(u32, u32), usize> = target
                .iter()
                .enumerate()
                .map(|(i, &(p, j))| ((p, j), i))
                .collect();
            let mut basis = F2Basis::new();
            for &(p, j) in members {
                basis.insert(self.column(p, j, &pos, target.len()));
            }
            rank_from.insert((s, grading), basis.rank());
        }
        let mut dims = BTreeMap::new();
        for (&(s, grading), members) in &blocks {
            let r_out = rank_from[&(s, grading)];
            let r_in = rank_from
                .get(&(s, grading + Rational::from(1)))
                .copied()
                .unwrap_or(0);
            let dim = members.len() as i64 - r_out as i64 - r_in as i64;
            if dim != 0 {
                dims.insert((self.reps[s as usize].clone(), grading), dim);
            }
        }
        dims
    }

    fn alpha_of(&self, pair: u32, j: u32) -> Rational {
        let idx = pair as usize >> self.n;
        let e = (pair as usize & ((1 << self.n) - 1)) as u32;
        let k = CharVector(decode_k(idx, &self.lows, &self.counts));
        self.lat.alpha(&Generator::new(k, e, j))
    }

    /// Sublevel homology dimensions as jump lists per (sector rep, grading).
    fn filtration_rows(&self) -> BTreeMap<(CharVector, Rational), Vec<(Rational, i64)>> {
        let blocks = self.blocks();
        // Per block: members sorted by alpha.
        let mut sorted: HashMap<(u32, Rational), Vec<(Rational, u32, u32)>> = HashMap::new();
        let mut sector_levels: HashMap<u32, BTreeSet<Rational>> = HashMap::new();
        for (&(s, grading), members) in &blocks {
            let mut v: Vec<(Rational, u32, u32)> = members
                .iter()
                .map(|&(p, j)| (self.alpha_of(p, j), p, j))
                .collect();
            v.sort();
            for (a, _, _) in &v {
                sector_levels.entry(s).or_default().insert(*a);
            }
            sorted.insert((s, grading), v);
        }

        // Incremental per-block state: pointer + elimination basis + rank
        // history at each sector level.
        struct BlockState {
            ptr: usize,
            basis: F2Basis,
            pos: Option<HashMap<(u32, u32), usize>>,
            width: usize,
            counts_at: Vec<usize>,
            ranks_at: Vec<usize>,
        }
        let mut states: HashMap<(u32, Rational), BlockState> = HashMap::new();
        for (&(s, grading), _) in &blocks {
            let target = blocks.get(&(s, grading - Rational::from(1)));
            let (pos, width) = match target {
                Some(t) => (
                    Some(
                        t.iter()
                            .enumerate()
                            .map(|(i, &(p, j))| ((p, j), i))
                            .collect::<HashMap<_, _>>(),
                    ),
                    t.len(),
                ),
                None => (None, 0),
            };
            states.insert(
                (s, grading),
                BlockState {
                    ptr: 0,
                    basis: F2Basis::new(),
                    pos,
                    width,
                    counts_at: Vec::new(),
                    ranks_at: Vec::new(),
                },
            );
        }

        // Advance all blocks of each sector through the sector's alpha levels.
        for (&(s, grading), st) in states.iter_mut() {
            let levels = match sector_levels.get(&s) {
                Some(l) => l,
                None => continue,
            };
            let members = &sorted[&(s, grading)];
            for a in levels {
                while st.ptr < members.len() && members[st.ptr].0 <= *a {
                    let (_, p, j) = members[st.ptr];
                    if let Some(pos) = &st.pos {
                        let col = self.column(p, j, pos, st.width);
                        st.basis.insert(col);
                    }
                    st.ptr += 1;
                }
                st.counts_at.push(st.ptr);
                st.ranks_at.push(st.basis.rank());
            }
        }

        let mut rows = BTreeMap::new();
        for (&(s, grading), members) in &blocks {
            let levels: Vec<Rational> = match sector_levels.get(&s) {
                Some(l) => l.iter().copied().collect(),
                None => continue,
            };
            let st = &states[&(s, grading)];
            let st_up = states.get(&(s, grading + Rational::from(1)));
            let mut jumps: Vec<(Rational, i64)> = Vec::new();
            for (li, a) in levels.iter().enumerate() {
                let cnt = st.counts_at[li] as i64;
                let r_out = st.ranks_at[li] as i64;
                let r_in = st_up.map(|u| u.ranks_at[li] as i64).unwrap_or(0);
                let dim = cnt - r_out - r_in;
                if jumps.last().map(|&(_, d)| d) != Some(dim) {
                    jumps.push((*a, dim));
                }
            }
            // Drop a leading run of zero dimension; trailing zeros after a
            // change are genuine.
            while jumps.first().map(|&(_, d)| d) == Some(0) {
                jumps.remove(0);
            }
            if !jumps.is_empty() {
                rows.insert((self.reps[s as usize].clone(), grading), jumps);
            }
            let _ = members;
        }
        rows
    }
}

fn encode_k(k: &[i64], lows: &[i64], counts: &[usize]) -> Option<usize> {
    let mut idx = 0usize;
    let mut mul = 1usize;
    for p in 0..k.len() {
        let off = k[p] - lows[p];
        if off < 0 || off % 2 != 0 {
            return None;
        }
        let pos = (off / 2) as usize;
        if pos >= counts[p] {
            return None;
        }
        idx += pos * mul;
        mul *= counts[p];
    }
    Some(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(doc: &str) -> Lattice {
        Lattice::new(&doc.parse::<Forest>().unwrap()).unwrap()
    }

    #[test]
    fn f_examples() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let k = l.char_from_pairs(&[("v", 1)]).unwrap();
        assert_eq!(l.f_val(&k, 0), 0);
        assert_eq!(l.f_val(&k, 1), 0);

        let l = lat("vertex k unframed\nvertex v -1\nvertex w -3\nedge k v\nedge v w\n");
        let k = l.char_from_pairs(&[("v", 1), ("w", -3)]).unwrap();
        let vw = l.mask_of(&["v", "w"]).unwrap();
        assert_eq!(l.f_val(&k, vw), -2);
    }

    #[test]
    fn g_examples() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let k = l.char_from_pairs(&[("v", 1)]).unwrap();
        assert_eq!(l.g_val(&k, 0), 0);
        assert_eq!(l.g_val(&k, 1), 0);

        let l = lat("vertex k unframed\nvertex v -2\nedge k v\n");
        let k = l.char_from_pairs(&[("v", 0)]).unwrap();
        assert_eq!(l.g_val(&k, 1), -1);
    }

    #[test]
    fn g_matches_unmemoized_scan() {
        // Independent oracle: no memoization, direct subset enumeration.
        let l = lat(
            "vertex k unframed\nvertex a -2\nvertex b -3\nvertex c -1\nvertex d -4\n\
             edge k a\nedge a b\nedge b c\nedge c d\n",
        );
        let full = l.full_mask();
        for kraw in [
            vec![-2, -3, -1, -4],
            vec![0, -1, 1, 0],
            vec![2, 3, -3, 4],
            vec![-4, 1, 1, -2],
        ] {
            let k = CharVector(kraw);
            assert!(l.is_characteristic(&k));
            for e in 0..=full {
                let mut best = 0;
                let mut sub = e;
                loop {
                    let mut ksum = 0;
                    let mut xi = vec![0i64; l.rank()];
                    for p in 0..l.rank() {
                        if sub & (1 << p) != 0 {
                            ksum += k.0[p];
                            xi[p] = 1;
                        }
                    }
                    let sq = crate::plumbing::pairing(l.form(), &xi, &xi).unwrap();
                    best = best.min((ksum + sq) / 2);
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & e;
                }
                assert_eq!(l.g_val(&k, e), best);
            }
        }
    }

    #[test]
    fn shift_examples() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let k = l.char_from_pairs(&[("v", 1)]).unwrap();
        // t = 0 is the identity
        assert_eq!(l.shift(&k, ShiftSite::Framed(0), 0), k);
        // shift at v0 adds 2 per adjacency
        assert_eq!(l.shift(&k, ShiftSite::V0, 1).0, vec![3]);

        // (K,p,q,l)+2e* = (K,p+2,q+2,l−2) on v(−3)—e(−1)—w(−4)
        let l = lat(
            "vertex k unframed\nvertex v -3\nvertex e -1\nvertex w -4\n\
             edge k v\nedge v e\nedge e w\n",
        );
        let k = l
            .char_from_pairs(&[("v", 1), ("e", -1), ("w", 0)])
            .unwrap();
        let e_pos = l.forest().framed_pos(l.forest().index_of("e").unwrap()).unwrap();
        let shifted = l.shift(&k, ShiftSite::Framed(e_pos), 1);
        let get = |kk: &CharVector, name: &str| {
            kk.0[l
                .forest()
                .framed_pos(l.forest().index_of(name).unwrap())
                .unwrap()]
        };
        assert_eq!(get(&shifted, "v"), 3);
        assert_eq!(get(&shifted, "w"), 2);
        assert_eq!(get(&shifted, "e"), -3);
    }

    #[test]
    fn boundary_examples() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        // E = ∅ → zero chain
        let k = l.char_from_pairs(&[("v", 1)]).unwrap();
        assert!(l.boundary(&Generator::new(k.clone(), 0, 0)).is_zero());

        // v(−1), K=1, E={v}: both exponents 0
        let c = l.boundary(&Generator::new(k, 1, 0));
        let terms: Vec<_> = c.iter().cloned().collect();
        assert_eq!(terms.len(), 2);
        assert!(terms.iter().all(|t| t.j == 0 && t.e == 0));
        let kvals: BTreeSet<i64> = terms.iter().map(|t| t.k.0[0]).collect();
        assert_eq!(kvals, BTreeSet::from([1, -1]));

        // v(−2), K=0, E={v}: U¹[0,∅] + U⁰[−4,∅]
        let l = lat("vertex k unframed\nvertex v -2\nedge k v\n");
        let k = l.char_from_pairs(&[("v", 0)]).unwrap();
        let c = l.boundary(&Generator::new(k, 1, 0));
        let terms: Vec<_> = c.iter().cloned().collect();
        assert_eq!(terms.len(), 2);
        let pairs: BTreeSet<(i64, u32)> = terms.iter().map(|t| (t.k.0[0], t.j)).collect();
        assert_eq!(pairs, BTreeSet::from([(0, 1), (-4, 0)]));
    }

    #[test]
    fn d_squared_zero_small_box() {
        let l = lat(
            "vertex k unframed\nvertex a -2\nvertex b -3\nedge k a\nedge a b\n",
        );
        for gen in l.enumerate_generators(2) {
            let dd = l.boundary_chain(&l.boundary(&gen));
            assert!(dd.is_zero(), "∂² ≠ 0 at {:?}", gen);
        }
    }

    #[test]
    fn char_square_examples() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let k = l.char_from_pairs(&[("v", -1)]).unwrap();
        assert_eq!(l.char_square(&k), Rational::from(-1));

        let l = lat("vertex k unframed\nvertex v -2\nedge k v\n");
        let k = l.char_from_pairs(&[("v", 0)]).unwrap();
        assert_eq!(l.char_square(&k), Rational::from(0));
    }

    #[test]
    fn maslov_examples() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let km1 = l.char_from_pairs(&[("v", -1)]).unwrap();
        assert_eq!(l.maslov(&Generator::new(km1, 0, 0)), Rational::from(0));
        let k1 = l.char_from_pairs(&[("v", 1)]).unwrap();
        assert_eq!(l.maslov(&Generator::new(k1.clone(), 1, 0)), Rational::from(1));
        assert_eq!(l.maslov(&Generator::new(k1, 1, 1)), Rational::from(-1));
    }

    #[test]
    fn alpha_examples() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let km1 = l.char_from_pairs(&[("v", -1)]).unwrap();
        assert_eq!(l.alpha(&Generator::new(km1.clone(), 0, 0)), Rational::from(0));
        let k1 = l.char_from_pairs(&[("v", 1)]).unwrap();
        assert_eq!(l.alpha(&Generator::new(k1, 0, 0)), Rational::from(1));
        // j → j+1 drops alpha by exactly 1
        assert_eq!(l.alpha(&Generator::new(km1, 0, 3)), Rational::from(-3));
    }

    #[test]
    fn enumerate_counts() {
        let l = lat("vertex k unframed\nvertex v -2\nedge k v\n");
        assert_eq!(l.enumerate_generators(0).len(), 6);

        let l = lat("vertex k unframed\n");
        assert_eq!(l.enumerate_generators(0).len(), 1);

        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        assert_eq!(l.enumerate_generators(1).len(), 8);
    }

    #[test]
    fn spinc_examples() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let a = l.spinc_class(&l.char_from_pairs(&[("v", 1)]).unwrap());
        let b = l.spinc_class(&l.char_from_pairs(&[("v", -1)]).unwrap());
        assert_eq!(a, b);

        let l = lat("vertex k unframed\nvertex v -2\nedge k v\n");
        let k0 = l.spinc_class(&CharVector(vec![0]));
        let km4 = l.spinc_class(&CharVector(vec![-4]));
        assert_eq!(k0, km4);
        let k2 = l.spinc_class(&CharVector(vec![2]));
        let km2 = l.spinc_class(&CharVector(vec![-2]));
        assert_eq!(k2, km2);
        assert_ne!(k0, k2);

        // shift-invariance
        let k = CharVector(vec![2]);
        for t in -3i64..=3 {
            let s = l.shift(&k, ShiftSite::Framed(0), t);
            assert_eq!(l.spinc_class(&s), k2);
        }
    }

    #[test]
    fn unknot_tower_head() {
        // v0—v(−1) presents the unknot in S³: top grading 0 with dim 1.
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let report = l.truncated_homology(1, 2);
        assert_eq!(report.sectors.len(), 1);
        let rows = &report.sectors[0].rows;
        let top = rows.iter().map(|r| r.grading).max().unwrap();
        assert_eq!(top, Rational::from(0));
        let top_row = rows.iter().find(|r| r.grading == top).unwrap();
        assert_eq!(top_row.dim, 1);
        assert!(top_row.stable);
    }

    #[test]
    fn empty_framed_part_homology() {
        let l = lat("vertex k unframed\n");
        let report = l.truncated_homology(1, 2);
        assert_eq!(report.sectors.len(), 1);
        let row0 = report.sectors[0]
            .rows
            .iter()
            .find(|r| r.grading == Rational::from(0))
            .unwrap();
        assert_eq!(row0.dim, 1);
    }

    #[test]
    fn unknot_filtration_jump_at_zero() {
        let l = lat("vertex k unframed\nvertex v -1\nedge k v\n");
        let report = l.filtration_profile(1, 2);
        assert_eq!(report.sectors.len(), 1);
        let row0 = report.sectors[0]
            .rows
            .iter()
            .find(|r| r.grading == Rational::from(0))
            .unwrap();
        assert!(row0.stable);
        assert_eq!(row0.jumps.first(), Some(&(Rational::from(0), 1)));
    }

    #[test]
    fn filtration_with_all_levels_recovers_homology() {
        // The last jump value at each grading equals the truncated homology
        // dimension (thresholds above max alpha see the full complex).
        let l = lat("vertex k unframed\nvertex a -2\nvertex b -3\nedge k a\nedge a b\n");
        let hom = l.truncated_homology(1, 2);
        let fil = l.filtration_profile(1, 2);
        for (hs, fs) in hom.sectors.iter().zip(fil.sectors.iter()) {
            assert_eq!(hs.spinc, fs.spinc);
            for hr in &hs.rows {
                let fr = fs.rows.iter().find(|r| r.grading == hr.grading);
                let final_dim = fr.and_then(|r| r.jumps.last()).map(|&(_, d)| d).unwrap_or(0);
                assert_eq!(final_dim, hr.dim, "grading {:?}", hr.grading);
            }
        }
    }

    #[test]
    fn u_action_shifts_gradings() {
        let l = lat("vertex k unframed\nvertex a -2\nvertex b -5\nedge k a\nedge a b\n");
        for gen in l.enumerate_generators(1).into_iter().step_by(7) {
            let up = Generator::new(gen.k.clone(), gen.e, gen.j + 1);
            assert_eq!(l.maslov(&up), l.maslov(&gen) - Rational::from(2));
            assert_eq!(l.alpha(&up), l.alpha(&gen) - Rational::from(1));
        }
    }

    #[test]
    fn grading_drop_and_filtered_differential() {
        let l = lat("vertex k unframed\nvertex a -3\nvertex b -2\nedge k a\nedge a b\n");
        for gen in l.enumerate_generators(1) {
            let gr = l.maslov(&gen);
            let al = l.alpha(&gen);
            for t in l.boundary(&gen).iter() {
                assert_eq!(l.maslov(t), gr - Rational::from(1));
                assert!(l.alpha(t) <= al);
            }
        }
    }
}
