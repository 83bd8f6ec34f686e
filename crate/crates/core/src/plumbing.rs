//! Plumbing forests: graph representation, exact intersection forms,
//! negative-definiteness, the Σ-class, and canonical forms.

use std::cell::OnceCell;
use std::collections::{HashMap, HashSet};

use num_rational::Ratio;
use thiserror::Error;

pub type Rational = Ratio<i64>;

/// Errors raised while building or analyzing a forest.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForestError {
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("no unframed vertex")]
    NoUnframed,
    #[error("more than one unframed vertex (`{0}` and `{1}`)")]
    MultipleUnframed(String, String),
    #[error("loop edge at `{0}`")]
    LoopEdge(String),
    #[error("repeated edge {0}—{1}")]
    MultiEdge(String, String),
    #[error("graph contains a cycle")]
    Cycle,
    #[error("intersection form is not negative definite")]
    NotNegativeDefinite,
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// A framed forest with exactly one unframed vertex `v0`.
///
/// Vertices are identified by name. Construction validates the structural
/// invariants (acyclic, single unframed vertex, simple edges); negative
/// definiteness is checked lazily and cached.
#[derive(Debug)]
pub struct Forest {
    names: Vec<String>,
    framings: Vec<Option<i64>>,
    /// Normalized: a < b, sorted, no duplicates.
    edges: Vec<(usize, usize)>,
    v0: usize,
    /// Indices of framed vertices in vertex order; position in this vector is
    /// the "framed position" used by intersection forms and char vectors.
    framed: Vec<usize>,
    nd: OnceCell<bool>,
}

impl Clone for Forest {
    fn clone(&self) -> Self {
        Forest {
            names: self.names.clone(),
            framings: self.framings.clone(),
            edges: self.edges.clone(),
            v0: self.v0,
            framed: self.framed.clone(),
            nd: self.nd.clone(),
        }
    }
}

impl PartialEq for Forest {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.framings == other.framings && self.edges == other.edges
    }
}
impl Eq for Forest {}

impl Forest {
    /// Build a forest from named vertices (`None` framing marks `v0`) and
    /// edges between names.
    pub fn from_parts(
        vertices: &[(&str, Option<i64>)],
        edges: &[(&str, &str)],
    ) -> Result<Forest, ForestError> {
        let mut names = Vec::with_capacity(vertices.len());
        let mut framings = Vec::with_capacity(vertices.len());
        let mut index = HashMap::new();
        for &(name, framing) in vertices {
            if index.insert(name.to_owned(), names.len()).is_some() {
                return Err(ForestError::DuplicateVertex(name.to_owned()));
            }
            names.push(name.to_owned());
            framings.push(framing);
        }
        let mut resolved = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            let ia = *index
                .get(a)
                .ok_or_else(|| ForestError::UnknownVertex(a.to_owned()))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| ForestError::UnknownVertex(b.to_owned()))?;
            resolved.push((ia, ib));
        }
        Forest::from_indexed(names, framings, resolved)
    }

    pub(crate) fn from_indexed(
        names: Vec<String>,
        framings: Vec<Option<i64>>,
        raw_edges: Vec<(usize, usize)>,
    ) -> Result<Forest, ForestError> {
        let mut v0 = None;
        for (i, f) in framings.iter().enumerate() {
            if f.is_none() {
                match v0 {
                    None => v0 = Some(i),
                    Some(prev) => {
                        return Err(ForestError::MultipleUnframed(
                            names[prev].clone(),
                            names[i].clone(),
                        ))
                    }
                }
            }
        }
        let v0 = v0.ok_or(ForestError::NoUnframed)?;

        let mut edges = Vec::with_capacity(raw_edges.len());
        let mut seen = HashSet::new();
        for (a, b) in raw_edges {
            if a == b {
                return Err(ForestError::LoopEdge(names[a].clone()));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(ForestError::MultiEdge(
                    names[e.0].clone(),
                    names[e.1].clone(),
                ));
            }
            edges.push(e);
        }
        edges.sort_unstable();

        // Acyclicity via union-find.
        let mut parent: Vec<usize> = (0..names.len()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(ForestError::Cycle);
            }
            parent[ra] = rb;
        }

        let framed = (0..names.len()).filter(|&i| i != v0).collect();
        Ok(Forest {
            names,
            framings,
            edges,
            v0,
            framed,
            nd: OnceCell::new(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn framed_count(&self) -> usize {
        self.framed.len()
    }

    /// Index of the unframed vertex.
    pub fn v0(&self) -> usize {
        self.v0
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn framing(&self, i: usize) -> Option<i64> {
        self.framings[i]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let e = (a.min(b), a.max(b));
        self.edges.binary_search(&e).is_ok()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == i {
                Some(b)
            } else if b == i {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// Vertex indices of the framed vertices, in framed-position order.
    pub fn framed_vertices(&self) -> &[usize] {
        &self.framed
    }

    /// Framed position of vertex `i`, if it is framed.
    pub fn framed_pos(&self, i: usize) -> Option<usize> {
        self.framed.iter().position(|&v| v == i)
    }

    /// True iff the framed intersection form is negative definite. Cached.
    pub fn is_negative_definite(&self) -> bool {
        *self
            .nd
            .get_or_init(|| is_negative_definite(&self.intersection_form()))
    }

    pub fn intersection_form(&self) -> IntersectionForm {
        build_intersection_form(self)
    }

    pub fn sigma_class(&self) -> Result<SigmaClass, ForestError> {
        sigma_class(self)
    }

    pub fn canonical_form(&self) -> Vec<u8> {
        canonical_form(self)
    }
}

impl std::str::FromStr for Forest {
    type Err = crate::document::DocumentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::document::parse(s)
    }
}

/// The framed intersection form of a forest: framings on the diagonal, 1 at
/// adjacent pairs; `v0_row` records adjacency of `v0` to the framed vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionForm {
    pub order: usize,
    pub entries: Vec<Vec<i64>>,
    pub v0_row: Vec<i64>,
}

pub fn build_intersection_form(forest: &Forest) -> IntersectionForm {
    let n = forest.framed_count();
    let mut entries = vec![vec![0i64; n]; n];
    for (pos, &v) in forest.framed_vertices().iter().enumerate() {
        entries[pos][pos] = forest.framing(v).expect("framed vertex");
    }
    let mut v0_row = vec![0i64; n];
    for &(a, b) in forest.edges() {
        match (forest.framed_pos(a), forest.framed_pos(b)) {
            (Some(pa), Some(pb)) => {
                entries[pa][pb] = 1;
                entries[pb][pa] = 1;
            }
            (None, Some(pb)) => v0_row[pb] = 1,
            (Some(pa), None) => v0_row[pa] = 1,
            (None, None) => unreachable!("loop at v0 rejected at construction"),
        }
    }
    IntersectionForm {
        order: n,
        entries,
        v0_row,
    }
}

/// Leading-principal-minor test in exact integer arithmetic: negative
/// definite iff (−1)^k · det(leading k×k block) > 0 for all k.
///
/// Uses fraction-free (Bareiss) elimination; the pivot after step k equals
/// the k-th leading minor.
pub fn is_negative_definite(form: &IntersectionForm) -> bool {
    let n = form.order;
    if n == 0 {
        return true;
    }
    let mut m: Vec<Vec<i128>> = form
        .entries
        .iter()
        .map(|row| row.iter().map(|&x| x as i128).collect())
        .collect();
    let mut prev_pivot: i128 = 1;
    // After k elimination steps the pivot equals the (k+1)-th leading minor;
    // negative definite needs (−1)^{k+1}·minor > 0.
    let mut sign = -1i128;
    for k in 0..n {
        let pivot = m[k][k];
        if pivot * sign <= 0 {
            return false;
        }
        sign = -sign;
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                m[i][j] = (pivot * m[i][j] - m[i][k] * m[k][j]) / prev_pivot;
            }
        }
        prev_pivot = pivot;
    }
    true
}

/// Evaluate the pairing xᵀ·M·y.
pub fn pairing(form: &IntersectionForm, x: &[i64], y: &[i64]) -> Result<i64, ForestError> {
    if x.len() != form.order || y.len() != form.order {
        return Err(ForestError::Internal(format!(
            "pairing: vector lengths {}/{} do not match order {}",
            x.len(),
            y.len(),
            form.order
        )));
    }
    let mut acc = 0i64;
    for i in 0..form.order {
        for j in 0..form.order {
            acc += x[i] * form.entries[i][j] * y[j];
        }
    }
    Ok(acc)
}

/// The class Σ = v0 + Σ aⱼ·vⱼ orthogonal to every framed vertex.
///
/// `coeffs` solves M·a = −v0_row exactly over the rationals. The two formal
/// v0² terms of the filtration formula cancel, so only `pairing_with_v0`
/// (= Σ² − v0²) is ever materialized. `self_term` is the same quantity
/// computed along the direct expansion of Σ²; the constructor asserts the two
/// routes agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaClass {
    pub coeffs: Vec<Rational>,
    pub pairing_with_v0: Rational,
    pub self_term: Rational,
}

pub fn sigma_class(forest: &Forest) -> Result<SigmaClass, ForestError> {
    if !forest.is_negative_definite() {
        return Err(ForestError::NotNegativeDefinite);
    }
    let form = forest.intersection_form();
    let n = form.order;
    let rhs: Vec<Rational> = form.v0_row.iter().map(|&b| Rational::from(-b)).collect();
    let coeffs = solve_rational(&form.entries, &rhs)
        .ok_or_else(|| ForestError::Internal("singular negative definite form".into()))?;

    // Residual check: v_i·Σ = 0 exactly for every framed i.
    for i in 0..n {
        let mut acc = Rational::from(form.v0_row[i]);
        for j in 0..n {
            acc += Rational::from(form.entries[i][j]) * coeffs[j];
        }
        if acc != Rational::from(0) {
            return Err(ForestError::Internal(format!(
                "sigma residual nonzero at framed position {i}"
            )));
        }
    }

    let pairing_with_v0: Rational = (0..n)
        .map(|j| coeffs[j] * Rational::from(form.v0_row[j]))
        .sum();
    // Direct expansion of Σ² − v0²: 2·aᵀb + aᵀMa.
    let mut ata = Rational::from(0);
    for i in 0..n {
        for j in 0..n {
            ata += coeffs[i] * Rational::from(form.entries[i][j]) * coeffs[j];
        }
    }
    let self_term = Rational::from(2) * pairing_with_v0 + ata;
    debug_assert_eq!(self_term, pairing_with_v0);

    Ok(SigmaClass {
        coeffs,
        pairing_with_v0,
        self_term,
    })
}

/// Solve M·x = rhs by rational Gaussian elimination. Returns `None` if M is
/// singular.
pub(crate) fn solve_rational(m: &[Vec<i64>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let n = rhs.len();
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = m[i].iter().map(|&x| Rational::from(x)).collect();
            row.push(rhs[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| a[r][col] != Rational::from(0))?;
        a.swap(col, pivot_row);
        let pivot = a[col][col];
        for j in col..=n {
            a[col][j] /= pivot;
        }
        for r in 0..n {
            if r != col && a[r][col] != Rational::from(0) {
                let factor = a[r][col];
                for j in col..=n {
                    let sub = factor * a[col][j];
                    a[r][j] -= sub;
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n]).collect())
}

/// Canonical encoding of a forest, invariant under isomorphisms that fix `v0`
/// and the framings.
///
/// The v0-component is rooted at v0; every other component is rooted at the
/// AHU-minimal choice among its (at most two) tree centers. Components are
/// encoded as sorted recursive tuples of (framing, child encodings) and the
/// component encodings are sorted.
pub fn canonical_form(forest: &Forest) -> Vec<u8> {
    let n = forest.vertex_count();
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        comp[start] = id;
        while let Some(u) = stack.pop() {
            members.push(u);
            for w in forest.neighbors(u) {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    stack.push(w);
                }
            }
        }
        comps.push(members);
    }

    let mut encodings: Vec<Vec<u8>> = Vec::with_capacity(comps.len());
    for members in &comps {
        let enc = if members.contains(&forest.v0()) {
            encode_rooted(forest, forest.v0(), usize::MAX)
        } else {
            centers(forest, members)
                .into_iter()
                .map(|c| encode_rooted(forest, c, usize::MAX))
                .min()
                .expect("component has a center")
        };
        encodings.push(enc);
    }
    encodings.sort();
    let mut out = Vec::new();
    for e in encodings {
        out.extend_from_slice(&e);
        out.push(b'|');
    }
    out
}

fn encode_rooted(forest: &Forest, u: usize, parent: usize) -> Vec<u8> {
    let mut children: Vec<Vec<u8>> = forest
        .neighbors(u)
        .filter(|&w| w != parent)
        .map(|w| encode_rooted(forest, w, u))
        .collect();
    children.sort();
    let mut out = Vec::new();
    out.push(b'(');
    match forest.framing(u) {
        Some(f) => out.extend_from_slice(f.to_string().as_bytes()),
        None => out.push(b'u'),
    }
    for c in children {
        out.push(b',');
        out.extend_from_slice(&c);
    }
    out.push(b')');
    out
}

/// Tree centers of a component: peel leaves until 1 or 2 vertices remain.
fn centers(forest: &Forest, members: &[usize]) -> Vec<usize> {
    if members.len() <= 2 {
        return members.to_vec();
    }
    let mut degree: HashMap<usize, usize> = members
        .iter()
        .map(|&u| (u, forest.degree(u)))
        .collect();
    let mut remaining = members.len();
    let mut layer: Vec<usize> = members
        .iter()
        .copied()
        .filter(|u| degree[u] <= 1)
        .collect();
    let mut removed: HashSet<usize> = HashSet::new();
    while remaining > 2 {
        let mut next = Vec::new();
        for &u in &layer {
            removed.insert(u);
            remaining -= 1;
            for w in forest.neighbors(u) {
                if removed.contains(&w) {
                    continue;
                }
                let d = degree.get_mut(&w).expect("neighbor in component");
                *d -= 1;
                if *d == 1 {
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    members
        .iter()
        .copied()
        .filter(|u| !removed.contains(u))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forest(vertices: &[(&str, Option<i64>)], edges: &[(&str, &str)]) -> Forest {
        Forest::from_parts(vertices, edges).unwrap()
    }

    #[test]
    fn intersection_form_single_vertex() {
        let f = forest(&[("v", Some(-2)), ("k", None)], &[("k", "v")]);
        let form = f.intersection_form();
        assert_eq!(form.order, 1);
        assert_eq!(form.entries, vec![vec![-2]]);
        assert_eq!(form.v0_row, vec![1]);
    }

    #[test]
    fn intersection_form_path() {
        let f = forest(
            &[("k", None), ("a", Some(-1)), ("b", Some(-3))],
            &[("k", "a"), ("a", "b")],
        );
        let form = f.intersection_form();
        assert_eq!(form.entries, vec![vec![-1, 1], vec![1, -3]]);
        assert_eq!(form.v0_row, vec![1, 0]);
    }

    #[test]
    fn loop_edge_rejected() {
        let err = Forest::from_parts(&[("a", Some(-1)), ("k", None)], &[("a", "a")]).unwrap_err();
        assert_eq!(err, ForestError::LoopEdge("a".into()));
    }

    #[test]
    fn cycle_rejected() {
        let err = Forest::from_parts(
            &[("a", Some(-2)), ("b", Some(-2)), ("c", Some(-2)), ("k", None)],
            &[("a", "b"), ("b", "c"), ("c", "a")],
        )
        .unwrap_err();
        assert_eq!(err, ForestError::Cycle);
    }

    #[test]
    fn unframed_count_enforced() {
        let err = Forest::from_parts(&[("a", Some(-2))], &[]).unwrap_err();
        assert_eq!(err, ForestError::NoUnframed);
        let err =
            Forest::from_parts(&[("a", None), ("b", None)], &[]).unwrap_err();
        assert_eq!(err, ForestError::MultipleUnframed("a".into(), "b".into()));
    }

    #[test]
    fn definiteness_basics() {
        let neg2 = IntersectionForm {
            order: 1,
            entries: vec![vec![-2]],
            v0_row: vec![0],
        };
        assert!(is_negative_definite(&neg2));
        let singular = IntersectionForm {
            order: 2,
            entries: vec![vec![-1, 1], vec![1, -1]],
            v0_row: vec![0, 0],
        };
        assert!(!is_negative_definite(&singular));
        let ok = IntersectionForm {
            order: 2,
            entries: vec![vec![-1, 1], vec![1, -3]],
            v0_row: vec![0, 0],
        };
        assert!(is_negative_definite(&ok));
        let empty = IntersectionForm {
            order: 0,
            entries: vec![],
            v0_row: vec![],
        };
        assert!(is_negative_definite(&empty));
    }

    #[test]
    fn pairing_examples() {
        let form = IntersectionForm {
            order: 1,
            entries: vec![vec![-1]],
            v0_row: vec![0],
        };
        assert_eq!(pairing(&form, &[1], &[1]).unwrap(), -1);
        let form = IntersectionForm {
            order: 2,
            entries: vec![vec![-1, 1], vec![1, -3]],
            v0_row: vec![0, 0],
        };
        assert_eq!(pairing(&form, &[1, 0], &[0, 1]).unwrap(), 1);
        assert_eq!(pairing(&form, &[1, 1], &[1, 1]).unwrap(), -2);
        assert!(pairing(&form, &[1], &[1, 0]).is_err());
    }

    #[test]
    fn pairing_diagonal_matches_framing() {
        let f = forest(
            &[("k", None), ("a", Some(-2)), ("b", Some(-5))],
            &[("k", "a"), ("a", "b")],
        );
        let form = f.intersection_form();
        for (pos, &v) in f.framed_vertices().iter().enumerate() {
            let mut e = vec![0i64; form.order];
            e[pos] = 1;
            assert_eq!(pairing(&form, &e, &e).unwrap(), f.framing(v).unwrap());
        }
    }

    #[test]
    fn sigma_class_examples() {
        // v(−1), v0—v: a_v = 1.
        let f = forest(&[("v", Some(-1)), ("k", None)], &[("k", "v")]);
        let s = f.sigma_class().unwrap();
        assert_eq!(s.coeffs, vec![Rational::from(1)]);
        assert_eq!(s.pairing_with_v0, Rational::from(1));

        // v(−2), v0—v: a_v = 1/2.
        let f = forest(&[("v", Some(-2)), ("k", None)], &[("k", "v")]);
        let s = f.sigma_class().unwrap();
        assert_eq!(s.coeffs, vec![Rational::new(1, 2)]);
        assert_eq!(s.pairing_with_v0, Rational::new(1, 2));

        // v(−2), v0 isolated: a_v = 0.
        let f = forest(&[("v", Some(-2)), ("k", None)], &[]);
        let s = f.sigma_class().unwrap();
        assert_eq!(s.coeffs, vec![Rational::from(0)]);
        assert_eq!(s.pairing_with_v0, Rational::from(0));
    }

    #[test]
    fn sigma_residual_is_zero_exactly() {
        let f = forest(
            &[
                ("k", None),
                ("a", Some(-2)),
                ("b", Some(-3)),
                ("c", Some(-5)),
            ],
            &[("k", "a"), ("a", "b"), ("b", "c")],
        );
        let s = f.sigma_class().unwrap();
        let form = f.intersection_form();
        for i in 0..form.order {
            let mut acc = Rational::from(form.v0_row[i]);
            for j in 0..form.order {
                acc += Rational::from(form.entries[i][j]) * s.coeffs[j];
            }
            assert_eq!(acc, Rational::from(0));
        }
        assert_eq!(s.self_term, s.pairing_with_v0);
    }

    #[test]
    fn canonical_form_relabeling_invariant() {
        let f1 = forest(
            &[("k", None), ("a", Some(-2)), ("b", Some(-3))],
            &[("k", "a"), ("a", "b")],
        );
        let f2 = forest(
            &[("x", Some(-3)), ("k", None), ("y", Some(-2))],
            &[("y", "x"), ("k", "y")],
        );
        assert_eq!(f1.canonical_form(), f2.canonical_form());
    }

    #[test]
    fn canonical_form_framing_order_matters() {
        let f1 = forest(
            &[("k", None), ("a", Some(-2)), ("b", Some(-3))],
            &[("k", "a"), ("a", "b")],
        );
        let f2 = forest(
            &[("k", None), ("a", Some(-3)), ("b", Some(-2))],
            &[("k", "a"), ("a", "b")],
        );
        assert_ne!(f1.canonical_form(), f2.canonical_form());
    }

    #[test]
    fn canonical_form_star_leaf_permutations() {
        let base = forest(
            &[
                ("k", None),
                ("c", Some(-5)),
                ("l1", Some(-2)),
                ("l2", Some(-2)),
                ("l3", Some(-3)),
            ],
            &[("k", "c"), ("c", "l1"), ("c", "l2"), ("c", "l3")],
        );
        // Same star with leaves attached in every other order.
        let perms: [[&str; 3]; 3] = [["l2", "l1", "l3"], ["l3", "l2", "l1"], ["l1", "l3", "l2"]];
        let framings = [("l1", -2i64), ("l2", -2), ("l3", -3)];
        for perm in perms {
            let verts: Vec<(&str, Option<i64>)> = vec![
                ("k", None),
                ("c", Some(-5)),
                (
                    perm[0],
                    Some(framings.iter().find(|f| f.0 == perm[0]).unwrap().1),
                ),
                (
                    perm[1],
                    Some(framings.iter().find(|f| f.0 == perm[1]).unwrap().1),
                ),
                (
                    perm[2],
                    Some(framings.iter().find(|f| f.0 == perm[2]).unwrap().1),
                ),
            ];
            let edges = vec![("k", "c"), ("c", perm[0]), ("c", perm[1]), ("c", perm[2])];
            let g = forest(&verts, &edges);
            assert_eq!(base.canonical_form(), g.canonical_form());
        }
    }

    #[test]
    fn canonical_form_separates_components_from_paths() {
        // v0—a(−2) plus isolated b(−2) vs path v0—a(−2)—b(−2).
        let f1 = forest(
            &[("k", None), ("a", Some(-2)), ("b", Some(-2))],
            &[("k", "a")],
        );
        let f2 = forest(
            &[("k", None), ("a", Some(-2)), ("b", Some(-2))],
            &[("k", "a"), ("a", "b")],
        );
        assert_ne!(f1.canonical_form(), f2.canonical_form());
    }
}
