//! The move calculus: blow-ups, blow-downs, reduction, equivalence.
//!
//! Three blow-up kinds stay inside the class of negative-definite forests
//! with one unframed vertex: adding an isolated (−1)-vertex (generic),
//! attaching a (−1)-leaf to a framed vertex whose framing drops by one
//! (vertex), and splitting an edge by a (−1)-vertex with both framed
//! endpoints dropping by one (edge). Blow-down is the inverse; blowing down
//! the unframed vertex is forbidden, and `v0` never carries a framing (its
//! formal framing −∞ absorbs the +1 shifts).

use thiserror::Error;

use crate::plumbing::{Forest, ForestError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CalculusError {
    #[error("forest is not negative definite")]
    NotNegativeDefinite,
    #[error("`{0}` is not a framed vertex")]
    NotFramed(String),
    #[error("{0}—{1} is not an edge")]
    NotAnEdge(String, String),
    #[error("move leaves class: result is not negative definite")]
    LeavesClass,
    #[error("cannot blow down the unframed vertex")]
    UnframedBlowDown,
    #[error("`{0}` is not blow-downable: {1}")]
    NotBlowDownable(String, String),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// One blow-up/blow-down, as applied. `new_id` names the created (−1)-vertex
/// for `*_up` moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveRecord {
    pub kind: MoveKind,
    pub site: MoveSite,
    pub new_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    GenericUp,
    VertexUp,
    EdgeUp,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MoveSite {
    None,
    Vertex(String),
    Edge(String, String),
}

fn fresh_id(forest: &Forest) -> String {
    let mut k = 1usize;
    loop {
        let cand = format!("b{k}");
        if forest.index_of(&cand).is_none() {
            return cand;
        }
        k += 1;
    }
}

fn rebuild(
    names: Vec<String>,
    framings: Vec<Option<i64>>,
    edges: Vec<(usize, usize)>,
) -> Result<Forest, CalculusError> {
    Ok(Forest::from_indexed(names, framings, edges)?)
}

fn parts(forest: &Forest) -> (Vec<String>, Vec<Option<i64>>, Vec<(usize, usize)>) {
    let names = (0..forest.vertex_count())
        .map(|i| forest.name(i).to_owned())
        .collect();
    let framings = (0..forest.vertex_count()).map(|i| forest.framing(i)).collect();
    let edges = forest.edges().to_vec();
    (names, framings, edges)
}

/// Add an isolated (−1)-framed vertex.
pub fn blow_up_generic(forest: &Forest) -> Result<(Forest, MoveRecord), CalculusError> {
    if !forest.is_negative_definite() {
        return Err(CalculusError::NotNegativeDefinite);
    }
    let (mut names, mut framings, edges) = parts(forest);
    let id = fresh_id(forest);
    names.push(id.clone());
    framings.push(Some(-1));
    let blown = rebuild(names, framings, edges)?;
    debug_assert!(blown.is_negative_definite());
    Ok((
        blown,
        MoveRecord {
            kind: MoveKind::GenericUp,
            site: MoveSite::None,
            new_id: Some(id),
        },
    ))
}

/// Blow up a framed vertex `v`: its framing drops by one and a new
/// (−1)-vertex is attached to it by an edge.
pub fn blow_up_vertex(forest: &Forest, v: &str) -> Result<(Forest, MoveRecord), CalculusError> {
    if !forest.is_negative_definite() {
        return Err(CalculusError::NotNegativeDefinite);
    }
    let vi = forest
        .index_of(v)
        .ok_or_else(|| ForestError::UnknownVertex(v.to_owned()))?;
    if forest.framing(vi).is_none() {
        return Err(CalculusError::NotFramed(v.to_owned()));
    }
    let (mut names, mut framings, mut edges) = parts(forest);
    framings[vi] = framings[vi].map(|f| f - 1);
    let id = fresh_id(forest);
    let wi = names.len();
    names.push(id.clone());
    framings.push(Some(-1));
    edges.push((vi.min(wi), vi.max(wi)));
    let blown = rebuild(names, framings, edges)?;
    debug_assert!(blown.is_negative_definite());
    Ok((
        blown,
        MoveRecord {
            kind: MoveKind::VertexUp,
            site: MoveSite::Vertex(v.to_owned()),
            new_id: Some(id),
        },
    ))
}

/// Blow up the edge a—b: the edge is replaced by a—e—b with e framed −1, and
/// each framed endpoint's framing drops by one. The result must stay
/// negative definite; otherwise the move is rejected.
pub fn blow_up_edge(
    forest: &Forest,
    a: &str,
    b: &str,
) -> Result<(Forest, MoveRecord), CalculusError> {
    if !forest.is_negative_definite() {
        return Err(CalculusError::NotNegativeDefinite);
    }
    let ia = forest
        .index_of(a)
        .ok_or_else(|| ForestError::UnknownVertex(a.to_owned()))?;
    let ib = forest
        .index_of(b)
        .ok_or_else(|| ForestError::UnknownVertex(b.to_owned()))?;
    if !forest.has_edge(ia, ib) {
        return Err(CalculusError::NotAnEdge(a.to_owned(), b.to_owned()));
    }
    let (mut names, mut framings, mut edges) = parts(forest);
    for i in [ia, ib] {
        framings[i] = framings[i].map(|f| f - 1);
    }
    let id = fresh_id(forest);
    let ei = names.len();
    names.push(id.clone());
    framings.push(Some(-1));
    edges.retain(|&(x, y)| (x, y) != (ia.min(ib), ia.max(ib)));
    edges.push((ia.min(ei), ia.max(ei)));
    edges.push((ib.min(ei), ib.max(ei)));
    let blown = rebuild(names, framings, edges)?;
    if !blown.is_negative_definite() {
        return Err(CalculusError::LeavesClass);
    }
    Ok((
        blown,
        MoveRecord {
            kind: MoveKind::EdgeUp,
            site: MoveSite::Edge(a.to_owned(), b.to_owned()),
            new_id: Some(id),
        },
    ))
}

/// True iff `w` may be blown down: framed −1, degree ≤ 2, not `v0`.
pub fn blow_down_eligible(forest: &Forest, w: usize) -> bool {
    forest.framing(w) == Some(-1) && forest.degree(w) <= 2
}

/// All blow-downable vertex indices.
pub fn blow_down_sites(forest: &Forest) -> Vec<usize> {
    (0..forest.vertex_count())
        .filter(|&w| blow_down_eligible(forest, w))
        .collect()
}

/// Blow down the (−1)-vertex `w`: delete it; a single neighbor absorbs +1,
/// two neighbors are joined by an edge and each framed one absorbs +1. `v0`
/// absorbs nothing.
pub fn blow_down(forest: &Forest, w: &str) -> Result<(Forest, MoveRecord), CalculusError> {
    let wi = forest
        .index_of(w)
        .ok_or_else(|| ForestError::UnknownVertex(w.to_owned()))?;
    if wi == forest.v0() {
        return Err(CalculusError::UnframedBlowDown);
    }
    if forest.framing(wi) != Some(-1) {
        return Err(CalculusError::NotBlowDownable(
            w.to_owned(),
            "framing is not -1".into(),
        ));
    }
    let nbrs: Vec<usize> = forest.neighbors(wi).collect();
    if nbrs.len() > 2 {
        return Err(CalculusError::NotBlowDownable(
            w.to_owned(),
            "degree exceeds 2".into(),
        ));
    }

    let (names, mut framings, mut edges) = parts(forest);
    for &u in &nbrs {
        framings[u] = framings[u].map(|f| f + 1);
    }
    edges.retain(|&(a, b)| a != wi && b != wi);
    if let [a, b] = nbrs[..] {
        debug_assert!(!forest.has_edge(a, b), "join would duplicate an edge");
        edges.push((a.min(b), a.max(b)));
    }
    // Drop w and reindex.
    let mut new_names = Vec::with_capacity(names.len() - 1);
    let mut new_framings = Vec::with_capacity(names.len() - 1);
    let mut remap = vec![usize::MAX; names.len()];
    for i in 0..names.len() {
        if i != wi {
            remap[i] = new_names.len();
            new_names.push(names[i].clone());
            new_framings.push(framings[i]);
        }
    }
    let new_edges = edges.iter().map(|&(a, b)| (remap[a], remap[b])).collect();
    let down = rebuild(new_names, new_framings, new_edges)?;
    debug_assert!(
        !forest.is_negative_definite() || down.is_negative_definite(),
        "blow-down must preserve negative definiteness"
    );
    Ok((
        down,
        MoveRecord {
            kind: MoveKind::Down,
            site: MoveSite::Vertex(w.to_owned()),
            new_id: None,
        },
    ))
}

/// Repeatedly blow down the eligible vertex with the smallest name until no
/// blow-down applies. Deterministic; confluence is tested, not assumed.
pub fn reduce(forest: &Forest) -> Forest {
    let mut cur = forest.clone();
    loop {
        let mut sites = blow_down_sites(&cur);
        sites.sort_by(|&a, &b| cur.name(a).cmp(cur.name(b)));
        match sites.first() {
            Some(&w) => {
                let name = cur.name(w).to_owned();
                cur = blow_down(&cur, &name)
                    .expect("eligible site must blow down")
                    .0;
            }
            None => return cur,
        }
    }
}

/// Decide equivalence: reduce both and compare canonical forms. Correctness
/// rests on the uniqueness of the reduced graph in each class.
pub fn equivalent(f1: &Forest, f2: &Forest) -> bool {
    reduce(f1).canonical_form() == reduce(f2).canonical_form()
}
