//! Seeded property-test suites.
//!
//! Each suite draws random negative-definite forests, runs one family of
//! identities, and reports failures with full reproduction data (instance
//! seed, forest document, generator). Suites are deterministic given
//! (seed, instances, margin); instances run in parallel with per-instance
//! seeds and results merged in instance order.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{
    blow_down, blow_down_sites, blow_up_edge, blow_up_generic, blow_up_vertex, reduce,
};
use crate::document;
use crate::lattice::{Chain, CharVector, Generator, Lattice};
use crate::maps::{BlowupContext, H0Convention, SExponentRule};
use crate::plumbing::{Forest, Rational};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("rejection budget exhausted while sampling a negative definite forest")]
    RejectionBudget,
}

/// The named identity suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    DSquared,
    GradingDrop,
    FilteredDifferential,
    VertexFamily,
    EdgeFamily,
    ReductionConfluence,
    FingerprintInvariance,
    Eq6Oracle,
    Lemma31,
    SExponentArbitration,
    TConventionArbitration,
}

impl SuiteName {
    pub const ALL: [SuiteName; 11] = [
        SuiteName::DSquared,
        SuiteName::GradingDrop,
        SuiteName::FilteredDifferential,
        SuiteName::VertexFamily,
        SuiteName::EdgeFamily,
        SuiteName::ReductionConfluence,
        SuiteName::FingerprintInvariance,
        SuiteName::Eq6Oracle,
        SuiteName::Lemma31,
        SuiteName::SExponentArbitration,
        SuiteName::TConventionArbitration,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteName::DSquared => "d_squared",
            SuiteName::GradingDrop => "grading_drop",
            SuiteName::FilteredDifferential => "filtered_differential",
            SuiteName::VertexFamily => "vertex_family",
            SuiteName::EdgeFamily => "edge_family",
            SuiteName::ReductionConfluence => "reduction_confluence",
            SuiteName::FingerprintInvariance => "fingerprint_invariance",
            SuiteName::Eq6Oracle => "eq6_oracle",
            SuiteName::Lemma31 => "lemma31",
            SuiteName::SExponentArbitration => "s_exponent_arbitration",
            SuiteName::TConventionArbitration => "t_convention_arbitration",
        }
    }
}

impl FromStr for SuiteName {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SuiteName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| VerifyError::UnknownSuite(s.to_owned()))
    }
}

/// Instance source for the suites.
#[derive(Debug, Clone)]
pub struct RandomForestSpec {
    pub seed: u64,
    pub max_framed: usize,
    /// Inclusive framing range, hi ≤ −1.
    pub framing_range: (i64, i64),
    pub v0_attachment: V0Attachment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum V0Attachment {
    /// v0 gets exactly one edge (it is a leaf, matching the reduction the
    /// filtration arguments rely on).
    Leaf,
    /// Each component is joined to v0 with probability 1/2.
    Random,
}

const REJECTION_BUDGET: usize = 10_000;

/// Deterministic rejection sampler for validated forests.
pub fn random_forest(spec: &RandomForestSpec) -> Result<Forest, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    sample_forest(&mut rng, spec)
}

fn sample_forest(rng: &mut ChaCha8Rng, spec: &RandomForestSpec) -> Result<Forest, VerifyError> {
    assert!(spec.framing_range.1 <= -1 && spec.framing_range.0 <= spec.framing_range.1);
    for _ in 0..REJECTION_BUDGET {
        let n = if spec.max_framed == 0 {
            0
        } else {
            rng.gen_range(1..=spec.max_framed)
        };
        let mut vertices: Vec<(String, Option<i64>)> = vec![("v0".into(), None)];
        for i in 0..n {
            vertices.push((
                format!("v{}", i + 1),
                Some(rng.gen_range(spec.framing_range.0..=spec.framing_range.1)),
            ));
        }
        // 1–2 components over the framed vertices.
        let comps: Vec<Vec<usize>> = if n >= 2 && rng.gen_bool(0.5) {
            let cut = rng.gen_range(1..n);
            vec![(0..cut).collect(), (cut..n).collect()]
        } else if n >= 1 {
            vec![(0..n).collect()]
        } else {
            vec![]
        };
        let mut edges: Vec<(String, String)> = Vec::new();
        for comp in &comps {
            for (a, b) in random_tree(rng, comp.len()) {
                edges.push((format!("v{}", comp[a] + 1), format!("v{}", comp[b] + 1)));
            }
        }
        match spec.v0_attachment {
            V0Attachment::Leaf => {
                if n > 0 {
                    let comp = &comps[rng.gen_range(0..comps.len())];
                    let u = comp[rng.gen_range(0..comp.len())];
                    edges.push(("v0".into(), format!("v{}", u + 1)));
                }
            }
            V0Attachment::Random => {
                for comp in &comps {
                    if rng.gen_bool(0.5) {
                        let u = comp[rng.gen_range(0..comp.len())];
                        edges.push(("v0".into(), format!("v{}", u + 1)));
                    }
                }
            }
        }
        let vert_refs: Vec<(&str, Option<i64>)> =
            vertices.iter().map(|(n, f)| (n.as_str(), *f)).collect();
        let edge_refs: Vec<(&str, &str)> =
            edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let forest = Forest::from_parts(&vert_refs, &edge_refs)
            .expect("sampler builds structurally valid forests");
        if forest.is_negative_definite() {
            return Ok(forest);
        }
    }
    Err(VerifyError::RejectionBudget)
}

/// Uniform random labeled tree on n vertices (Prüfer decode).
fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => vec![],
        2 => vec![(0, 1)],
        _ => {
            let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
            let mut degree = vec![1usize; n];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut edges = Vec::with_capacity(n - 1);
            for &s in &seq {
                let leaf = (0..n).find(|&u| degree[u] == 1).unwrap();
                edges.push((leaf, s));
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let mut last = (0..n).filter(|&u| degree[u] == 1);
            let (a, b) = (last.next().unwrap(), last.next().unwrap());
            edges.push((a, b));
            edges
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub instances: usize,
    pub margin: u32,
    pub seed: u64,
    /// Worker bound; falls back to LATTICE_THREADS, then to the rayon default.
    pub threads: Option<usize>,
    /// Cap on symbolically checked generators per instance (suites sample
    /// deterministically above it).
    pub per_instance_cap: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            instances: 50,
            margin: 1,
            seed: 1,
            threads: None,
            per_instance_cap: 160,
        }
    }
}

/// One reproducible failure.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub instance_seed: u64,
    pub forest: String,
    pub generator: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub margin: u32,
    pub instances: usize,
    pub checked: u64,
    pub skipped: u64,
    pub failures: Vec<Failure>,
    /// Stabilization-cap events among the failures.
    pub stabilization_caps: u64,
    pub notes: Vec<String>,
    pub elapsed_ms: u128,
}

impl SuiteReport {
    /// Mathematical pass: no identity failed.
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Configuration sanity: more than half of the enumerated generators must
    /// actually be checked, otherwise the margin is too small.
    pub fn config_ok(&self) -> bool {
        let total = self.checked + self.skipped;
        total == 0 || self.skipped * 2 <= total
    }
}

#[derive(Default)]
struct Outcome {
    checked: u64,
    skipped: u64,
    failures: Vec<Failure>,
    caps: u64,
    notes: Vec<String>,
}

impl Outcome {
    fn fail(
        &mut self,
        seed: u64,
        forest: &Forest,
        gen: &dyn Debug,
        expected: impl ToString,
        got: impl ToString,
    ) {
        self.failures.push(Failure {
            instance_seed: seed,
            forest: document::emit(forest),
            generator: format!("{gen:?}"),
            expected: expected.to_string(),
            got: got.to_string(),
        });
    }

    fn check(&mut self) {
        self.checked += 1;
    }
}

fn mix_seed(seed: u64, i: u64) -> u64 {
    // splitmix64 step
    let mut z = seed ^ (i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn thread_count(cfg: &SuiteConfig) -> Option<usize> {
    cfg.threads.or_else(|| {
        std::env::var("LATTICE_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

/// Run one suite. Deterministic in (seed, instances, margin).
pub fn run_suite(name: SuiteName, cfg: &SuiteConfig) -> SuiteReport {
    let start = Instant::now();
    let run_instance = |i: usize| -> Outcome {
        let iseed = mix_seed(cfg.seed, i as u64);
        match name {
            SuiteName::DSquared => foundations_instance(iseed, cfg, Foundation::DSquared),
            SuiteName::GradingDrop => foundations_instance(iseed, cfg, Foundation::GradingDrop),
            SuiteName::FilteredDifferential => {
                foundations_instance(iseed, cfg, Foundation::Filtered)
            }
            SuiteName::VertexFamily => vertex_family_instance(iseed, cfg),
            SuiteName::EdgeFamily => edge_family_instance(iseed, cfg),
            SuiteName::ReductionConfluence => confluence_instance(iseed, cfg),
            SuiteName::FingerprintInvariance => fingerprint_instance(iseed, cfg),
            SuiteName::Eq6Oracle => eq6_instance(iseed, cfg),
            SuiteName::Lemma31 => lemma31_instance(iseed, cfg),
            SuiteName::SExponentArbitration => s_arbitration_instance(iseed, cfg),
            SuiteName::TConventionArbitration => t_arbitration_instance(iseed, cfg),
        }
    };

    let outcomes: Vec<Outcome> = match thread_count(cfg) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(|| par_run(cfg.instances, run_instance)),
        None => par_run(cfg.instances, run_instance),
    };

    let mut report = SuiteReport {
        suite: name.as_str().to_owned(),
        seed: cfg.seed,
        margin: cfg.margin,
        instances: cfg.instances,
        checked: 0,
        skipped: 0,
        failures: Vec::new(),
        stabilization_caps: 0,
        notes: Vec::new(),
        elapsed_ms: 0,
    };
    for o in outcomes {
        report.checked += o.checked;
        report.skipped += o.skipped;
        report.stabilization_caps += o.caps;
        report.failures.extend(o.failures);
        report.notes.extend(o.notes);
    }
    report.elapsed_ms = start.elapsed().as_millis();
    report
}

fn par_run(instances: usize, f: impl Fn(usize) -> Outcome + Sync + Send) -> Vec<Outcome> {
    use rayon::prelude::*;
    (0..instances).into_par_iter().map(f).collect()
}

fn forest_spec(seed: u64, max_framed: usize, attachment: V0Attachment) -> RandomForestSpec {
    RandomForestSpec {
        seed,
        max_framed,
        framing_range: (-5, -1),
        v0_attachment: attachment,
    }
}

/// Deterministic sample of up to `cap` generators from the margin box.
fn sample_generators(
    rng: &mut ChaCha8Rng,
    lat: &Lattice,
    margin: u32,
    cap: usize,
) -> Vec<Generator> {
    let mut gens = lat.enumerate_generators(margin);
    if gens.len() > cap {
        gens.shuffle(rng);
        gens.truncate(cap);
    }
    gens
}

enum Foundation {
    DSquared,
    GradingDrop,
    Filtered,
}

fn foundations_instance(seed: u64, cfg: &SuiteConfig, which: Foundation) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = forest_spec(seed, 4, V0Attachment::Random);
    let Ok(forest) = sample_forest(&mut rng, &spec) else {
        out.notes.push(format!("seed {seed}: rejection budget"));
        return out;
    };
    let lat = Lattice::new(&forest).expect("sampled forests are negative definite");
    let gens = sample_generators(&mut rng, &lat, cfg.margin, cfg.per_instance_cap);
    for gen in gens {
        out.check();
        match which {
            Foundation::DSquared => {
                let dd = lat.boundary_chain(&lat.boundary(&gen));
                if !dd.is_zero() {
                    out.fail(seed, &forest, &gen, "∂∂ = 0", format!("{dd:?}"));
                }
            }
            Foundation::GradingDrop => {
                let gr = lat.maslov(&gen);
                for t in lat.boundary(&gen).iter() {
                    if lat.maslov(t) != gr - Rational::from(1) {
                        out.fail(
                            seed,
                            &forest,
                            &gen,
                            format!("gr(term) = {}", gr - Rational::from(1)),
                            format!("gr({t:?}) = {}", lat.maslov(t)),
                        );
                    }
                }
            }
            Foundation::Filtered => {
                let al = lat.alpha(&gen);
                for t in lat.boundary(&gen).iter() {
                    if lat.alpha(t) > al {
                        out.fail(
                            seed,
                            &forest,
                            &gen,
                            format!("A(term) ≤ {al}"),
                            format!("A({t:?}) = {}", lat.alpha(t)),
                        );
                    }
                }
            }
        }
    }
    out
}

/// Shared identity set for one blow-up context. Checks the homotopy algebra
/// (stabilization, vanishing on E∪new, the homotopy identity, the shift
/// identity), the blow-down/blow-up pair, and the grading/filtration lemmas.
struct FamilyChecks<'a> {
    ctx: &'a BlowupContext,
    seed: u64,
    /// Check gradings/filtration inequalities (off while arbitrating a
    /// deliberately wrong convention, where they are expected to fail).
    strict: bool,
}

impl<'a> FamilyChecks<'a> {
    /// Identities on a blown-side generator. Returns the number of violated
    /// identities when `strict` is off instead of recording them.
    fn blown_generator(&self, out: &mut Outcome, y: &Generator) -> usize {
        let ctx = self.ctx;
        let forest = ctx.blown().forest().clone();
        let new_bit = 1u32 << ctx.new_pos();
        let mut violations = 0usize;
        let record = |out: &mut Outcome,
                          gen: &dyn Debug,
                          expected: String,
                          got: String,
                          violations: &mut usize| {
            if self.strict {
                out.fail(self.seed, &forest, gen, expected, got);
            }
            *violations += 1;
        };

        // H₀ raises gr by 1 and does not raise A.
        let gr = ctx.blown().maslov(y);
        let al = ctx.blown().alpha(y);
        for t in ctx.h0(y).iter() {
            if ctx.blown().maslov(t) != gr + Rational::from(1) {
                record(
                    out,
                    y,
                    format!("gr(H₀ term) = {}", gr + Rational::from(1)),
                    format!("{}", ctx.blown().maslov(t)),
                    &mut violations,
                );
            }
            if ctx.blown().alpha(t) > al {
                record(
                    out,
                    y,
                    format!("A(H₀ term) ≤ {al}"),
                    format!("{}", ctx.blown().alpha(t)),
                    &mut violations,
                );
            }
        }

        let stab = match ctx.c_stab(y) {
            Ok(c) => c,
            Err(e) => {
                out.caps += 1;
                record(out, y, "C₀ stabilizes".into(), e.to_string(), &mut violations);
                return violations;
            }
        };

        // Vanishing on generators containing the new vertex.
        if y.e & new_bit != 0 && !stab.is_zero() {
            record(
                out,
                y,
                "C = 0 when new ∈ E".into(),
                format!("{stab:?}"),
                &mut violations,
            );
        }

        // C is filtered and preserves the grading.
        for t in stab.iter() {
            if ctx.blown().maslov(t) != gr {
                record(
                    out,
                    y,
                    format!("gr(C term) = {gr}"),
                    format!("{}", ctx.blown().maslov(t)),
                    &mut violations,
                );
            }
            if ctx.blown().alpha(t) > al {
                record(
                    out,
                    y,
                    format!("A(C term) ≤ {al}"),
                    format!("{}", ctx.blown().alpha(t)),
                    &mut violations,
                );
            }
        }

        // Homotopy identity C = Id + ∂H + H∂ with the stabilized H.
        let h_ok = (|| -> Result<bool, crate::maps::MapError> {
            let mut rhs = Chain::from_gen(y.clone());
            rhs.add(&ctx.blown().boundary_chain(&ctx.h_stab(y)?));
            rhs.add(&ctx.h_stab_chain(&ctx.blown().boundary(y))?);
            Ok(rhs == stab)
        })();
        match h_ok {
            Ok(true) => {}
            Ok(false) => record(
                out,
                y,
                "C = Id + ∂H + H∂".into(),
                "mismatch".into(),
                &mut violations,
            ),
            Err(e) => {
                out.caps += 1;
                record(out, y, "H stabilizes".into(), e.to_string(), &mut violations)
            }
        }

        // H is well defined: H₀ annihilates stabilized chains.
        if !ctx.h0_chain(&stab).is_zero() {
            record(
                out,
                y,
                "H₀∘C = 0".into(),
                format!("{:?}", ctx.h0_chain(&stab)),
                &mut violations,
            );
        }

        // Shift identity (eq. (3) resp. Lemma 3.4): C of a generator equals
        // C of its i0-normalized shift partner, up to the U-power that the
        // grading gap forces (the text omits the power; gradings pin it).
        if y.e & new_bit == 0 {
            let l = y.k.0[ctx.new_pos()];
            let shifted = ctx
                .blown()
                .shift(&y.k, crate::lattice::ShiftSite::Framed(ctx.new_pos()), (l + 1) / 2);
            debug_assert_eq!(shifted.0[ctx.new_pos()], -1);
            let other = Generator::new(shifted, y.e, y.j);
            let gap2 = ctx.blown().maslov(&other) - gr;
            match ctx.c_stab(&other) {
                Ok(c2) => {
                    let (lo, hi, t) = if gap2 >= Rational::from(0) {
                        (stab.clone(), c2, gap2 / 2)
                    } else {
                        (c2, stab.clone(), -gap2 / 2)
                    };
                    let ok = t.is_integer() && lo == hi.shift_u(t.to_integer() as u32);
                    if !ok {
                        record(
                            out,
                            y,
                            "C[K,E] = Uᵗ·C[K+2i₀·new*, E] with 2t the grading gap".into(),
                            "mismatch".into(),
                            &mut violations,
                        );
                    }
                }
                Err(e) => {
                    out.caps += 1;
                    record(out, y, "C₀ stabilizes".into(), e.to_string(), &mut violations)
                }
            }
        }
        violations
    }

    /// Blow-down map identities on a blown generator (P or S by kind).
    fn blow_down_map(&self, out: &mut Outcome, y: &Generator) -> usize {
        let ctx = self.ctx;
        let forest = ctx.blown().forest().clone();
        let mut violations = 0usize;
        let down = |g: &Generator| -> Chain {
            match ctx.kind() {
                crate::maps::CtxKind::Vertex => ctx.p_map(g),
                crate::maps::CtxKind::Edge => ctx.s_map(g),
            }
        };
        let image = down(y);
        let gr = ctx.blown().maslov(y);
        let al = ctx.blown().alpha(y);
        for t in image.iter() {
            if ctx.base().maslov(t) != gr {
                if self.strict {
                    out.fail(
                        self.seed,
                        &forest,
                        y,
                        format!("gr(blow-down term) = {gr}"),
                        format!("{}", ctx.base().maslov(t)),
                    );
                }
                violations += 1;
            }
            if ctx.base().alpha(t) > al {
                if self.strict {
                    out.fail(
                        self.seed,
                        &forest,
                        y,
                        format!("A(blow-down term) ≤ {al}"),
                        format!("{}", ctx.base().alpha(t)),
                    );
                }
                violations += 1;
            }
        }
        // Chain map: ∂∘f = f∘∂.
        let lhs = ctx.base().boundary_chain(&image);
        let rhs = ctx.blown().boundary(y).flat_map(|g| down(g));
        if lhs != rhs {
            if self.strict {
                out.fail(
                    self.seed,
                    &forest,
                    y,
                    "∂∘blow-down = blow-down∘∂",
                    format!("lhs {lhs:?} ≠ rhs {rhs:?}"),
                );
            }
            violations += 1;
        }
        violations
    }

    /// Blow-up map identities on a base generator (R or T by kind), plus the
    /// round trips.
    fn blow_up_map(&self, out: &mut Outcome, x: &Generator) -> usize {
        let ctx = self.ctx;
        let forest = ctx.base().forest().clone();
        let mut violations = 0usize;
        let up = |g: &Generator| -> Result<Chain, crate::maps::MapError> {
            match ctx.kind() {
                crate::maps::CtxKind::Vertex => ctx.r_map(g),
                crate::maps::CtxKind::Edge => ctx.t_map(g),
            }
        };
        let down = |c: &Chain| -> Chain {
            match ctx.kind() {
                crate::maps::CtxKind::Vertex => ctx.p_chain(c),
                crate::maps::CtxKind::Edge => ctx.s_chain(c),
            }
        };
        let image = match up(x) {
            Ok(c) => c,
            Err(e) => {
                out.caps += 1;
                if self.strict {
                    out.fail(self.seed, &forest, x, "blow-up stabilizes", e.to_string());
                }
                return violations + 1;
            }
        };

        let gr = ctx.base().maslov(x);
        let al = ctx.base().alpha(x);
        // Pre-stabilization filtration equality.
        let pre = match ctx.kind() {
            crate::maps::CtxKind::Vertex => ctx.r_pre_stab(x),
            crate::maps::CtxKind::Edge => match ctx.t_pre_stab(x) {
                Ok(p) => p,
                Err(e) => {
                    if self.strict {
                        out.fail(self.seed, &forest, x, "grading-neutral extension", e.to_string());
                    }
                    return violations + 1;
                }
            },
        };
        if ctx.blown().alpha(&pre) != al {
            if self.strict {
                out.fail(
                    self.seed,
                    &forest,
                    x,
                    format!("A'(pre-stabilization) = {al}"),
                    format!("{}", ctx.blown().alpha(&pre)),
                );
            }
            violations += 1;
        }
        for t in image.iter() {
            if ctx.blown().maslov(t) != gr {
                if self.strict {
                    out.fail(
                        self.seed,
                        &forest,
                        x,
                        format!("gr(blow-up term) = {gr}"),
                        format!("{}", ctx.blown().maslov(t)),
                    );
                }
                violations += 1;
            }
            if ctx.blown().alpha(t) > al {
                if self.strict {
                    out.fail(
                        self.seed,
                        &forest,
                        x,
                        format!("A(blow-up term) ≤ {al}"),
                        format!("{}", ctx.blown().alpha(t)),
                    );
                }
                violations += 1;
            }
        }
        // Round trip: blow-down ∘ blow-up = Id.
        let round = down(&image);
        if round != Chain::from_gen(x.clone()) {
            if self.strict {
                out.fail(
                    self.seed,
                    &forest,
                    x,
                    "blow-down∘blow-up = Id",
                    format!("{round:?}"),
                );
            }
            violations += 1;
        }
        // Chain map: ∂'∘up = up∘∂.
        let chain_ok = (|| -> Result<bool, crate::maps::MapError> {
            let lhs = ctx.blown().boundary_chain(&image);
            let mut rhs = Chain::zero();
            for g in ctx.base().boundary(x).iter() {
                rhs.add(&up(g)?);
            }
            Ok(lhs == rhs)
        })();
        match chain_ok {
            Ok(true) => {}
            Ok(false) => {
                if self.strict {
                    out.fail(
                        self.seed,
                        &forest,
                        x,
                        "∂'∘blow-up = blow-up∘∂",
                        "mismatch",
                    );
                }
                violations += 1;
            }
            Err(e) => {
                out.caps += 1;
                if self.strict {
                    out.fail(self.seed, &forest, x, "blow-up stabilizes", e.to_string());
                }
                violations += 1;
            }
        }
        violations
    }

    /// Other round trip: blow-up ∘ blow-down = C on a blown generator.
    fn round_trip_c(&self, out: &mut Outcome, y: &Generator) -> usize {
        let ctx = self.ctx;
        let forest = ctx.blown().forest().clone();
        let mut violations = 0usize;
        let result = (|| -> Result<bool, crate::maps::MapError> {
            let down = match ctx.kind() {
                crate::maps::CtxKind::Vertex => ctx.p_map(y),
                crate::maps::CtxKind::Edge => ctx.s_map(y),
            };
            let mut up = Chain::zero();
            for g in down.iter() {
                up.add(&match ctx.kind() {
                    crate::maps::CtxKind::Vertex => ctx.r_map(g)?,
                    crate::maps::CtxKind::Edge => ctx.t_map(g)?,
                });
            }
            Ok(up == ctx.c_stab(y)?)
        })();
        match result {
            Ok(true) => {}
            Ok(false) => {
                if self.strict {
                    out.fail(
                        self.seed,
                        &forest,
                        y,
                        "blow-up∘blow-down = C",
                        "mismatch",
                    );
                }
                violations += 1;
            }
            Err(e) => {
                out.caps += 1;
                if self.strict {
                    out.fail(self.seed, &forest, y, "stabilization", e.to_string());
                }
                violations += 1;
            }
        }
        violations
    }
}

fn pick_framed_vertex(rng: &mut ChaCha8Rng, forest: &Forest) -> String {
    let framed = forest.framed_vertices();
    forest.name(framed[rng.gen_range(0..framed.len())]).to_owned()
}

fn framed_edges(forest: &Forest) -> Vec<(String, String)> {
    forest
        .edges()
        .iter()
        .filter(|&&(a, b)| forest.framing(a).is_some() && forest.framing(b).is_some())
        .map(|&(a, b)| (forest.name(a).to_owned(), forest.name(b).to_owned()))
        .collect()
}

fn vertex_family_instance(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = forest_spec(seed, 4, V0Attachment::Leaf);
    let Ok(forest) = sample_forest(&mut rng, &spec) else {
        out.notes.push(format!("seed {seed}: rejection budget"));
        return out;
    };
    let v = pick_framed_vertex(&mut rng, &forest);
    let ctx = BlowupContext::vertex(&forest, &v).expect("vertex blow-up stays in class");
    run_family(&mut out, &mut rng, &ctx, seed, cfg);
    out
}

fn edge_family_instance(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(ctx) = sample_edge_context(&mut rng, seed, &mut out) else {
        return out;
    };
    run_family(&mut out, &mut rng, &ctx, seed, cfg);
    out
}

/// Sample a forest holding a framed–framed edge and build its edge context.
fn sample_edge_context(
    rng: &mut ChaCha8Rng,
    seed: u64,
    out: &mut Outcome,
) -> Option<BlowupContext> {
    for attempt in 0..200 {
        let spec = forest_spec(mix_seed(seed, attempt), 4, V0Attachment::Leaf);
        let Ok(forest) = sample_forest(rng, &spec) else {
            continue;
        };
        let edges = framed_edges(&forest);
        if edges.is_empty() {
            continue;
        }
        let (a, b) = edges[rng.gen_range(0..edges.len())].clone();
        match BlowupContext::edge(&forest, &a, &b) {
            Ok(ctx) => return Some(ctx),
            Err(_) => continue,
        }
    }
    out.notes
        .push(format!("seed {seed}: no edge context within budget"));
    None
}

fn run_family(
    out: &mut Outcome,
    rng: &mut ChaCha8Rng,
    ctx: &BlowupContext,
    seed: u64,
    cfg: &SuiteConfig,
) {
    let checks = FamilyChecks {
        ctx,
        seed,
        strict: true,
    };
    let blown_gens = sample_generators(rng, ctx.blown(), cfg.margin, cfg.per_instance_cap);
    for y in &blown_gens {
        out.check();
        checks.blown_generator(out, y);
        checks.blow_down_map(out, y);
        checks.round_trip_c(out, y);
    }
    let base_gens = sample_generators(rng, ctx.base(), cfg.margin, cfg.per_instance_cap / 2);
    for x in &base_gens {
        out.check();
        checks.blow_up_map(out, x);
    }
}

fn confluence_instance(seed: u64, _cfg: &SuiteConfig) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = forest_spec(seed, 6, V0Attachment::Random);
    let Ok(forest) = sample_forest(&mut rng, &spec) else {
        out.notes.push(format!("seed {seed}: rejection budget"));
        return out;
    };
    let reference = reduce(&forest).canonical_form();
    // reduce is idempotent
    let reduced = reduce(&forest);
    out.check();
    if reduce(&reduced).canonical_form() != reference {
        out.fail(seed, &forest, &"reduce", "idempotent", "changed again");
    }
    for _ in 0..10 {
        let mut cur = forest.clone();
        loop {
            let sites = blow_down_sites(&cur);
            if sites.is_empty() {
                break;
            }
            let w = sites[rng.gen_range(0..sites.len())];
            let name = cur.name(w).to_owned();
            let (next, _) = blow_down(&cur, &name).expect("eligible blow-down");
            if !next.is_negative_definite() {
                out.fail(
                    seed,
                    &cur,
                    &name,
                    "blow-down preserves negative definiteness",
                    "indefinite result",
                );
            }
            cur = next;
        }
        out.check();
        if cur.canonical_form() != reference {
            out.fail(
                seed,
                &forest,
                &"random reduction order",
                "canonical form of deterministic reduction",
                "different reduced form",
            );
        }
    }
    out
}

fn eq6_instance(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(ctx) = sample_edge_context(&mut rng, seed, &mut out) else {
        return out;
    };
    let blown = ctx.blown();
    let (lows, counts) = box_ranges_public(blown, cfg.margin.max(1));
    for _ in 0..100 {
        out.check();
        let k = CharVector(
            (0..lows.len())
                .map(|p| lows[p] + 2 * rng.gen_range(0..counts[p]) as i64)
                .collect(),
        );
        let l = k.0[ctx.new_pos()];
        let lhs = blown.char_square(&k);
        let rhs = ctx.base().char_square(&ctx.restrict_k(&k)) - Rational::from(l * l);
        if lhs != rhs {
            out.fail(
                seed,
                blown.forest(),
                &k,
                format!("(K,p,q,l)² = (K,p+l,q+l)² − l² = {rhs}"),
                format!("{lhs}"),
            );
        }
    }
    out
}

fn box_ranges_public(lat: &Lattice, margin: u32) -> (Vec<i64>, Vec<usize>) {
    let form = lat.form();
    let mut lows = Vec::new();
    let mut counts = Vec::new();
    for p in 0..form.order {
        let m = form.entries[p][p];
        lows.push(m - 2 * margin as i64);
        counts.push((-m + 2 * margin as i64 + 1) as usize);
    }
    (lows, counts)
}

fn lemma31_instance(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(ctx) = sample_edge_context(&mut rng, seed, &mut out) else {
        return out;
    };
    let blown = ctx.blown();
    let new_pos = ctx.new_pos();
    let new_bit = 1u32 << new_pos;
    for gen in blown.enumerate_generators(cfg.margin) {
        if gen.e & new_bit != 0 || gen.k.0[new_pos] > -3 {
            continue;
        }
        out.check();
        // b_e[K, E∪e] = (min_{I⊆E} f[K,I∪e]) − g[K,E∪e]
        let b = blown.b_min(&gen.k, gen.e, new_pos) - blown.g_val(&gen.k, gen.e | new_bit);
        if b != 0 {
            out.fail(
                seed,
                blown.forest(),
                &gen,
                "b_e[K,E∪e] = 0 when K(e) ≤ −3",
                format!("{b}"),
            );
        }
    }
    out
}

fn fingerprint_instance(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = forest_spec(seed, 3, V0Attachment::Leaf);
    let Ok(base) = sample_forest(&mut rng, &spec) else {
        out.notes.push(format!("seed {seed}: rejection budget"));
        return out;
    };

    // The three blow-up kinds.
    let mut blowns: Vec<(String, Forest)> = Vec::new();
    blowns.push((
        "generic".into(),
        blow_up_generic(&base).expect("generic stays in class").0,
    ));
    if base.framed_count() > 0 {
        let v = pick_framed_vertex(&mut rng, &base);
        blowns.push((
            format!("vertex {v}"),
            blow_up_vertex(&base, &v).expect("vertex stays in class").0,
        ));
    }
    if !base.edges().is_empty() {
        let &(a, b) = &base.edges()[rng.gen_range(0..base.edges().len())];
        let (na, nb) = (base.name(a).to_owned(), base.name(b).to_owned());
        match blow_up_edge(&base, &na, &nb) {
            Ok((blown, _)) => blowns.push((format!("edge {na}—{nb}"), blown)),
            Err(_) => out
                .notes
                .push(format!("seed {seed}: edge blow-up left the class, skipped")),
        }
    }

    let base_lat = Lattice::new(&base).expect("validated");
    let b = cfg.margin;
    let n_cap = cfg.margin + 1;
    let base_fp = fingerprint(&base_lat, b, n_cap);
    for (desc, blown) in blowns {
        let blown_lat = Lattice::new(&blown).expect("blow-ups stay in class");
        let blown_fp = fingerprint(&blown_lat, b, n_cap);
        compare_fingerprints(
            &mut out, seed, &base, &desc, &base_lat, &blown_lat, &base_fp, &blown_fp,
        );
    }
    out
}

/// (homology rows, filtration rows) keyed by (spinc rep, grading).
type Fingerprint = (
    BTreeMap<(Vec<i64>, Rational), (i64, bool)>,
    BTreeMap<(Vec<i64>, Rational), (Vec<(Rational, i64)>, bool)>,
);

fn fingerprint(lat: &Lattice, b: u32, n_cap: u32) -> Fingerprint {
    let hom = lat.truncated_homology(b, n_cap);
    let fil = lat.filtration_profile(b, n_cap);
    let mut h = BTreeMap::new();
    for s in hom.sectors {
        for r in s.rows {
            h.insert((s.spinc.clone(), r.grading), (r.dim, r.stable));
        }
    }
    let mut f = BTreeMap::new();
    for s in fil.sectors {
        for r in s.rows {
            f.insert((s.spinc.clone(), r.grading), (r.jumps, r.stable));
        }
    }
    (h, f)
}

/// Transport a base Spin^c representative along a blow-up: bump the framed
/// neighbors of the new vertex by one, set K(new) = −1 and re-canonicalize.
fn transport_rep(base_lat: &Lattice, blown_lat: &Lattice, rep: &[i64]) -> Vec<i64> {
    let base_f = base_lat.forest();
    let blown_f = blown_lat.forest();
    // The new vertex is the one missing from the base forest.
    let new_idx = (0..blown_f.vertex_count())
        .find(|&i| base_f.index_of(blown_f.name(i)).is_none())
        .expect("blown forest has one new vertex");
    let new_pos = blown_f.framed_pos(new_idx).expect("new vertex is framed");
    let mut k = vec![0i64; blown_f.framed_count()];
    for (bp, &bi) in blown_f.framed_vertices().iter().enumerate() {
        if bp == new_pos {
            k[bp] = -1;
            continue;
        }
        let base_idx = base_f.index_of(blown_f.name(bi)).expect("aligned names");
        let base_pos = base_f.framed_pos(base_idx).expect("framed in base");
        k[bp] = rep[base_pos] + i64::from(blown_f.has_edge(bi, new_idx));
    }
    blown_lat.spinc_class(&CharVector(k)).0
}

#[allow(clippy::too_many_arguments)]
fn compare_fingerprints(
    out: &mut Outcome,
    seed: u64,
    base: &Forest,
    desc: &str,
    base_lat: &Lattice,
    blown_lat: &Lattice,
    base_fp: &Fingerprint,
    blown_fp: &Fingerprint,
) {
    // Sector correspondence over every base sector that appears.
    let mut sector_map: BTreeMap<Vec<i64>, Vec<i64>> = BTreeMap::new();
    for (s, _) in base_fp.0.keys().chain(base_fp.1.keys()).map(|(s, g)| (s, g)) {
        if !sector_map.contains_key(s) {
            sector_map.insert(s.clone(), transport_rep(base_lat, blown_lat, s));
        }
    }

    // Grading spans per sector on each side, to avoid comparing against
    // gradings a box never reached.
    let span = |fp: &BTreeMap<(Vec<i64>, Rational), (i64, bool)>,
                sector: &Vec<i64>|
     -> Option<(Rational, Rational)> {
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for ((s, g), _) in fp.iter() {
            if s == sector {
                lo = Some(lo.map_or(*g, |x: Rational| x.min(*g)));
                hi = Some(hi.map_or(*g, |x: Rational| x.max(*g)));
            }
        }
        lo.zip(hi)
    };

    for (bs, ts) in &sector_map {
        let base_span = span(&base_fp.0, bs);
        let blown_span = span(&blown_fp.0, ts);
        let (Some(base_span), Some(blown_span)) = (base_span, blown_span) else {
            out.skipped += 1;
            continue;
        };
        let lo = base_span.0.max(blown_span.0);
        let hi = base_span.1.min(blown_span.1);

        // Homology rows.
        let mut gradings: BTreeMap<Rational, ()> = BTreeMap::new();
        for ((s, g), _) in base_fp.0.iter() {
            if s == bs {
                gradings.insert(*g, ());
            }
        }
        for ((s, g), _) in blown_fp.0.iter() {
            if s == ts {
                gradings.insert(*g, ());
            }
        }
        for (&g, _) in &gradings {
            if g < lo || g > hi {
                out.skipped += 1;
                continue;
            }
            let (bd, bstable) = base_fp
                .0
                .get(&(bs.clone(), g))
                .copied()
                .unwrap_or((0, true));
            let (td, tstable) = blown_fp
                .0
                .get(&(ts.clone(), g))
                .copied()
                .unwrap_or((0, true));
            if !(bstable && tstable) {
                out.skipped += 1;
                continue;
            }
            out.check();
            if bd != td {
                out.fail(
                    seed,
                    base,
                    &format!("{desc}: homology sector {bs:?} grading {g}"),
                    format!("dim {bd}"),
                    format!("dim {td}"),
                );
            }
        }

        // Filtration rows.
        let mut gradings: BTreeMap<Rational, ()> = BTreeMap::new();
        for ((s, g), _) in base_fp.1.iter() {
            if s == bs {
                gradings.insert(*g, ());
            }
        }
        for ((s, g), _) in blown_fp.1.iter() {
            if s == ts {
                gradings.insert(*g, ());
            }
        }
        for (&g, _) in &gradings {
            if g < lo || g > hi {
                out.skipped += 1;
                continue;
            }
            let empty = (Vec::new(), true);
            let (bj, bstable) = base_fp
                .1
                .get(&(bs.clone(), g))
                .cloned()
                .unwrap_or(empty.clone());
            let (tj, tstable) = blown_fp.1.get(&(ts.clone(), g)).cloned().unwrap_or(empty);
            if !(bstable && tstable) {
                out.skipped += 1;
                continue;
            }
            out.check();
            if bj != tj {
                out.fail(
                    seed,
                    base,
                    &format!("{desc}: filtration sector {bs:?} grading {g}"),
                    format!("{bj:?}"),
                    format!("{tj:?}"),
                );
            }
        }
    }
}

fn s_arbitration_instance(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(ctx) = sample_edge_context(&mut rng, seed, &mut out) else {
        return out;
    };
    let margin = cfg.margin.max(1);
    let gens = sample_generators(&mut rng, ctx.blown(), margin, cfg.per_instance_cap);
    let new_bit = 1u32 << ctx.new_pos();
    let mut half_breaks = 0usize;
    let mut big_l_seen = 0usize;
    for y in &gens {
        if y.e & new_bit != 0 {
            continue;
        }
        out.check();
        let gr = ctx.blown().maslov(y);
        for t in ctx.s_map_with_rule(y, SExponentRule::Eighth).iter() {
            if ctx.base().maslov(t) != gr {
                out.fail(
                    seed,
                    ctx.blown().forest(),
                    y,
                    "grading preserved with the (l²−1)/8 exponent",
                    format!("{} ≠ {}", ctx.base().maslov(t), gr),
                );
            }
        }
        let l = y.k.0[ctx.new_pos()];
        if l.abs() >= 3 {
            big_l_seen += 1;
            for t in ctx.s_map_with_rule(y, SExponentRule::Half).iter() {
                if ctx.base().maslov(t) != gr {
                    half_breaks += 1;
                }
            }
        }
    }
    if big_l_seen > 0 && half_breaks == 0 {
        out.fail(
            seed,
            ctx.blown().forest(),
            &"arbitration",
            "the (l²−1)/2 exponent breaks grading for some |l| ≥ 3",
            "no grading break observed",
        );
    }
    out.notes.push(format!(
        "seed {seed}: /8 exponent grading-exact; /2 exponent broke grading on {half_breaks}/{big_l_seen} generators with |l| ≥ 3"
    ));
    out
}

fn t_arbitration_instance(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let mut out = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = forest_spec(seed, 3, V0Attachment::Leaf);
    let Ok(forest) = sample_forest(&mut rng, &spec) else {
        out.notes.push(format!("seed {seed}: rejection budget"));
        return out;
    };
    let v = pick_framed_vertex(&mut rng, &forest);

    let mut violations = [0usize; 2];
    for (slot, convention) in [H0Convention::SectionThree, H0Convention::SectionTwo]
        .into_iter()
        .enumerate()
    {
        let ctx = BlowupContext::vertex(&forest, &v)
            .expect("vertex blow-up stays in class")
            .with_convention(convention);
        let strict = convention == H0Convention::SectionThree;
        let checks = FamilyChecks {
            ctx: &ctx,
            seed,
            strict,
        };
        let mut local_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 77));
        let gens = sample_generators(
            &mut local_rng,
            ctx.blown(),
            cfg.margin,
            cfg.per_instance_cap / 2,
        );
        for y in &gens {
            out.check();
            violations[slot] += checks.blown_generator(&mut out, y);
            violations[slot] += checks.blow_down_map(&mut out, y);
        }
        let base_gens = sample_generators(
            &mut local_rng,
            ctx.base(),
            cfg.margin,
            cfg.per_instance_cap / 4,
        );
        for x in &base_gens {
            out.check();
            violations[slot] += checks.blow_up_map(&mut out, x);
        }
    }
    if violations[1] == 0 {
        out.fail(
            seed,
            &forest,
            &"arbitration",
            "the printed vertex-family convention violates at least one identity",
            "no violation observed",
        );
    }
    out.notes.push(format!(
        "seed {seed}: swapped convention clean ({} violations); printed vertex-family convention violated {} identities",
        violations[0], violations[1]
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_forest_deterministic() {
        let spec = RandomForestSpec {
            seed: 42,
            max_framed: 4,
            framing_range: (-5, -1),
            v0_attachment: V0Attachment::Leaf,
        };
        let a = random_forest(&spec).unwrap();
        let b = random_forest(&spec).unwrap();
        assert_eq!(document::emit(&a), document::emit(&b));
    }

    #[test]
    fn random_forest_heavily_framed_needs_no_rejection() {
        // Framings ≤ −2 make trees diagonally dominant, hence always
        // negative definite.
        for seed in 0..30 {
            let spec = RandomForestSpec {
                seed,
                max_framed: 5,
                framing_range: (-5, -2),
                v0_attachment: V0Attachment::Random,
            };
            let f = random_forest(&spec).unwrap();
            assert!(f.is_negative_definite());
        }
    }

    #[test]
    fn random_forest_zero_framed() {
        let spec = RandomForestSpec {
            seed: 7,
            max_framed: 0,
            framing_range: (-5, -1),
            v0_attachment: V0Attachment::Leaf,
        };
        let f = random_forest(&spec).unwrap();
        assert_eq!(f.vertex_count(), 1);
    }

    #[test]
    fn suite_reports_are_deterministic() {
        let cfg = SuiteConfig {
            instances: 3,
            margin: 1,
            seed: 5,
            threads: Some(2),
            per_instance_cap: 40,
        };
        let a = run_suite(SuiteName::DSquared, &cfg);
        let b = run_suite(SuiteName::DSquared, &cfg);
        assert_eq!(a.checked, b.checked);
        assert_eq!(a.failures.len(), b.failures.len());
        assert!(a.passed());
    }

    #[test]
    fn suite_name_round_trip() {
        for n in SuiteName::ALL {
            assert_eq!(n.as_str().parse::<SuiteName>().unwrap(), n);
        }
        assert!("nope".parse::<SuiteName>().is_err());
    }

    #[test]
    fn smoke_foundations() {
        let cfg = SuiteConfig {
            instances: 4,
            margin: 1,
            seed: 11,
            threads: None,
            per_instance_cap: 60,
        };
        for name in [
            SuiteName::GradingDrop,
            SuiteName::FilteredDifferential,
            SuiteName::Eq6Oracle,
            SuiteName::Lemma31,
        ] {
            let r = run_suite(name, &cfg);
            assert!(r.passed(), "{}: {:?}", r.suite, r.failures.first());
        }
    }

    #[test]
    fn smoke_families() {
        let cfg = SuiteConfig {
            instances: 2,
            margin: 1,
            seed: 13,
            threads: None,
            per_instance_cap: 30,
        };
        for name in [SuiteName::VertexFamily, SuiteName::EdgeFamily] {
            let r = run_suite(name, &cfg);
            assert!(r.passed(), "{}: {:?}", r.suite, r.failures.first());
        }
    }

    #[test]
    fn smoke_confluence_and_fingerprints() {
        let cfg = SuiteConfig {
            instances: 2,
            margin: 1,
            seed: 17,
            threads: None,
            per_instance_cap: 30,
        };
        let r = run_suite(SuiteName::ReductionConfluence, &cfg);
        assert!(r.passed(), "{:?}", r.failures.first());
        let r = run_suite(SuiteName::FingerprintInvariance, &cfg);
        assert!(r.passed(), "{:?}", r.failures.first());
        assert!(r.config_ok());
    }

    #[test]
    fn smoke_arbitrations() {
        let cfg = SuiteConfig {
            instances: 2,
            margin: 1,
            seed: 19,
            threads: None,
            per_instance_cap: 40,
        };
        let r = run_suite(SuiteName::SExponentArbitration, &cfg);
        assert!(r.passed(), "{:?}", r.failures.first());
        let r = run_suite(SuiteName::TConventionArbitration, &cfg);
        assert!(r.passed(), "{:?}", r.failures.first());
    }
}
