//! Word-tree exploration and point classification.
//!
//! A point is classified by expanding the tree of generator words
//! breadth-first with a dual beam: the lowest-modulus survivors witness
//! bounded behaviour, the highest-modulus survivors witness escape.
//! The verdict is one of Escaping, Bounded, Bungee, or Unresolved —
//! Unresolved is a first-class outcome, never asserted as membership in
//! any of the three sets.

use crate::complex::{ExtComplex, DEFAULT_CAP, MAX_CAP};
use crate::expr::Expr;
use crate::parser::{parse, ParseError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("semigroup needs at least one generator")]
    NoGenerators,
    #[error("generator labels must be unique (duplicate `{0}`)")]
    DuplicateLabel(String),
    #[error("invalid orbit config: {0}")]
    InvalidConfig(String),
    #[error("exhaustive budget exceeded: {words} words at depth {depth}")]
    BudgetExceeded { words: f64, depth: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A finitely generated function semigroup: the ordered generator list
/// plus metadata derived from it.
#[derive(Debug, Clone)]
pub struct Semigroup {
    generators: Vec<Expr>,
    labels: Vec<String>,
    has_pole: bool,
}

impl Semigroup {
    pub fn new(generators: Vec<(String, Expr)>) -> Result<Semigroup, OrbitError> {
        if generators.is_empty() {
            return Err(OrbitError::NoGenerators);
        }
        let mut labels = Vec::new();
        let mut exprs = Vec::new();
        for (label, expr) in generators {
            if labels.contains(&label) {
                return Err(OrbitError::DuplicateLabel(label));
            }
            labels.push(label);
            exprs.push(expr);
        }
        let has_pole = exprs.iter().any(Expr::has_pole);
        Ok(Semigroup { generators: exprs, labels, has_pole })
    }

    /// Parse each source text as a generator, using the text as its
    /// label. Repeated sources are legal (and dynamically inert); their
    /// labels get an index suffix to stay distinct.
    pub fn from_sources(sources: &[&str]) -> Result<Semigroup, OrbitError> {
        let mut seen: Vec<&str> = Vec::new();
        Semigroup::new(
            sources
                .iter()
                .map(|s| {
                    let n = seen.iter().filter(|p| **p == *s).count();
                    seen.push(s);
                    let label = if n == 0 { s.to_string() } else { format!("{s}#{}", n + 1) };
                    Ok((label, parse(s)?))
                })
                .collect::<Result<Vec<_>, OrbitError>>()?,
        )
    }

    pub fn generators(&self) -> &[Expr] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn has_pole(&self) -> bool {
        self.has_pole
    }

    /// Single-generator semigroup for one composed word of this semigroup.
    pub fn word_semigroup(&self, w: &Word) -> Semigroup {
        let expr = self.compose_word(w);
        let label = w
            .indices
            .iter()
            .map(|&i| self.labels[i].as_str())
            .collect::<Vec<_>>()
            .join(" . ");
        Semigroup::new(vec![(label, expr)]).expect("one generator")
    }

    /// Symbolic composition h_{i1} ∘ h_{i2} ∘ ... ∘ h_{ik} (rightmost
    /// index applied first).
    pub fn compose_word(&self, w: &Word) -> Expr {
        let mut iter = w.indices.iter().rev();
        let first = *iter.next().expect("nonempty word");
        let mut expr = self.generators[first].clone();
        for &i in iter {
            expr = self.generators[i].substitute(&expr);
        }
        expr
    }

    /// All words of length 1..=max_len, in generator order per length.
    pub fn words_up_to(&self, max_len: usize) -> Vec<Word> {
        let g = self.len();
        let mut out = Vec::new();
        let mut current: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &current {
                for i in 0..g {
                    let mut nw = w.clone();
                    nw.push(i);
                    out.push(Word { indices: nw.clone() });
                    next.push(nw);
                }
            }
            current = next;
        }
        out
    }
}

/// One element of the semigroup, as a sequence of generator indices.
/// `indices[0]` is the outermost function; the rightmost index is applied
/// first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub indices: Vec<usize>,
}

impl Word {
    pub fn new(indices: Vec<usize>) -> Word {
        assert!(!indices.is_empty());
        Word { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// h_{i1}(h_{i2}(...h_{ik}(z)...)) — rightmost index applied first.
pub fn word_eval(
    h: &Semigroup,
    w: &Word,
    z: ExtComplex,
    cap: f64,
) -> Result<ExtComplex, crate::complex::Indeterminate> {
    let mut v = z;
    for &i in w.indices.iter().rev() {
        v = h.generators()[i].eval(v, cap)?;
    }
    Ok(v)
}

/// Exploration and classification thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitConfig {
    /// R_esc: modulus beyond which a branch counts as diverging.
    pub escape_radius: f64,
    /// M: modulus below which a branch counts as bounded.
    pub bound_radius: f64,
    /// D: exploration depth.
    pub max_depth: usize,
    /// B: beam width on each side of the dual beam.
    pub beam_width: usize,
    /// G: consecutive-depth streak required for divergence evidence.
    pub growth_streak: usize,
    /// ρ: fraction of depths that must show a bounded node.
    pub bounded_fraction: f64,
    /// C: overflow cap of the extended arithmetic.
    pub overflow_cap: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            escape_radius: 1e10,
            bound_radius: 1e3,
            max_depth: 40,
            beam_width: 64,
            growth_streak: 10,
            bounded_fraction: 0.5,
            overflow_cap: DEFAULT_CAP,
        }
    }
}

impl OrbitConfig {
    /// Default thresholds at a given depth, with the streak clamped to it.
    pub fn with_depth(depth: usize) -> OrbitConfig {
        let mut cfg = OrbitConfig::default();
        cfg.max_depth = depth;
        cfg.growth_streak = cfg.growth_streak.min(depth);
        cfg
    }

    pub fn validate(&self) -> Result<(), OrbitError> {
        let bad = |m: &str| Err(OrbitError::InvalidConfig(m.to_string()));
        if !(self.bound_radius > 0.0 && self.bound_radius < self.escape_radius) {
            return bad("need 0 < bound_radius < escape_radius");
        }
        if !(self.escape_radius < self.overflow_cap) {
            return bad("need escape_radius < overflow_cap");
        }
        if !(self.overflow_cap <= MAX_CAP) {
            return bad("overflow_cap too large");
        }
        if self.max_depth == 0 || self.beam_width == 0 {
            return bad("max_depth and beam_width must be >= 1");
        }
        if self.growth_streak == 0 || self.growth_streak > self.max_depth {
            return bad("need 1 <= growth_streak <= max_depth");
        }
        if !(self.bounded_fraction > 0.0 && self.bounded_fraction <= 1.0) {
            return bad("need 0 < bounded_fraction <= 1");
        }
        Ok(())
    }
}

/// Per-depth evidence gathered during exploration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthRecord {
    /// Min modulus over surviving nodes (None once the tree is extinct).
    pub min_modulus: Option<f64>,
    /// Max modulus over all children generated at this depth
    /// (`f64::INFINITY` when a branch hit the point at infinity).
    pub max_modulus: f64,
    /// Branches promoted to Infinity or terminated above the cap.
    pub escape_events: u32,
    /// Nodes remaining after beam truncation.
    pub surviving: u32,
    /// Branches dropped on indeterminate arithmetic.
    pub dropped_indeterminate: u32,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DepthStats {
    pub per_depth: Vec<DepthRecord>,
}

impl DepthStats {
    pub fn total_escape_events(&self) -> u64 {
        self.per_depth.iter().map(|d| d.escape_events as u64).sum()
    }

    pub fn global_max_modulus(&self) -> f64 {
        self.per_depth.iter().map(|d| d.max_modulus).fold(0.0, f64::max)
    }

    pub fn last_surviving_depth(&self) -> Option<usize> {
        // 1-based depth of the deepest record with survivors.
        self.per_depth
            .iter()
            .enumerate()
            .rev()
            .find(|(_, d)| d.surviving > 0)
            .map(|(i, _)| i + 1)
    }
}

/// The four-way verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitClass {
    Escaping,
    Bounded,
    Bungee,
    Unresolved,
}

impl std::fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OrbitClass::Escaping => "Escaping",
            OrbitClass::Bounded => "Bounded",
            OrbitClass::Bungee => "Bungee",
            OrbitClass::Unresolved => "Unresolved",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitDiagnostics {
    pub class: OrbitClass,
    pub stats: DepthStats,
    pub escape_witness: Option<Word>,
    pub bounded_witness: Option<Word>,
}

// Beam nodes dedup at this resolution in each coordinate.
const DEDUP_EPS: f64 = 1e-12;

#[derive(Clone)]
struct Node {
    value: ExtComplex,
    // Applied-order indices: first applied generator first. Reversed into
    // Word order (outermost first) when emitting a witness.
    path: Vec<usize>,
    // Consecutive depths with modulus > R_esc and strictly increasing.
    streak: usize,
}

impl Node {
    fn word(&self) -> Word {
        let mut idx = self.path.clone();
        idx.reverse();
        Word::new(idx)
    }
}

struct Exploration {
    stats: DepthStats,
    escape_witness: Option<Word>,
    final_low_word: Option<Word>,
    extinguished_by_escape: bool,
}

fn dedup_key(v: ExtComplex) -> (u64, u64) {
    fn quantize(x: f64) -> u64 {
        let q = (x / DEDUP_EPS).round();
        // fold -0.0 into +0.0
        if q == 0.0 { 0 } else { q.to_bits() }
    }
    match v {
        ExtComplex::Finite { re, im } => (quantize(re), quantize(im)),
        ExtComplex::Infinity => (u64::MAX, u64::MAX),
    }
}

fn explore_impl(h: &Semigroup, z: ExtComplex, cfg: &OrbitConfig, beam: Option<usize>) -> Exploration {
    let cap = cfg.overflow_cap;
    let mut nodes = vec![Node { value: z, path: Vec::new(), streak: 0 }];
    let mut stats = DepthStats::default();
    let mut escape_witness: Option<Word> = None;
    let mut final_low_word: Option<Word> = None;
    let mut extinguished_by_escape = false;

    for _depth in 1..=cfg.max_depth {
        let mut children: Vec<Node> = Vec::with_capacity(nodes.len() * h.len());
        let mut max_modulus: f64 = 0.0;
        let mut escape_events = 0u32;
        let mut dropped = 0u32;

        for node in &nodes {
            let parent_mod = node.value.modulus();
            for (gi, gen) in h.generators().iter().enumerate() {
                match gen.eval(node.value, cap) {
                    Err(_) => dropped += 1,
                    Ok(v) => {
                        let m = v.modulus();
                        max_modulus = max_modulus.max(m);
                        let mut child = Node {
                            value: v,
                            path: Vec::with_capacity(node.path.len() + 1),
                            streak: 0,
                        };
                        child.path.extend_from_slice(&node.path);
                        child.path.push(gi);
                        match v {
                            ExtComplex::Infinity => {
                                escape_events += 1;
                                if escape_witness.is_none() {
                                    escape_witness = Some(child.word());
                                }
                                // Pole-bearing semigroups continue through
                                // the point at infinity; entire ones
                                // terminate the branch here.
                                if h.has_pole() {
                                    children.push(child);
                                }
                            }
                            ExtComplex::Finite { .. } => {
                                if m > cfg.escape_radius && m > parent_mod {
                                    child.streak = node.streak + 1;
                                }
                                if child.streak >= cfg.growth_streak && escape_witness.is_none() {
                                    escape_witness = Some(child.word());
                                }
                                children.push(child);
                            }
                        }
                    }
                }
            }
        }

        // Dedup, keeping the first discovery of each quantized value.
        let mut seen = std::collections::HashSet::new();
        children.retain(|n| seen.insert(dedup_key(n.value)));

        // Dual-beam truncation: B lowest-modulus nodes plus B
        // highest-modulus finite nodes, in stable (modulus, discovery
        // order) ranking.
        if let Some(b) = beam {
            if children.len() > b {
                let mut order: Vec<usize> = (0..children.len()).collect();
                order.sort_by(|&x, &y| {
                    children[x]
                        .value
                        .modulus()
                        .partial_cmp(&children[y].value.modulus())
                        .unwrap()
                        .then(x.cmp(&y))
                });
                let mut keep = vec![false; children.len()];
                for &i in order.iter().take(b) {
                    keep[i] = true;
                }
                let mut kept_high = 0;
                for &i in order.iter().rev() {
                    if kept_high == b {
                        break;
                    }
                    if children[i].value.is_finite() {
                        keep[i] = true;
                        kept_high += 1;
                    }
                }
                let mut idx = 0;
                children.retain(|_| {
                    let k = keep[idx];
                    idx += 1;
                    k
                });
            }
        }

        let min_modulus = children
            .iter()
            .map(|n| n.value.modulus())
            .fold(f64::INFINITY, f64::min);
        let surviving = children.len() as u32;
        stats.per_depth.push(DepthRecord {
            min_modulus: if surviving > 0 { Some(min_modulus) } else { None },
            max_modulus,
            escape_events,
            surviving,
            dropped_indeterminate: dropped,
        });

        if surviving == 0 {
            extinguished_by_escape = stats.total_escape_events() > 0;
            break;
        }

        // Track the bounded-side witness: the min-modulus survivor.
        if let Some(low) = children
            .iter()
            .min_by(|a, b| a.value.modulus().partial_cmp(&b.value.modulus()).unwrap())
        {
            final_low_word = Some(low.word());
        }
        nodes = children;
    }

    Exploration { stats, escape_witness, final_low_word, extinguished_by_escape }
}

/// Dual-beam breadth-first exploration of the word tree at `z`.
pub fn explore(h: &Semigroup, z: ExtComplex, cfg: &OrbitConfig) -> DepthStats {
    explore_impl(h, z, cfg, Some(cfg.beam_width)).stats
}

fn decide(ex: &Exploration, cfg: &OrbitConfig) -> OrbitClass {
    let stats = &ex.stats;
    let rho = cfg.bounded_fraction;
    let m_bound = cfg.bound_radius;
    let d = cfg.max_depth;
    let g = cfg.growth_streak;

    // Bounded evidence: a bounded fraction of surviving depths, with a
    // bounded node still alive in the final streak window of the
    // configured range. (A branch alternating through the point at
    // infinity keeps bounded evidence alive on every other depth.)
    let surviving_depths: Vec<(usize, &DepthRecord)> = stats
        .per_depth
        .iter()
        .enumerate()
        .map(|(i, r)| (i + 1, r))
        .filter(|(_, r)| r.surviving > 0)
        .collect();
    let bounded_ok = if surviving_depths.is_empty() {
        false
    } else {
        let low_count = surviving_depths
            .iter()
            .filter(|(_, r)| r.min_modulus.map_or(false, |m| m <= m_bound))
            .count();
        let frac_ok = low_count as f64 >= rho * surviving_depths.len() as f64;
        let window_start = d.saturating_sub(g) + 1;
        let window_ok = surviving_depths
            .iter()
            .any(|(n, r)| *n >= window_start && r.min_modulus.map_or(false, |m| m <= m_bound));
        frac_ok && window_ok
    };

    let escape_ok = ex.escape_witness.is_some();
    if escape_ok && bounded_ok {
        return OrbitClass::Bungee;
    }

    // Tail divergence: every depth in the final streak window survives
    // with min modulus beyond R_esc, nondecreasing.
    let tail_divergence = {
        let window_start = d.saturating_sub(g) + 1;
        let tail: Vec<f64> = stats
            .per_depth
            .iter()
            .enumerate()
            .filter(|(i, _)| i + 1 >= window_start)
            .map(|(_, r)| if r.surviving > 0 { r.min_modulus.unwrap() } else { f64::NAN })
            .collect();
        tail.len() == d - window_start + 1
            && tail.iter().all(|m| !m.is_nan() && *m > cfg.escape_radius)
            && tail.windows(2).all(|w| w[1] >= w[0])
    };

    if (ex.extinguished_by_escape || tail_divergence) && !bounded_ok {
        return OrbitClass::Escaping;
    }

    if stats.total_escape_events() == 0 && stats.global_max_modulus() <= m_bound {
        return OrbitClass::Bounded;
    }

    OrbitClass::Unresolved
}

fn diagnostics(ex: Exploration, cfg: &OrbitConfig) -> OrbitDiagnostics {
    let class = decide(&ex, cfg);
    let bounded_witness = match class {
        OrbitClass::Bungee | OrbitClass::Bounded => ex.final_low_word.clone(),
        _ => None,
    };
    let escape_witness = match class {
        OrbitClass::Bungee | OrbitClass::Escaping => {
            // Tail divergence may resolve Escaping without a terminated
            // branch; the lowest surviving branch is then the evidence.
            ex.escape_witness.clone().or(ex.final_low_word)
        }
        _ => None,
    };
    OrbitDiagnostics { class, stats: ex.stats, escape_witness, bounded_witness }
}

/// Classify a single point under the semigroup.
pub fn classify_point(h: &Semigroup, z: ExtComplex, cfg: &OrbitConfig) -> OrbitDiagnostics {
    if !z.is_finite() && !h.has_pole() {
        // Entire generators cannot continue from infinity; by convention
        // the point at infinity escapes.
        return OrbitDiagnostics {
            class: OrbitClass::Escaping,
            stats: DepthStats::default(),
            escape_witness: Some(Word::new(vec![0])),
            bounded_witness: None,
        };
    }
    diagnostics(explore_impl(h, z, cfg, Some(cfg.beam_width)), cfg)
}

/// Brute-force oracle: the same decision rules applied to the full word
/// tree (no beam truncation) at a small depth.
pub fn classify_exhaustive(
    h: &Semigroup,
    z: ExtComplex,
    depth: usize,
    cfg: &OrbitConfig,
) -> Result<OrbitDiagnostics, OrbitError> {
    let words = (h.len() as f64).powi(depth as i32);
    if depth > 10 || words > 1e7 {
        return Err(OrbitError::BudgetExceeded { words, depth });
    }
    let mut cfg = cfg.clone();
    cfg.max_depth = depth;
    cfg.growth_streak = cfg.growth_streak.min(depth);
    if !z.is_finite() && !h.has_pole() {
        return Ok(classify_point(h, z, &cfg));
    }
    Ok(diagnostics(explore_impl(h, z, &cfg, None), &cfg))
}

/// Classification of `z` under plain iteration of one semigroup word
/// (each depth applies the whole word once).
pub fn classify_word_iteration(
    h: &Semigroup,
    w: &Word,
    z: ExtComplex,
    cfg: &OrbitConfig,
) -> OrbitDiagnostics {
    classify_point(&h.word_semigroup(w), z, cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommuteReport {
    pub commutes: bool,
    pub max_residual: f64,
    pub samples_used: usize,
    pub skipped: usize,
}

/// Numerical check that the generators commute pairwise: evaluates
/// |h_i(h_j(z)) - h_j(h_i(z))| on seeded random points.
pub fn commutes(h: &Semigroup, samples: usize, seed: u64, cfg: &OrbitConfig) -> CommuteReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cap = cfg.overflow_cap;
    let mut max_residual: f64 = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    let mut ok = true;
    for _ in 0..samples {
        let z = ExtComplex::finite(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        for i in 0..h.len() {
            for j in (i + 1)..h.len() {
                let fi = &h.generators()[i];
                let fj = &h.generators()[j];
                let ij = fj.eval(z, cap).and_then(|v| fi.eval(v, cap));
                let ji = fi.eval(z, cap).and_then(|v| fj.eval(v, cap));
                match (ij, ji) {
                    (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                        used += 1;
                        let diff = crate::complex::ext_sub(a, b, cap)
                            .map(|d| d.modulus())
                            .unwrap_or(f64::INFINITY);
                        let scale = 1.0 + a.modulus().min(b.modulus());
                        if diff > 1e-6 * scale {
                            ok = false;
                        }
                        max_residual = max_residual.max(diff / scale);
                    }
                    _ => skipped += 1,
                }
            }
        }
    }
    CommuteReport { commutes: ok, max_residual, samples_used: used, skipped }
}
