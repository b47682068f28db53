//! Unique-Games / Label-Cover instances, planted generators, brute-force OPT,
//! folding, and the two reductions that turn instances into labeled-example
//! streams.
//!
//! Coordinate layout: vertex blocks are concatenated u-side first. A UG
//! example lives in `R^((|U|+|V|)·k)`; an LC example in `R^(|U|k + |V|m)`.
//! Edge satisfaction is `π_e(ℓ(v)) = ℓ(u)` for both instance kinds.

use crate::gadgets::LabeledExample;
use crate::gauss::{sample_bits, sample_gaussian, RngSeed};
use crate::poly::{MonomialKey, Polynomial};
use crate::{Error, Result};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A labeling of both vertex sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    #[serde(rename = "u")]
    pub u_labels: Vec<u32>,
    #[serde(rename = "v")]
    pub v_labels: Vec<u32>,
}

/// Unique Games: bipartite constraint graph with per-edge bijections on [k].
#[derive(Debug, Clone, PartialEq)]
pub struct UniqueGamesInstance {
    nu: usize,
    nv: usize,
    k: usize,
    edges: Vec<(u32, u32)>,
    maps: Vec<Vec<u32>>,
}

/// Label Cover: per-edge total projections [m] → [k], m ≥ k.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCoverInstance {
    nu: usize,
    nv: usize,
    k: usize,
    m: usize,
    edges: Vec<(u32, u32)>,
    maps: Vec<Vec<u32>>,
}

fn check_graph(nu: usize, nv: usize, edges: &[(u32, u32)]) -> Result<()> {
    if nu == 0 || nv == 0 {
        return Err(Error::invalid("instance needs at least one vertex per side"));
    }
    if edges.is_empty() {
        return Err(Error::invalid("instance needs at least one edge"));
    }
    for &(u, v) in edges {
        if u as usize >= nu || v as usize >= nv {
            return Err(Error::invalid(format!(
                "edge ({u},{v}) outside vertex ranges {nu}x{nv}"
            )));
        }
    }
    Ok(())
}

fn biregular_degrees(nu: usize, nv: usize, edges: &[(u32, u32)]) -> Option<(usize, usize)> {
    let mut du = vec![0usize; nu];
    let mut dv = vec![0usize; nv];
    for &(u, v) in edges {
        du[u as usize] += 1;
        dv[v as usize] += 1;
    }
    let d0 = du[0];
    let d1 = dv[0];
    if du.iter().all(|&d| d == d0) && dv.iter().all(|&d| d == d1) {
        Some((d0, d1))
    } else {
        None
    }
}

impl UniqueGamesInstance {
    pub fn new(
        nu: usize,
        nv: usize,
        k: usize,
        edges: Vec<(u32, u32)>,
        maps: Vec<Vec<u32>>,
    ) -> Result<Self> {
        check_graph(nu, nv, &edges)?;
        if k == 0 {
            return Err(Error::invalid("alphabet size k must be >= 1"));
        }
        if maps.len() != edges.len() {
            return Err(Error::invalid(format!(
                "{} maps for {} edges",
                maps.len(),
                edges.len()
            )));
        }
        for (e, map) in maps.iter().enumerate() {
            if map.len() != k {
                return Err(Error::invalid(format!("map {e} has length {}, want {k}", map.len())));
            }
            let mut seen = vec![false; k];
            for &img in map {
                if img as usize >= k || std::mem::replace(&mut seen[img as usize], true) {
                    return Err(Error::invalid(format!("map {e} is not a bijection on [{k}]")));
                }
            }
        }
        Ok(UniqueGamesInstance { nu, nv, k, edges, maps })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Bijection of edge `e` as a permutation array (`map[j]` = image of j).
    pub fn map(&self, e: usize) -> &[u32] {
        &self.maps[e]
    }

    /// `Some((u_degree, v_degree))` when the graph is biregular.
    pub fn biregular(&self) -> Option<(usize, usize)> {
        biregular_degrees(self.nu, self.nv, &self.edges)
    }

    /// Coordinate of `x_u^{(i)}` in the reduction's example space.
    pub fn coord_u(&self, u: usize, i: usize) -> usize {
        u * self.k + i
    }

    /// Coordinate of `x_v^{(j)}`.
    pub fn coord_v(&self, v: usize, j: usize) -> usize {
        (self.nu + v) * self.k + j
    }

    pub fn example_dimension(&self) -> usize {
        (self.nu + self.nv) * self.k
    }

    pub fn validate_labeling(&self, l: &Labeling) -> Result<()> {
        if l.u_labels.len() != self.nu || l.v_labels.len() != self.nv {
            return Err(Error::invalid("labeling shape does not match instance"));
        }
        if l.u_labels.iter().chain(&l.v_labels).any(|&x| x as usize >= self.k) {
            return Err(Error::invalid("label outside alphabet"));
        }
        Ok(())
    }

    /// Number of edges with `π_e(ℓ(v)) = ℓ(u)`.
    pub fn satisfied_count(&self, l: &Labeling) -> Result<usize> {
        self.validate_labeling(l)?;
        Ok(count_satisfied(&self.edges, &self.maps, l))
    }

    pub fn satisfied_fraction(&self, l: &Labeling) -> Result<f64> {
        Ok(self.satisfied_count(l)? as f64 / self.edges.len() as f64)
    }
}

impl LabelCoverInstance {
    pub fn new(
        nu: usize,
        nv: usize,
        k: usize,
        m: usize,
        edges: Vec<(u32, u32)>,
        maps: Vec<Vec<u32>>,
    ) -> Result<Self> {
        check_graph(nu, nv, &edges)?;
        if k == 0 || m < k {
            return Err(Error::invalid(format!("need 1 <= k <= m, got k={k} m={m}")));
        }
        if maps.len() != edges.len() {
            return Err(Error::invalid(format!(
                "{} maps for {} edges",
                maps.len(),
                edges.len()
            )));
        }
        for (e, map) in maps.iter().enumerate() {
            if map.len() != m {
                return Err(Error::invalid(format!("map {e} has length {}, want {m}", map.len())));
            }
            if map.iter().any(|&img| img as usize >= k) {
                return Err(Error::invalid(format!("map {e} has image outside [{k}]")));
            }
        }
        Ok(LabelCoverInstance { nu, nv, k, m, edges, maps })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn map(&self, e: usize) -> &[u32] {
        &self.maps[e]
    }

    pub fn biregular(&self) -> Option<(usize, usize)> {
        biregular_degrees(self.nu, self.nv, &self.edges)
    }

    pub fn coord_u(&self, u: usize, i: usize) -> usize {
        u * self.k + i
    }

    pub fn coord_v(&self, v: usize, j: usize) -> usize {
        self.nu * self.k + v * self.m + j
    }

    pub fn example_dimension(&self) -> usize {
        self.nu * self.k + self.nv * self.m
    }

    pub fn validate_labeling(&self, l: &Labeling) -> Result<()> {
        if l.u_labels.len() != self.nu || l.v_labels.len() != self.nv {
            return Err(Error::invalid("labeling shape does not match instance"));
        }
        if l.u_labels.iter().any(|&x| x as usize >= self.k)
            || l.v_labels.iter().any(|&x| x as usize >= self.m)
        {
            return Err(Error::invalid("label outside alphabet"));
        }
        Ok(())
    }

    pub fn satisfied_count(&self, l: &Labeling) -> Result<usize> {
        self.validate_labeling(l)?;
        Ok(count_satisfied(&self.edges, &self.maps, l))
    }

    pub fn satisfied_fraction(&self, l: &Labeling) -> Result<f64> {
        Ok(self.satisfied_count(l)? as f64 / self.edges.len() as f64)
    }
}

fn count_satisfied(edges: &[(u32, u32)], maps: &[Vec<u32>], l: &Labeling) -> usize {
    edges
        .iter()
        .zip(maps)
        .filter(|(&(u, v), map)| map[l.v_labels[v as usize] as usize] == l.u_labels[u as usize])
        .count()
}

/// Either instance kind, as stored in instance files.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Ug(UniqueGamesInstance),
    Lc(LabelCoverInstance),
}

/// An instance plus the generator's hidden labeling, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDocument {
    pub instance: Instance,
    pub planted: Option<Labeling>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    #[serde(rename = "type")]
    kind: String,
    #[serde(rename = "U")]
    u: usize,
    #[serde(rename = "V")]
    v: usize,
    k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    edges: Vec<(u32, u32)>,
    maps: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    planted: Option<Labeling>,
}

impl InstanceDocument {
    fn to_repr(&self) -> InstanceRepr {
        match &self.instance {
            Instance::Ug(inst) => InstanceRepr {
                kind: "ug".into(),
                u: inst.nu,
                v: inst.nv,
                k: inst.k,
                m: None,
                edges: inst.edges.clone(),
                maps: inst.maps.clone(),
                planted: self.planted.clone(),
            },
            Instance::Lc(inst) => InstanceRepr {
                kind: "lc".into(),
                u: inst.nu,
                v: inst.nv,
                k: inst.k,
                m: Some(inst.m),
                edges: inst.edges.clone(),
                maps: inst.maps.clone(),
                planted: self.planted.clone(),
            },
        }
    }

    fn from_repr(repr: InstanceRepr) -> Result<Self> {
        let instance = match repr.kind.as_str() {
            "ug" => Instance::Ug(UniqueGamesInstance::new(
                repr.u, repr.v, repr.k, repr.edges, repr.maps,
            )?),
            "lc" => {
                let m = repr
                    .m
                    .ok_or_else(|| Error::invalid("label-cover instance missing field m"))?;
                Instance::Lc(LabelCoverInstance::new(
                    repr.u, repr.v, repr.k, m, repr.edges, repr.maps,
                )?)
            }
            other => return Err(Error::invalid(format!("unknown instance type '{other}'"))),
        };
        let doc = InstanceDocument { instance, planted: repr.planted };
        if let Some(l) = &doc.planted {
            match &doc.instance {
                Instance::Ug(inst) => inst.validate_labeling(l)?,
                Instance::Lc(inst) => inst.validate_labeling(l)?,
            }
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_repr())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_repr(serde_json::from_str(json)?)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Hex SHA-256 of the instance's canonical JSON (planted labeling excluded),
/// used as provenance in reports.
pub fn instance_hash(instance: &Instance) -> String {
    let doc = InstanceDocument { instance: instance.clone(), planted: None };
    let json = serde_json::to_string(&doc.to_repr()).expect("instance serialization");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

// --- brute-force OPT --------------------------------------------------------

fn check_bruteforce_capacity(k: usize, nu: usize, m: usize, nv: usize) -> Result<()> {
    let space = (k as f64).powi(nu as i32) * (m as f64).powi(nv as i32);
    if !(space <= 1e7) {
        return Err(Error::capacity(format!(
            "labeling space k^|U|·m^|V| = {space:.3e} exceeds 1e7"
        )));
    }
    Ok(())
}

/// Exact OPT by enumeration. V-side labelings are enumerated; each u then
/// independently takes its best label, which preserves exactness because
/// edges couple one u with one v only. First maximizer wins ties, so the
/// result is deterministic.
fn opt_exhaustive(
    nu: usize,
    nv: usize,
    k: usize,
    m: usize,
    edges: &[(u32, u32)],
    maps: &[Vec<u32>],
) -> (f64, Labeling) {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nu];
    for (e, &(u, _)) in edges.iter().enumerate() {
        incident[u as usize].push(e);
    }
    let mut v_labels = vec![0u32; nv];
    let mut best_count = 0usize;
    let mut best: Option<Labeling> = None;
    let mut tally = vec![0usize; k];
    loop {
        let mut total = 0usize;
        let mut u_labels = vec![0u32; nu];
        for u in 0..nu {
            tally.iter_mut().for_each(|t| *t = 0);
            for &e in &incident[u] {
                let v = edges[e].1 as usize;
                tally[maps[e][v_labels[v] as usize] as usize] += 1;
            }
            let (label, count) =
                tally.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).unwrap();
            u_labels[u] = label as u32;
            total += count;
        }
        if best.is_none() || total > best_count {
            best_count = total;
            best = Some(Labeling { u_labels, v_labels: v_labels.clone() });
        }
        // odometer over v labelings, lexicographic
        let mut pos = nv;
        while pos > 0 {
            pos -= 1;
            v_labels[pos] += 1;
            if (v_labels[pos] as usize) < m {
                break;
            }
            v_labels[pos] = 0;
            if pos == 0 {
                return (best_count as f64 / edges.len() as f64, best.unwrap());
            }
        }
        if nv == 0 {
            break;
        }
    }
    (best_count as f64 / edges.len() as f64, best.unwrap())
}

/// Exhaustive OPT for a Unique Games instance (tiny instances only).
pub fn opt_bruteforce_ug(inst: &UniqueGamesInstance) -> Result<(f64, Labeling)> {
    check_bruteforce_capacity(inst.k, inst.nu, inst.k, inst.nv)?;
    Ok(opt_exhaustive(inst.nu, inst.nv, inst.k, inst.k, &inst.edges, &inst.maps))
}

/// Exhaustive OPT for a Label Cover instance (tiny instances only).
pub fn opt_bruteforce_lc(inst: &LabelCoverInstance) -> Result<(f64, Labeling)> {
    check_bruteforce_capacity(inst.k, inst.nu, inst.m, inst.nv)?;
    Ok(opt_exhaustive(inst.nu, inst.nv, inst.k, inst.m, &inst.edges, &inst.maps))
}

// --- planted generators ------------------------------------------------------

fn stub_matching_edges(
    nu: usize,
    nv: usize,
    degree: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(u32, u32)>> {
    if degree == 0 {
        return Err(Error::config("vertex degree must be >= 1"));
    }
    let total = nu * degree;
    if total % nv != 0 {
        return Err(Error::config(format!(
            "biregular graph impossible: |U|·deg = {total} not divisible by |V| = {nv}"
        )));
    }
    let dv = total / nv;
    let mut v_stubs: Vec<u32> = (0..nv as u32).flat_map(|v| std::iter::repeat(v).take(dv)).collect();
    // Fisher-Yates
    for i in (1..v_stubs.len()).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        v_stubs.swap(i, j);
    }
    Ok((0..nu as u32)
        .flat_map(|u| std::iter::repeat(u).take(degree))
        .zip(v_stubs)
        .collect())
}

fn random_permutation(k: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..k as u32).collect();
    for i in (1..k).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Bijection consistent with the plant in both directions the artifact uses:
/// `π(ℓv) = ℓu` (edge satisfaction) and `π(ℓu) = ℓv` (the reduction sampler
/// reads `g_{π(i)}` at u-coordinate i). The two pins force a transposition
/// (or a fixed point when the labels coincide); the rest is uniform.
fn planted_bijection(k: usize, lu: u32, lv: u32, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let rest: Vec<u32> =
        (0..k as u32).filter(|&x| x != lu && x != lv).collect();
    let shuffled = {
        let mut r = rest.clone();
        for i in (1..r.len()).rev() {
            let j = rng.random_range(0..=i as u64) as usize;
            r.swap(i, j);
        }
        r
    };
    let mut perm = vec![0u32; k];
    perm[lv as usize] = lu;
    perm[lu as usize] = lv;
    let mut it = shuffled.into_iter();
    for slot in rest {
        perm[slot as usize] = it.next().unwrap();
    }
    perm
}

fn noise_edge_set(edge_count: usize, eta: f64, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("noise rate must be in [0,1], got {eta}")));
    }
    let noisy = (eta * edge_count as f64).floor() as usize;
    let mut order: Vec<usize> = (0..edge_count).collect();
    for i in (1..edge_count).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        order.swap(i, j);
    }
    order.truncate(noisy);
    order.sort_unstable();
    Ok(order)
}

/// Random biregular UG instance whose bijections are consistent with a hidden
/// labeling, except on exactly `⌊η·|E|⌋` rerandomized edges.
pub fn generate_planted_ug(
    nu: usize,
    nv: usize,
    degree: usize,
    k: usize,
    eta: f64,
    seed: RngSeed,
) -> Result<(UniqueGamesInstance, Labeling)> {
    if k == 0 {
        return Err(Error::config("alphabet size k must be >= 1"));
    }
    let mut rng = seed.rng();
    let edges = stub_matching_edges(nu, nv, degree, &mut rng)?;
    let labeling = Labeling {
        u_labels: (0..nu).map(|_| rng.random_range(0..k as u64) as u32).collect(),
        v_labels: (0..nv).map(|_| rng.random_range(0..k as u64) as u32).collect(),
    };
    let mut maps: Vec<Vec<u32>> = edges
        .iter()
        .map(|&(u, v)| {
            planted_bijection(
                k,
                labeling.u_labels[u as usize],
                labeling.v_labels[v as usize],
                &mut rng,
            )
        })
        .collect();
    for e in noise_edge_set(edges.len(), eta, &mut rng)? {
        maps[e] = random_permutation(k, &mut rng);
    }
    let inst = UniqueGamesInstance::new(nu, nv, k, edges, maps)?;
    Ok((inst, labeling))
}

/// Random biregular LC instance with planted projection consistency
/// `π_e(ℓ(v)) = ℓ(u)`, except on exactly `⌊η·|E|⌋` rerandomized edges.
pub fn generate_planted_lc(
    nu: usize,
    nv: usize,
    degree: usize,
    k: usize,
    m: usize,
    eta: f64,
    seed: RngSeed,
) -> Result<(LabelCoverInstance, Labeling)> {
    if k == 0 || m < k {
        return Err(Error::config(format!("need 1 <= k <= m, got k={k} m={m}")));
    }
    let mut rng = seed.rng();
    let edges = stub_matching_edges(nu, nv, degree, &mut rng)?;
    let labeling = Labeling {
        u_labels: (0..nu).map(|_| rng.random_range(0..k as u64) as u32).collect(),
        v_labels: (0..nv).map(|_| rng.random_range(0..m as u64) as u32).collect(),
    };
    let mut maps: Vec<Vec<u32>> = edges
        .iter()
        .map(|&(u, v)| {
            let lu = labeling.u_labels[u as usize];
            let lv = labeling.v_labels[v as usize];
            let mut map: Vec<u32> =
                (0..m).map(|_| rng.random_range(0..k as u64) as u32).collect();
            map[lv as usize] = lu;
            map
        })
        .collect();
    for e in noise_edge_set(edges.len(), eta, &mut rng)? {
        maps[e] = (0..m).map(|_| rng.random_range(0..k as u64) as u32).collect();
    }
    let inst = LabelCoverInstance::new(nu, nv, k, m, edges, maps)?;
    Ok((inst, labeling))
}

// --- reduction configs and streams -------------------------------------------

/// Gadget parameters a reduction runs with. Defaults mirror the gadget
/// policies with the instance alphabet in the role of the block size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub d: usize,
    pub beta: f64,
    pub delta: f64,
    pub seed: RngSeed,
}

impl ReductionConfig {
    pub fn with_params(d: usize, beta: f64, delta: f64, seed: RngSeed) -> Result<Self> {
        if d == 0 {
            return Err(Error::config("degree d must be >= 1"));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::config(format!("beta must lie in [0, 1), got {beta}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::config(format!("delta must be positive and finite, got {delta}")));
        }
        Ok(ReductionConfig { d, beta, delta, seed })
    }

    /// UG defaults: `β = 1/log₂ k`, `δ = 2^(−min(k², 40))`.
    pub fn for_ug(inst: &UniqueGamesInstance, d: usize, seed: RngSeed) -> Result<Self> {
        let k = inst.k();
        Self::with_params(
            d,
            1.0 / (k as f64).log2(),
            2f64.powi(-((k * k).min(40) as i32)),
            seed,
        )
    }

    /// LC defaults: `β = 1/log₂ m`, `δ = 2^(−min(m, 40))`; validates the
    /// T₂-style ladder `t = m^i, i ≤ ⌈(log₂ m)²⌉` against overflow.
    pub fn for_lc(inst: &LabelCoverInstance, seed: RngSeed) -> Result<Self> {
        let m = inst.m();
        let cap = crate::gadgets::t2_exponent_cap(m);
        let log10_t3 = 3.0 * cap as f64 * (m as f64).log10();
        if log10_t3 > 290.0 {
            return Err(Error::config(format!(
                "LC ladder overflows: t = m^i with i up to {cap}; reduce m so the exponent cap shrinks"
            )));
        }
        Self::with_params(1, 1.0 / (m as f64).log2(), 2f64.powi(-(m.min(40) as i32)), seed)
    }
}

/// One draw of the UG reduction: uniform edge, all blocks outside it zero,
/// `y_v^{(i)} = g_i`, `y_u^{(i)} = a_i h_i + (g_{π_e(i)})^d + δb`.
pub fn draw_ug_example(
    inst: &UniqueGamesInstance,
    cfg: &ReductionConfig,
    rng: &mut ChaCha8Rng,
) -> Result<LabeledExample> {
    let k = inst.k();
    let e = rng.random_range(0..inst.edges().len() as u64) as usize;
    let (u, v) = inst.edges()[e];
    let a = sample_bits(rng, k, cfg.beta)?;
    let h: Vec<f64> = (0..k).map(|_| sample_gaussian(rng)).collect();
    let g: Vec<f64> = (0..k).map(|_| sample_gaussian(rng)).collect();
    let b: i8 = if rng.random::<bool>() { 1 } else { -1 };
    let shift = b as f64 * cfg.delta;
    let mut y = vec![0.0; inst.example_dimension()];
    let map = inst.map(e);
    for i in 0..k {
        y[inst.coord_v(v as usize, i)] = g[i];
        y[inst.coord_u(u as usize, i)] =
            a[i] as f64 * h[i] + g[map[i] as usize].powi(cfg.d as i32) + shift;
    }
    LabeledExample::new(y, b)
}

/// Lazy UG example stream (infinite).
pub struct UgStream<'a> {
    inst: &'a UniqueGamesInstance,
    cfg: ReductionConfig,
    rng: ChaCha8Rng,
}

impl Iterator for UgStream<'_> {
    type Item = Result<LabeledExample>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(draw_ug_example(self.inst, &self.cfg, &mut self.rng))
    }
}

pub fn reduce_ug<'a>(inst: &'a UniqueGamesInstance, cfg: &ReductionConfig) -> UgStream<'a> {
    UgStream { inst, cfg: *cfg, rng: cfg.seed.rng() }
}

/// One draw of the LC reduction: uniform v, T₂ recipe on its m coordinates
/// (`t = m^i`), every other block zero, then fold.
pub fn draw_lc_example(
    inst: &LabelCoverInstance,
    basis: &FoldingBasis,
    cfg: &ReductionConfig,
    rng: &mut ChaCha8Rng,
) -> Result<LabeledExample> {
    let m = inst.m();
    let v = rng.random_range(0..inst.nv() as u64) as usize;
    let a = sample_bits(rng, m, cfg.beta)?;
    let g: Vec<f64> = (0..m).map(|_| sample_gaussian(rng)).collect();
    let b: i8 = if rng.random::<bool>() { 1 } else { -1 };
    let cap = crate::gadgets::t2_exponent_cap(m) as u64;
    let i = 1 + rng.random_range(0..cap);
    let t = (m as f64).powi(i as i32);
    let t3 = t * t * t;
    let shift = b as f64 * t * t * cfg.delta;
    let mut y = vec![0.0; inst.example_dimension()];
    for j in 0..m {
        y[inst.coord_v(v, j)] = t3 * a[j] as f64 * g[j] + shift;
    }
    LabeledExample::new(basis.fold(&y)?, b)
}

/// Lazy LC example stream (infinite); examples come out already folded.
pub struct LcStream<'a> {
    inst: &'a LabelCoverInstance,
    basis: &'a FoldingBasis,
    cfg: ReductionConfig,
    rng: ChaCha8Rng,
}

impl Iterator for LcStream<'_> {
    type Item = Result<LabeledExample>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(draw_lc_example(self.inst, self.basis, &self.cfg, &mut self.rng))
    }
}

pub fn reduce_lc<'a>(
    inst: &'a LabelCoverInstance,
    basis: &'a FoldingBasis,
    cfg: &ReductionConfig,
) -> Result<LcStream<'a>> {
    if basis.dim() != inst.example_dimension() {
        return Err(Error::DimensionMismatch {
            expected: inst.example_dimension(),
            got: basis.dim(),
        });
    }
    Ok(LcStream { inst, basis, cfg: *cfg, rng: cfg.seed.rng() })
}

/// Collects `count` examples from a stream, failing fast on a draw error.
pub fn take_examples(
    stream: impl Iterator<Item = Result<LabeledExample>>,
    count: usize,
) -> Result<Vec<LabeledExample>> {
    stream.take(count).collect()
}

// --- intended hypotheses -------------------------------------------------------

/// The completeness-side PTF for a UG labeling:
/// `Σ_u x_u^{(ℓ(u))} − Σ_v (x_v^{(ℓ(v))})^d`.
pub fn intended_ug_ptf(
    inst: &UniqueGamesInstance,
    l: &Labeling,
    d: usize,
) -> Result<Polynomial> {
    inst.validate_labeling(l)?;
    let mut terms = Vec::new();
    for (u, &lu) in l.u_labels.iter().enumerate() {
        terms.push((MonomialKey::new(vec![inst.coord_u(u, lu as usize) as u32]), 1.0));
    }
    for (v, &lv) in l.v_labels.iter().enumerate() {
        terms.push((MonomialKey::new(vec![inst.coord_v(v, lv as usize) as u32; d]), -1.0));
    }
    Polynomial::new(inst.example_dimension(), d, terms)
}

/// The completeness-side PTF for an LC labeling: `Σ_w x_w^{(ℓ(w))}`. Folded
/// (per [`check_folded`]) exactly when the labeling satisfies every edge.
pub fn intended_lc_ptf(inst: &LabelCoverInstance, l: &Labeling) -> Result<Polynomial> {
    inst.validate_labeling(l)?;
    let mut terms = Vec::new();
    for (u, &lu) in l.u_labels.iter().enumerate() {
        terms.push((MonomialKey::new(vec![inst.coord_u(u, lu as usize) as u32]), 1.0));
    }
    for (v, &lv) in l.v_labels.iter().enumerate() {
        terms.push((MonomialKey::new(vec![inst.coord_v(v, lv as usize) as u32]), 1.0));
    }
    Polynomial::new(inst.example_dimension(), 1, terms)
}

// --- folding ---------------------------------------------------------------------

/// Orthonormal basis of `H = span{b(e,i)}` for a Label Cover instance, with
/// the generators kept alongside. `b(e,i)` has +1 at the u-coordinate `i` of
/// edge `e` and −1 at each v-coordinate `j ∈ π_e⁻¹(i)`.
#[derive(Debug, Clone)]
pub struct FoldingBasis {
    dim: usize,
    generators: Vec<Vec<f64>>,
    basis: Vec<Vec<f64>>,
}

const GS_DROP_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl FoldingBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The generating vectors b(e,i), edge-major then label-minor.
    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    /// Orthonormal basis vectors of H (length = rank of the generator set).
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_vectors(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `Fold(y) = y − P_H y`.
    pub fn fold(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        let mut r = y.to_vec();
        for q in &self.basis {
            let c = dot(&r, q);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
        Ok(r)
    }
}

/// Builds the folding basis by modified Gram-Schmidt with reorthogonalization
/// (two projection passes per vector; drop tolerance 1e-10 — generator
/// entries are in {−1, 0, 1}, so conditioning is mild at desk scale).
pub fn build_folding(inst: &LabelCoverInstance) -> FoldingBasis {
    let dim = inst.example_dimension();
    let mut generators = Vec::with_capacity(inst.edges().len() * inst.k());
    for (e, &(u, v)) in inst.edges().iter().enumerate() {
        let map = inst.map(e);
        for i in 0..inst.k() {
            let mut b = vec![0.0; dim];
            b[inst.coord_u(u as usize, i)] = 1.0;
            for (j, &img) in map.iter().enumerate() {
                if img as usize == i {
                    b[inst.coord_v(v as usize, j)] = -1.0;
                }
            }
            generators.push(b);
        }
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for g in &generators {
        let mut w = g.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm > GS_DROP_TOL {
            for wi in w.iter_mut() {
                *wi /= norm;
            }
            basis.push(w);
        }
    }
    FoldingBasis { dim, generators, basis }
}

/// Checks that a degree-≤2 polynomial is folded: the linear-coefficient
/// identity `c_u^{(i)} = Σ_{j∈π_e⁻¹(i)} c_v^{(j)}` within `tol` for every
/// edge and label, plus 5 random shift probes `p(y + c·b(e,i)) = p(y)` per
/// generator within `tol·scale`.
pub fn check_folded(p: &Polynomial, inst: &LabelCoverInstance, tol: f64) -> Result<bool> {
    if p.dim() != inst.example_dimension() {
        return Err(Error::DimensionMismatch {
            expected: inst.example_dimension(),
            got: p.dim(),
        });
    }
    if p.max_term_degree() > 2 {
        return Err(Error::invalid("check_folded expects degree <= 2"));
    }
    for (e, &(u, v)) in inst.edges().iter().enumerate() {
        let map = inst.map(e);
        for i in 0..inst.k() {
            let lhs = p.coeff(&MonomialKey::new(vec![inst.coord_u(u as usize, i) as u32]));
            let rhs: f64 = map
                .iter()
                .enumerate()
                .filter(|(_, &img)| img as usize == i)
                .map(|(j, _)| p.coeff(&MonomialKey::new(vec![inst.coord_v(v as usize, j) as u32])))
                .sum();
            if (lhs - rhs).abs() > tol {
                return Ok(false);
            }
        }
    }
    let basis = build_folding(inst);
    let mut rng = RngSeed::new(0x666F_6C64).rng();
    for b in basis.generators() {
        for _ in 0..5 {
            let y: Vec<f64> = (0..p.dim()).map(|_| sample_gaussian(&mut rng)).collect();
            let c = 4.0 * rng.random::<f64>() - 2.0;
            let shifted: Vec<f64> = y.iter().zip(b).map(|(yi, bi)| yi + c * bi).collect();
            let base = p.evaluate(&y)?;
            let moved = p.evaluate(&shifted)?;
            let scale = 1.0 + base.abs().max(moved.abs());
            if (moved - base).abs() > tol * scale {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
