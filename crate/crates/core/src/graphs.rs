//! Coupling-graph construction and triad minor embedding.
//!
//! A dense (all-to-all) problem graph `K_N` is expanded into a sparse triad
//! graph by replacing every vertex with a ferromagnetic chain of `N-1`
//! oscillators. Chains are glued to each other by one inter-chain edge per
//! problem pair, carrying the original weight, while every intra-chain edge
//! carries a single uniform weight `J_c > 0`. Phase information is mapped
//! back to the dense graph by circularly averaging each chain
//! ("unembedding").

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

/// A weighted oscillator network: a symmetric coupling matrix with zero
/// diagonal plus one natural frequency per oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    n: usize,
    couplings: Array2<f64>,
    frequencies: Array1<f64>,
}

impl NetworkSpec {
    /// Build a network from an explicit coupling matrix and frequency vector.
    ///
    /// The matrix must be square, exactly symmetric, and zero on the
    /// diagonal; `frequencies` must have matching length.
    pub fn new(couplings: Array2<f64>, frequencies: Array1<f64>) -> Result<Self> {
        let n = couplings.nrows();
        if couplings.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "coupling matrix must be square, got {}x{}",
                couplings.nrows(),
                couplings.ncols()
            )));
        }
        if frequencies.len() != n {
            return Err(Error::InvalidArgument(format!(
                "frequency vector length {} does not match {} vertices",
                frequencies.len(),
                n
            )));
        }
        for i in 0..n {
            if couplings[[i, i]] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "coupling diagonal must be zero, J[{i}][{i}] = {}",
                    couplings[[i, i]]
                )));
            }
            for j in (i + 1)..n {
                if couplings[[i, j]] != couplings[[j, i]] {
                    return Err(Error::InvalidArgument(format!(
                        "coupling matrix must be symmetric, J[{i}][{j}] != J[{j}][{i}]"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            couplings,
            frequencies,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &Array2<f64> {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[[i, j]]
    }

    pub fn frequencies(&self) -> &Array1<f64> {
        &self.frequencies
    }

    /// Replace the frequency vector, keeping the couplings.
    pub fn with_frequencies(mut self, frequencies: Array1<f64>) -> Result<Self> {
        if frequencies.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "frequency vector length {} does not match {} vertices",
                frequencies.len(),
                self.n
            )));
        }
        self.frequencies = frequencies;
        Ok(self)
    }

    /// Nonzero upper-triangle edges in lexicographic `(i, j)` order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let w = self.couplings[[i, j]];
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// True when every consecutive pair `(i, i+1 mod n)` is coupled, so the
    /// vertex order traces a closed loop and a winding number is meaningful.
    pub fn is_cycle_ordered(&self) -> bool {
        if self.n < 3 {
            return false;
        }
        (0..self.n).all(|i| self.couplings[[i, (i + 1) % self.n]] != 0.0)
    }
}

/// How the weights of a dense graph are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDistribution {
    /// Independent uniform draws from `[lo, hi)`.
    UniformInterval(f64, f64),
    /// Every pair carries the same weight `J`.
    ConstantFM(f64),
    /// Independent normal draws with the given mean and standard deviation.
    NormalMeanStd(f64, f64),
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightDistribution::UniformInterval(lo, hi) => {
                if !(lo < hi) {
                    return Err(Error::InvalidArgument(format!(
                        "uniform interval requires lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            WeightDistribution::ConstantFM(_) => {}
            WeightDistribution::NormalMeanStd(_, sd) => {
                if sd < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "normal weight std must be non-negative, got {sd}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Constant positive weights are ferromagnetic; anything else is not.
    pub fn is_fm(&self) -> bool {
        matches!(self, WeightDistribution::ConstantFM(j) if *j > 0.0)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            WeightDistribution::UniformInterval(lo, hi) => rng.random_range(lo..hi),
            WeightDistribution::ConstantFM(j) => j,
            WeightDistribution::NormalMeanStd(mean, sd) => {
                let normal = Normal::new(mean, sd).expect("validated std");
                normal.sample(rng)
            }
        }
    }
}

/// A ring of `n_vertices` oscillators, each coupled to its `neighbor_count`
/// nearest neighbors on both sides with uniform weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec {
    pub n_vertices: usize,
    pub neighbor_count: usize,
    pub coupling: f64,
}

impl RingSpec {
    /// Connectivity fraction `mu = 2k / (N - 1)`.
    pub fn mu(&self) -> f64 {
        2.0 * self.neighbor_count as f64 / (self.n_vertices as f64 - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vertices < 3 {
            return Err(Error::InvalidArgument(format!(
                "ring needs at least 3 vertices, got {}",
                self.n_vertices
            )));
        }
        let k_max = (self.n_vertices - 1) / 2;
        if self.neighbor_count < 1 || self.neighbor_count > k_max {
            return Err(Error::InvalidArgument(format!(
                "neighbor_count must lie in 1..={k_max} for {} vertices, got {}",
                self.n_vertices, self.neighbor_count
            )));
        }
        Ok(())
    }
}

/// Build a complete graph on `n` vertices with weights drawn from `dist`.
///
/// Weights are sampled in lexicographic pair order `(0,1), (0,2), ...` so the
/// result is a pure function of `(n, dist, seed)`. Frequencies start at zero.
pub fn build_complete(n: usize, dist: WeightDistribution, seed: u64) -> Result<NetworkSpec> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "complete graph needs at least 2 vertices, got {n}"
        )));
    }
    dist.validate()?;
    let mut rng = seed::rng(seed);
    let mut couplings = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let w = dist.sample(&mut rng);
            couplings[[i, j]] = w;
            couplings[[j, i]] = w;
        }
    }
    NetworkSpec::new(couplings, Array1::zeros(n))
}

/// Build a circulant ring network from `spec`. Frequencies are zero.
pub fn build_ring(spec: &RingSpec) -> Result<NetworkSpec> {
    spec.validate()?;
    let n = spec.n_vertices;
    let mut couplings = Array2::zeros((n, n));
    for i in 0..n {
        for d in 1..=spec.neighbor_count {
            let j = (i + d) % n;
            couplings[[i, j]] = spec.coupling;
            couplings[[j, i]] = spec.coupling;
        }
    }
    NetworkSpec::new(couplings, Array1::zeros(n))
}

/// The minor embedding of a complete graph into a triad graph.
///
/// Vertex `n` of the source becomes chain `n`, occupying triad indices
/// `n*(N-1) ..= n*(N-1)+N-2`. The inter-chain edge for source pair `(n, m)`
/// with `n < m` joins position `m-1` of chain `n` to position `n` of chain
/// `m`; every chain position hosts exactly one inter-chain endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TriadEmbedding {
    source_n: usize,
    j_c: f64,
    looped: bool,
    chain_of: Vec<usize>,
    couplings: Array2<f64>,
    inter_edge_of: Vec<((usize, usize), (usize, usize))>,
}

impl TriadEmbedding {
    pub fn source_n(&self) -> usize {
        self.source_n
    }

    pub fn j_c(&self) -> f64 {
        self.j_c
    }

    pub fn looped(&self) -> bool {
        self.looped
    }

    /// Total triad vertex count `N(N-1)`.
    pub fn n_triad_vertices(&self) -> usize {
        self.source_n * (self.source_n - 1)
    }

    /// Chain index of each triad vertex.
    pub fn chain_of(&self) -> &[usize] {
        &self.chain_of
    }

    pub fn couplings(&self) -> &Array2<f64> {
        &self.couplings
    }

    /// Source pair -> triad vertex pair carrying that weight, sorted by pair.
    pub fn inter_edge_of(&self) -> &[((usize, usize), (usize, usize))] {
        &self.inter_edge_of
    }

    /// Intra-chain edges implied by the layout and the looped flag.
    ///
    /// For `N = 3` the loop edge coincides with the single chain edge and is
    /// coalesced, so the edge list does not grow.
    pub fn intra_edges(&self) -> Vec<(usize, usize)> {
        let n = self.source_n;
        let len = n - 1;
        let mut out = Vec::new();
        for c in 0..n {
            let base = c * len;
            for p in 0..len.saturating_sub(1) {
                out.push((base + p, base + p + 1));
            }
            if self.looped && len > 2 {
                out.push((base, base + len - 1));
            }
        }
        out
    }

    /// View the triad as a plain network with the given frequencies.
    pub fn to_network(&self, frequencies: Array1<f64>) -> Result<NetworkSpec> {
        NetworkSpec::new(self.couplings.clone(), frequencies)
    }

    /// Reconstruct the source couplings from the inter-chain edges.
    ///
    /// Frequencies are zeroed; they are not recoverable from the triad.
    pub fn recover_source(&self) -> NetworkSpec {
        let n = self.source_n;
        let mut couplings = Array2::zeros((n, n));
        for &((a, b), (u, v)) in &self.inter_edge_of {
            let w = self.couplings[[u, v]];
            couplings[[a, b]] = w;
            couplings[[b, a]] = w;
        }
        NetworkSpec::new(couplings, Array1::zeros(n)).expect("symmetric by construction")
    }

    /// Rebuild an embedding from its serialized pieces plus the triad
    /// coupling matrix (as read back from a graph file).
    pub fn from_parts(
        source_n: usize,
        j_c: f64,
        looped: bool,
        chain_of: Vec<usize>,
        couplings: Array2<f64>,
        inter_edge_of: Vec<((usize, usize), (usize, usize))>,
    ) -> Result<Self> {
        if source_n < 3 {
            return Err(Error::DegenerateEmbedding(format!(
                "triad embedding needs a source of at least 3 vertices, got {source_n}"
            )));
        }
        let m = source_n * (source_n - 1);
        if couplings.nrows() != m || couplings.ncols() != m {
            return Err(Error::InvalidArgument(format!(
                "triad coupling matrix must be {m}x{m}, got {}x{}",
                couplings.nrows(),
                couplings.ncols()
            )));
        }
        if chain_of.len() != m {
            return Err(Error::InvalidArgument(format!(
                "chain map must cover {m} vertices, got {}",
                chain_of.len()
            )));
        }
        let mut sizes = vec![0usize; source_n];
        for &c in &chain_of {
            if c >= source_n {
                return Err(Error::InvalidArgument(format!(
                    "chain index {c} out of range for {source_n} chains"
                )));
            }
            sizes[c] += 1;
        }
        if sizes.iter().any(|&s| s != source_n - 1) {
            return Err(Error::InvalidArgument(
                "each chain must contain exactly N-1 vertices".into(),
            ));
        }
        if inter_edge_of.len() != source_n * (source_n - 1) / 2 {
            return Err(Error::InvalidArgument(format!(
                "expected {} inter-chain edges, got {}",
                source_n * (source_n - 1) / 2,
                inter_edge_of.len()
            )));
        }
        Ok(Self {
            source_n,
            j_c,
            looped,
            chain_of,
            couplings,
            inter_edge_of,
        })
    }
}

/// Embed a complete graph into its triad graph with intra-chain weight `j_c`.
pub fn embed_triad(source: &NetworkSpec, j_c: f64, looped: bool) -> Result<TriadEmbedding> {
    let n = source.n_vertices();
    if n < 3 {
        return Err(Error::DegenerateEmbedding(format!(
            "chains of length {} have no intra-chain edges; need N >= 3, got N = {n}",
            n.saturating_sub(1)
        )));
    }
    if !(j_c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "intra-chain coupling must be positive, got {j_c}"
        )));
    }
    let len = n - 1;
    let m = n * len;
    let mut couplings = Array2::zeros((m, m));

    for c in 0..n {
        let base = c * len;
        for p in 0..len - 1 {
            couplings[[base + p, base + p + 1]] = j_c;
            couplings[[base + p + 1, base + p]] = j_c;
        }
        if looped {
            // For N = 3 the loop edge duplicates the only chain edge;
            // coalesce into a single edge of weight 2*j_c.
            let (a, b) = (base, base + len - 1);
            couplings[[a, b]] += j_c;
            couplings[[b, a]] = couplings[[a, b]];
        }
    }

    let mut inter_edge_of = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            let u = a * len + (b - 1);
            let v = b * len + a;
            let w = source.coupling(a, b);
            couplings[[u, v]] = w;
            couplings[[v, u]] = w;
            inter_edge_of.push(((a, b), (u, v)));
        }
    }

    let chain_of = (0..m).map(|v| v / len).collect();
    Ok(TriadEmbedding {
        source_n: n,
        j_c,
        looped,
        chain_of,
        couplings,
        inter_edge_of,
    })
}

/// Draw `count` independent `Normal(0, sigma)` frequencies.
///
/// Unit normals are scaled by `sigma`, so runs that differ only in `sigma`
/// see the same underlying draws.
pub fn triad_frequencies(count: usize, sigma: f64, seed: u64) -> Result<Array1<f64>> {
    if sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "frequency spread must be non-negative, got {sigma}"
        )));
    }
    let mut rng = seed::rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(Array1::from_iter(
        (0..count).map(|_| sigma * normal.sample(&mut rng)),
    ))
}

/// Circular mean phase of every chain, in chain-index order.
///
/// Each chain `n` is collapsed to `arg(sum_{v in chain n} e^{i theta_v})`,
/// which matches the arithmetic chain mean whenever the chain is tightly
/// clustered but stays well defined across the +-pi branch cut.
pub fn unembed_phases(embedding: &TriadEmbedding, phases: &[f64]) -> Result<Vec<f64>> {
    let m = embedding.n_triad_vertices();
    if phases.len() != m {
        return Err(Error::InvalidArgument(format!(
            "expected {m} triad phases, got {}",
            phases.len()
        )));
    }
    let n = embedding.source_n();
    let mut re = vec![0.0f64; n];
    let mut im = vec![0.0f64; n];
    for (v, &theta) in phases.iter().enumerate() {
        let c = embedding.chain_of[v];
        re[c] += theta.cos();
        im[c] += theta.sin();
    }
    Ok((0..n).map(|c| im[c].atan2(re[c])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn complete_fm_is_all_ones_off_diagonal() {
        let net = build_complete(3, WeightDistribution::ConstantFM(1.0), 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 1.0 };
                assert_eq!(net.coupling(i, j), expect);
            }
        }
    }

    #[test]
    fn complete_two_vertices() {
        let net = build_complete(2, WeightDistribution::ConstantFM(2.0), 0).unwrap();
        assert_eq!(net.coupling(0, 1), 2.0);
        assert_eq!(net.coupling(1, 0), 2.0);
        assert_eq!(net.coupling(0, 0), 0.0);
    }

    #[test]
    fn complete_uniform_weights_in_interval_and_symmetric() {
        let net = build_complete(10, WeightDistribution::UniformInterval(-1.0, 1.0), 7).unwrap();
        let edges = net.edges();
        assert_eq!(edges.len(), 45);
        for (i, j, w) in edges {
            assert!((-1.0..1.0).contains(&w), "weight {w} outside [-1,1)");
            assert_eq!(net.coupling(i, j), net.coupling(j, i));
        }
    }

    #[test]
    fn complete_is_deterministic_per_seed() {
        let a = build_complete(8, WeightDistribution::UniformInterval(-1.0, 1.0), 11).unwrap();
        let b = build_complete(8, WeightDistribution::UniformInterval(-1.0, 1.0), 11).unwrap();
        let c = build_complete(8, WeightDistribution::UniformInterval(-1.0, 1.0), 12).unwrap();
        assert_eq!(a.couplings(), b.couplings());
        assert_ne!(a.couplings(), c.couplings());
    }

    #[test]
    fn complete_rejects_tiny_n() {
        assert!(matches!(
            build_complete(1, WeightDistribution::ConstantFM(1.0), 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn uniform_interval_requires_lo_below_hi() {
        assert!(build_complete(4, WeightDistribution::UniformInterval(1.0, -1.0), 0).is_err());
    }

    #[test]
    fn ring_smallest_case_has_degree_two() {
        let net = build_ring(&RingSpec {
            n_vertices: 4,
            neighbor_count: 1,
            coupling: 1.0,
        })
        .unwrap();
        for i in 0..4 {
            let deg = (0..4).filter(|&j| net.coupling(i, j) != 0.0).count();
            assert_eq!(deg, 2);
        }
        assert_eq!(net.edges().len(), 4);
    }

    #[test]
    fn ring_n20_k1_has_twenty_edges() {
        let net = build_ring(&RingSpec {
            n_vertices: 20,
            neighbor_count: 1,
            coupling: 1.0,
        })
        .unwrap();
        assert_eq!(net.edges().len(), 20);
        assert!(net.is_cycle_ordered());
    }

    #[test]
    fn ring_n6_k2_degree_four_twelve_edges() {
        let net = build_ring(&RingSpec {
            n_vertices: 6,
            neighbor_count: 2,
            coupling: 1.0,
        })
        .unwrap();
        // Independent count: enumerate all coupled unordered pairs directly.
        let mut pairs = 0;
        for i in 0..6 {
            let deg = (0..6).filter(|&j| net.coupling(i, j) != 0.0).count();
            assert_eq!(deg, 4);
            pairs += deg;
        }
        assert_eq!(pairs / 2, 12);
    }

    #[test]
    fn ring_rejects_out_of_range_neighbor_count() {
        let spec = RingSpec {
            n_vertices: 6,
            neighbor_count: 3,
            coupling: 1.0,
        };
        assert!(build_ring(&spec).is_err());
        let spec = RingSpec {
            n_vertices: 6,
            neighbor_count: 0,
            coupling: 1.0,
        };
        assert!(build_ring(&spec).is_err());
    }

    fn k_uniform(n: usize, seed: u64) -> NetworkSpec {
        build_complete(n, WeightDistribution::UniformInterval(-1.0, 1.0), seed).unwrap()
    }

    #[test]
    fn triad_k5_unlooped_counts() {
        let emb = embed_triad(&k_uniform(5, 3), 1.0, false).unwrap();
        assert_eq!(emb.n_triad_vertices(), 20);
        assert_eq!(emb.inter_edge_of().len(), 10);
        assert_eq!(emb.intra_edges().len(), 15);
    }

    #[test]
    fn triad_k5_looped_counts() {
        let emb = embed_triad(&k_uniform(5, 3), 1.0, true).unwrap();
        assert_eq!(emb.n_triad_vertices(), 20);
        assert_eq!(emb.inter_edge_of().len(), 10);
        assert_eq!(emb.intra_edges().len(), 20);
    }

    #[test]
    fn triad_k3_unlooped_counts() {
        let emb = embed_triad(&k_uniform(3, 5), 2.0, false).unwrap();
        assert_eq!(emb.n_triad_vertices(), 6);
        assert_eq!(emb.inter_edge_of().len(), 3);
        assert_eq!(emb.intra_edges().len(), 3);
        for (u, v) in emb.intra_edges() {
            assert_eq!(emb.couplings()[[u, v]], 2.0);
        }
    }

    #[test]
    fn triad_k3_looped_coalesces_to_double_weight() {
        let emb = embed_triad(&k_uniform(3, 5), 2.0, true).unwrap();
        assert_eq!(emb.intra_edges().len(), 3);
        for (u, v) in emb.intra_edges() {
            assert_eq!(emb.couplings()[[u, v]], 4.0);
        }
    }

    #[test]
    fn triad_degrees_bounded_by_three() {
        for looped in [false, true] {
            let emb = embed_triad(&k_uniform(6, 9), 1.5, looped).unwrap();
            let m = emb.n_triad_vertices();
            for v in 0..m {
                let deg = (0..m).filter(|&u| emb.couplings()[[v, u]] != 0.0).count();
                if looped {
                    assert_eq!(deg, 3, "looped triad must be 3-regular");
                } else {
                    assert!(deg <= 3, "vertex {v} has degree {deg}");
                }
            }
        }
    }

    #[test]
    fn triad_matrix_symmetric_zero_diagonal_and_weight_sums_match() {
        let src = k_uniform(7, 21);
        let emb = embed_triad(&src, 3.0, false).unwrap();
        let m = emb.n_triad_vertices();
        let mut inter_sum = 0.0;
        for &((a, b), (u, v)) in emb.inter_edge_of() {
            assert_eq!(emb.couplings()[[u, v]], src.coupling(a, b));
            inter_sum += emb.couplings()[[u, v]];
        }
        let src_sum: f64 = src.edges().iter().map(|&(_, _, w)| w).sum();
        assert!((inter_sum - src_sum).abs() < 1e-12);
        for u in 0..m {
            assert_eq!(emb.couplings()[[u, u]], 0.0);
            for v in 0..m {
                assert_eq!(emb.couplings()[[u, v]], emb.couplings()[[v, u]]);
            }
        }
    }

    #[test]
    fn triad_inter_edges_partition_positions() {
        // Dropping intra edges must leave N(N-1)/2 disjoint pairs: every
        // triad vertex is an endpoint of exactly one inter-chain edge.
        let emb = embed_triad(&k_uniform(6, 2), 1.0, false).unwrap();
        let m = emb.n_triad_vertices();
        let mut hits = vec![0usize; m];
        for &((a, b), (u, v)) in emb.inter_edge_of() {
            assert_ne!(emb.chain_of()[u], emb.chain_of()[v]);
            assert_eq!(emb.chain_of()[u], a);
            assert_eq!(emb.chain_of()[v], b);
            hits[u] += 1;
            hits[v] += 1;
        }
        assert!(hits.iter().all(|&h| h == 1));
    }

    #[test]
    fn triad_chain_partition_is_exact() {
        let emb = embed_triad(&k_uniform(5, 4), 1.0, true).unwrap();
        let mut sizes = vec![0usize; 5];
        for &c in emb.chain_of() {
            sizes[c] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 4));
    }

    #[test]
    fn triad_rejects_degenerate_source_and_nonpositive_jc() {
        let k2 = build_complete(2, WeightDistribution::ConstantFM(1.0), 0).unwrap();
        assert!(matches!(
            embed_triad(&k2, 1.0, false),
            Err(Error::DegenerateEmbedding(_))
        ));
        assert!(embed_triad(&k_uniform(4, 0), 0.0, false).is_err());
    }

    #[test]
    fn recover_source_round_trips_couplings() {
        let src = k_uniform(6, 77);
        let emb = embed_triad(&src, 2.5, true).unwrap();
        let back = emb.recover_source();
        assert_eq!(back.couplings(), src.couplings());
    }

    #[test]
    fn frequencies_zero_sigma_and_determinism() {
        let z = triad_frequencies(20, 0.0, 99).unwrap();
        assert!(z.iter().all(|&w| w == 0.0));
        let a = triad_frequencies(90, 0.1, 1).unwrap();
        let b = triad_frequencies(90, 0.1, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn frequencies_match_requested_moments() {
        let w = triad_frequencies(20000, 1.0, 3).unwrap();
        let mean = w.sum() / w.len() as f64;
        let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (w.len() - 1) as f64;
        assert!(mean.abs() < 0.05, "sample mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.05, "sample std {}", var.sqrt());
    }

    #[test]
    fn frequencies_scale_linearly_with_sigma() {
        let a = triad_frequencies(50, 0.5, 5).unwrap();
        let b = triad_frequencies(50, 1.0, 5).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn unembed_constant_chains() {
        let emb = embed_triad(&k_uniform(4, 8), 1.0, false).unwrap();
        let phases = vec![0.7; emb.n_triad_vertices()];
        let bar = unembed_phases(&emb, &phases).unwrap();
        for t in bar {
            assert!((t - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn unembed_two_member_chain_is_bisector() {
        let emb = embed_triad(&k_uniform(3, 8), 1.0, false).unwrap();
        // Chain 0 holds vertices 0 and 1.
        let mut phases = vec![0.0; 6];
        phases[0] = 0.0;
        phases[1] = PI / 2.0;
        let bar = unembed_phases(&emb, &phases).unwrap();
        assert!((bar[0] - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn unembed_handles_branch_cut() {
        let emb = embed_triad(&k_uniform(3, 8), 1.0, false).unwrap();
        let mut phases = vec![0.0; 6];
        phases[0] = -PI + 0.1;
        phases[1] = PI - 0.1;
        let bar = unembed_phases(&emb, &phases).unwrap();
        assert!(
            (bar[0].abs() - PI).abs() < 1e-12,
            "circular mean should sit at pi, got {}",
            bar[0]
        );
    }

    #[test]
    fn unembed_is_gauge_equivariant() {
        let emb = embed_triad(&k_uniform(5, 13), 1.0, false).unwrap();
        let m = emb.n_triad_vertices();
        let mut rng = seed::rng(40);
        use rand::Rng;
        for _ in 0..20 {
            let phases: Vec<f64> = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
            let shift: f64 = rng.random_range(-PI..PI);
            let shifted: Vec<f64> = phases.iter().map(|t| t + shift).collect();
            let a = unembed_phases(&emb, &phases).unwrap();
            let b = unembed_phases(&emb, &shifted).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                let d = (y - x - shift).rem_euclid(2.0 * PI);
                let d = d.min(2.0 * PI - d);
                assert!(d < 1e-9, "gauge shift mismatch: {d}");
            }
        }
    }

    #[test]
    fn unembed_rejects_length_mismatch() {
        let emb = embed_triad(&k_uniform(4, 8), 1.0, false).unwrap();
        assert!(unembed_phases(&emb, &[0.0; 5]).is_err());
    }
}
