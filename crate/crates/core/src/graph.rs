//! Communication graphs: adjacency, degree and Laplacian matrices, the
//! Laplacian spectrum, and connectivity decisions.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use nalgebra::linalg::SymmetricTridiagonal;
use nalgebra::DMatrix;

use crate::channel::SnrMatrix;
use crate::error::{invalid, Error, Result};

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 60;

/// Adjacency `A`, degrees `diag(D)` and Laplacian `L = D - A` of an
/// undirected simple graph. The Laplacian is kept in integers so row sums are
/// exactly zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMatrices {
    adjacency: DMatrix<u8>,
    degrees: Vec<u32>,
    laplacian: DMatrix<i32>,
}

impl GraphMatrices {
    /// Validates that `adjacency` is square, symmetric, 0/1 and hollow.
    pub fn from_adjacency(adjacency: DMatrix<u8>) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 {
            return Err(Error::TooFewVehicles(0));
        }
        if adjacency.ncols() != n {
            return Err(invalid(
                "adjacency matrix",
                format!("must be square, got {}x{}", n, adjacency.ncols()),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[(i, j)];
                if a > 1 || (i == j && a != 0) || a != adjacency[(j, i)] {
                    return Err(Error::InvalidAdjacency { row: i, col: j });
                }
            }
        }
        Ok(Self::build(adjacency))
    }

    /// Graph on `n` nodes with the given undirected edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = DMatrix::<u8>::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidAdjacency { row: i, col: j });
            }
            a[(i, j)] = 1;
            a[(j, i)] = 1;
        }
        Self::from_adjacency(a)
    }

    fn build(adjacency: DMatrix<u8>) -> Self {
        let n = adjacency.nrows();
        let degrees: Vec<u32> = (0..n)
            .map(|i| adjacency.row(i).iter().map(|&a| u32::from(a)).sum())
            .collect();
        let laplacian = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                degrees[i] as i32
            } else {
                -i32::from(adjacency[(i, j)])
            }
        });
        Self {
            adjacency,
            degrees,
            laplacian,
        }
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn adjacency(&self) -> &DMatrix<u8> {
        &self.adjacency
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn laplacian(&self) -> &DMatrix<i32> {
        &self.laplacian
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[(i, j)] == 1
    }

    pub fn edge_count(&self) -> usize {
        self.degrees.iter().map(|&d| d as usize).sum::<usize>() / 2
    }

    /// Writes `A` as whitespace-separated rows.
    pub fn write_adjacency<W: Write>(&self, out: W) -> io::Result<()> {
        write_matrix(out, &self.adjacency)
    }

    /// Writes `L` as whitespace-separated rows.
    pub fn write_laplacian<W: Write>(&self, out: W) -> io::Result<()> {
        write_matrix(out, &self.laplacian)
    }
}

fn write_matrix<W: Write, T: nalgebra::Scalar + fmt::Display>(mut out: W, m: &DMatrix<T>) -> io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Links every pair whose SNR reaches `psi`. Symmetry of the SNR matrix is
/// guaranteed by [`SnrMatrix`], so this cannot fail.
pub fn adjacency_from_snr(snr: &SnrMatrix, psi: f64) -> GraphMatrices {
    let n = snr.n();
    let a = DMatrix::from_fn(n, n, |i, j| u8::from(i != j && snr.get(i, j) >= psi));
    GraphMatrices::build(a)
}

/// Relative tolerance below which a Laplacian eigenvalue counts as zero; the
/// absolute threshold is `relative * max(1, λ_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroTolerance(f64);

impl ZeroTolerance {
    pub fn new(relative: f64) -> Result<Self> {
        if !(relative > 0.0 && relative < 1.0) {
            return Err(invalid("zero tolerance", format!("must lie in (0, 1), got {relative}")));
        }
        Ok(Self(relative))
    }

    pub fn relative(self) -> f64 {
        self.0
    }

    pub fn threshold(self, lambda_max: f64) -> f64 {
        self.0 * lambda_max.max(1.0)
    }
}

impl Default for ZeroTolerance {
    fn default() -> Self {
        Self(1e-8)
    }
}

/// Ascending Laplacian eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.0
    }

    pub fn lambda_max(&self) -> f64 {
        *self.0.last().expect("non-empty spectrum")
    }

    /// Second-smallest eigenvalue; zero for a single node.
    pub fn algebraic_connectivity(&self) -> f64 {
        self.0.get(1).copied().unwrap_or(0.0)
    }

    pub fn zero_count(&self, tol: ZeroTolerance) -> usize {
        let t = tol.threshold(self.lambda_max());
        self.0.iter().filter(|l| l.abs() < t).count()
    }

    pub fn is_connected(&self, tol: ZeroTolerance) -> bool {
        self.0.len() == 1 || self.algebraic_connectivity() > tol.threshold(self.lambda_max())
    }
}

/// Eigenvalues of `L`: Householder reduction to tridiagonal form followed by
/// implicit QL with Wilkinson-style shifts.
pub fn laplacian_spectrum(g: &GraphMatrices) -> Result<Spectrum> {
    let l = g.laplacian.map(f64::from);
    let n = l.nrows();
    if n == 1 {
        return Ok(Spectrum(vec![0.0]));
    }
    let (diag, off) = SymmetricTridiagonal::new(l).unpack_tridiagonal();
    let mut d: Vec<f64> = diag.iter().copied().collect();
    let e: Vec<f64> = off.iter().copied().collect();
    tridiagonal_ql(&mut d, &e)?;
    d.sort_by(f64::total_cmp);
    Ok(Spectrum(d))
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `off`, overwriting `d`.
fn tridiagonal_ql(d: &mut [f64], off: &[f64]) -> Result<()> {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence(MAX_QL_SWEEPS));
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Second-smallest Laplacian eigenvalue, positive iff the graph is connected.
pub fn algebraic_connectivity(g: &GraphMatrices) -> Result<f64> {
    Ok(laplacian_spectrum(g)?.algebraic_connectivity())
}

/// Number of connected components, read off as the multiplicity of the zero
/// Laplacian eigenvalue.
pub fn count_partitions_eigen(g: &GraphMatrices, tol: ZeroTolerance) -> Result<usize> {
    Ok(laplacian_spectrum(g)?.zero_count(tol))
}

/// Number of connected components by disjoint-set union; exact.
pub fn count_partitions_unionfind(g: &GraphMatrices) -> usize {
    let n = g.n();
    let mut dsu = DisjointSets::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if g.has_edge(i, j) {
                dsu.union(i, j);
            }
        }
    }
    dsu.components()
}

/// Spectral connectivity test with the default tolerance.
pub fn is_connected(g: &GraphMatrices) -> Result<bool> {
    Ok(laplacian_spectrum(g)?.is_connected(ZeroTolerance::default()))
}

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
    }

    fn components(&self) -> usize {
        self.components
    }
}

/// How a trial decides whether its graph is connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ConnectivityDecider {
    /// `λ₂ > tolerance`.
    #[default]
    Eigen,
    /// A single connected component by union-find.
    Components,
    /// Eigen decision, with union-find run alongside to flag disagreements.
    Both,
}

impl ConnectivityDecider {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConnectivityDecider::Eigen => "eigen",
            ConnectivityDecider::Components => "components",
            ConnectivityDecider::Both => "both",
        }
    }
}

impl fmt::Display for ConnectivityDecider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConnectivityDecider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eigen" | "spectral" => Ok(ConnectivityDecider::Eigen),
            "components" | "unionfind" | "union-find" => Ok(ConnectivityDecider::Components),
            "both" => Ok(ConnectivityDecider::Both),
            other => Err(invalid(
                "connectivity decider",
                format!("expected eigen, components or both, got {other:?}"),
            )),
        }
    }
}

/// Outcome of a connectivity decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub connected: bool,
    /// Set only under [`ConnectivityDecider::Both`] when the two methods
    /// disagree.
    pub mismatch: bool,
}

pub fn decide(g: &GraphMatrices, decider: ConnectivityDecider, tol: ZeroTolerance) -> Result<Verdict> {
    match decider {
        ConnectivityDecider::Eigen => Ok(Verdict {
            connected: laplacian_spectrum(g)?.is_connected(tol),
            mismatch: false,
        }),
        ConnectivityDecider::Components => Ok(Verdict {
            connected: count_partitions_unionfind(g) == 1,
            mismatch: false,
        }),
        ConnectivityDecider::Both => {
            let spectrum = laplacian_spectrum(g)?;
            let connected = spectrum.is_connected(tol);
            let mismatch = spectrum.zero_count(tol) != count_partitions_unionfind(g);
            Ok(Verdict { connected, mismatch })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn complete(n: usize) -> GraphMatrices {
        let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        GraphMatrices::from_edges(n, &edges).unwrap()
    }

    fn path(n: usize) -> GraphMatrices {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        GraphMatrices::from_edges(n, &edges).unwrap()
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> GraphMatrices {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        GraphMatrices::from_edges(n, &edges).unwrap()
    }

    fn snr(rows: &[&[f64]]) -> SnrMatrix {
        let n = rows.len();
        SnrMatrix::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j])).unwrap()
    }

    #[test]
    fn threshold_extremes() {
        let s = snr(&[&[0.0, 5.0, 7.0], &[5.0, 0.0, 9.0], &[7.0, 9.0, 0.0]]);
        let all = adjacency_from_snr(&s, 5.0);
        assert_eq!(all.degrees(), &[2, 2, 2]);
        assert_eq!(all.edge_count(), 3);
        let none = adjacency_from_snr(&s, 10.0);
        assert_eq!(none.degrees(), &[0, 0, 0]);
        assert!(none.laplacian().iter().all(|&v| v == 0));
    }

    #[test]
    fn single_pair_above_threshold() {
        let s = snr(&[&[0.0, 20.0, 1.0], &[20.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let g = adjacency_from_snr(&s, 10.0);
        assert_eq!(g.degrees(), &[1, 1, 0]);
        for i in 0..3 {
            assert_eq!(g.laplacian().row(i).iter().sum::<i32>(), 0);
        }
        assert_eq!(g.laplacian()[(0, 1)], -1);
    }

    #[test]
    fn adjacency_validation() {
        let mut a = DMatrix::<u8>::zeros(3, 3);
        a[(0, 1)] = 1;
        assert!(matches!(
            GraphMatrices::from_adjacency(a.clone()),
            Err(Error::InvalidAdjacency { .. })
        ));
        a[(1, 0)] = 1;
        assert!(GraphMatrices::from_adjacency(a.clone()).is_ok());
        a[(2, 2)] = 1;
        assert!(GraphMatrices::from_adjacency(a).is_err());
        let mut b = DMatrix::<u8>::zeros(2, 2);
        b[(0, 1)] = 2;
        b[(1, 0)] = 2;
        assert!(GraphMatrices::from_adjacency(b).is_err());
        assert!(GraphMatrices::from_adjacency(DMatrix::<u8>::zeros(2, 3)).is_err());
        assert!(GraphMatrices::from_edges(3, &[(0, 0)]).is_err());
        assert!(GraphMatrices::from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn known_spectra() {
        for n in [2, 5, 20] {
            let s = laplacian_spectrum(&complete(n)).unwrap();
            assert!(s.eigenvalues()[0].abs() < 1e-10);
            for &l in &s.eigenvalues()[1..] {
                assert!((l - n as f64).abs() < 1e-10);
            }
        }
        let s = laplacian_spectrum(&path(3)).unwrap();
        let expected = [0.0, 1.0, 3.0];
        for (l, e) in s.eigenvalues().iter().zip(expected) {
            assert!((l - e).abs() < 1e-12, "{:?}", s.eigenvalues());
        }
        // Path P_n: 2 - 2 cos(kπ/n).
        let n = 30;
        let s = laplacian_spectrum(&path(n)).unwrap();
        for (k, l) in s.eigenvalues().iter().enumerate() {
            let e = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos();
            assert!((l - e).abs() < 1e-10);
        }
        let two_edges = GraphMatrices::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(algebraic_connectivity(&two_edges).unwrap().abs() < 1e-12);
    }

    #[test]
    fn ql_matches_nalgebra_dense_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3, 7, 40, 120] {
            let g = random_graph(&mut rng, n, 0.2);
            let ours = laplacian_spectrum(&g).unwrap();
            let mut reference: Vec<f64> = g
                .laplacian()
                .map(f64::from)
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
            reference.sort_by(f64::total_cmp);
            for (a, b) in ours.eigenvalues().iter().zip(&reference) {
                assert!((a - b).abs() < 1e-9, "n = {n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn partition_counts() {
        let tol = ZeroTolerance::default();
        let triangle = complete(3);
        assert_eq!(count_partitions_eigen(&triangle, tol).unwrap(), 1);
        assert_eq!(count_partitions_unionfind(&triangle), 1);
        let empty = GraphMatrices::from_edges(6, &[]).unwrap();
        assert_eq!(count_partitions_eigen(&empty, tol).unwrap(), 6);
        assert_eq!(count_partitions_unionfind(&empty), 6);
        let split = GraphMatrices::from_edges(5, &[(0, 1), (2, 3), (3, 4)]).unwrap();
        assert_eq!(count_partitions_eigen(&split, tol).unwrap(), 2);
        assert_eq!(count_partitions_unionfind(&split), 2);
        let single = GraphMatrices::from_edges(1, &[]).unwrap();
        assert_eq!(count_partitions_unionfind(&single), 1);
        assert_eq!(count_partitions_eigen(&single, tol).unwrap(), 1);
    }

    #[test]
    fn chain_connectivity() {
        assert!(is_connected(&path(50)).unwrap());
        assert!(is_connected(&complete(10)).unwrap());
        let mut edges: Vec<_> = (0..49).map(|i| (i, i + 1)).collect();
        edges.remove(20);
        let broken = GraphMatrices::from_edges(50, &edges).unwrap();
        assert!(!is_connected(&broken).unwrap());
        assert!(!is_connected(&GraphMatrices::from_edges(2, &[]).unwrap()).unwrap());
    }

    #[test]
    fn long_path_is_connected_at_default_tolerance() {
        // λ₂ of P_300 is about 1.1e-4, far above 1e-8 · λ_max.
        let g = path(300);
        let s = laplacian_spectrum(&g).unwrap();
        assert!(s.algebraic_connectivity() > 1e-4);
        assert!(s.is_connected(ZeroTolerance::default()));
    }

    #[test]
    fn deciders_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let g = random_graph(&mut rng, 30, 0.08);
            let tol = ZeroTolerance::default();
            let e = decide(&g, ConnectivityDecider::Eigen, tol).unwrap();
            let c = decide(&g, ConnectivityDecider::Components, tol).unwrap();
            let b = decide(&g, ConnectivityDecider::Both, tol).unwrap();
            assert_eq!(e.connected, c.connected);
            assert_eq!(b.connected, e.connected);
            assert!(!b.mismatch);
        }
        assert_eq!(
            "both".parse::<ConnectivityDecider>().unwrap(),
            ConnectivityDecider::Both
        );
        assert_eq!(
            "components".parse::<ConnectivityDecider>().unwrap().to_string(),
            "components"
        );
        assert!("fast".parse::<ConnectivityDecider>().is_err());
    }

    #[test]
    fn tolerance_validation() {
        assert!(ZeroTolerance::new(0.0).is_err());
        assert!(ZeroTolerance::new(1.5).is_err());
        let t = ZeroTolerance::new(1e-6).unwrap();
        assert_eq!(t.threshold(0.5), 1e-6);
        assert!((t.threshold(100.0) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn matrix_dump() {
        let g = path(3);
        let mut a = Vec::new();
        g.write_adjacency(&mut a).unwrap();
        assert_eq!(String::from_utf8(a).unwrap(), "0 1 0\n1 0 1\n0 1 0\n");
        let mut l = Vec::new();
        g.write_laplacian(&mut l).unwrap();
        assert_eq!(String::from_utf8(l).unwrap(), "1 -1 0\n-1 2 -1\n0 -1 1\n");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = GraphMatrices> {
            (2usize..40, 0.0f64..0.3, any::<u64>()).prop_map(|(n, p, seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                random_graph(&mut rng, n, p)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn laplacian_invariants(g in arb_graph()) {
                let n = g.n();
                for i in 0..n {
                    prop_assert_eq!(g.laplacian().row(i).iter().sum::<i32>(), 0);
                }
                let s = laplacian_spectrum(&g).unwrap();
                prop_assert!(s.eigenvalues()[0] > -1e-9);
                prop_assert!(s.lambda_max() <= n as f64 + 1e-9);
                if count_partitions_unionfind(&g) == 1 {
                    prop_assert!(s.algebraic_connectivity() <= n as f64 + 1e-9);
                }
                prop_assert_eq!(
                    count_partitions_eigen(&g, ZeroTolerance::default()).unwrap(),
                    count_partitions_unionfind(&g)
                );
            }

            #[test]
            fn adding_an_edge_keeps_connectivity(g in arb_graph(), i in 0usize..40, j in 0usize..40) {
                let n = g.n();
                let (i, j) = (i % n, j % n);
                prop_assume!(i != j);
                let mut a = g.adjacency().clone();
                a[(i, j)] = 1;
                a[(j, i)] = 1;
                let h = GraphMatrices::from_adjacency(a).unwrap();
                if is_connected(&g).unwrap() {
                    prop_assert!(is_connected(&h).unwrap());
                }
                prop_assert!(count_partitions_unionfind(&h) <= count_partitions_unionfind(&g));
            }
        }
    }
}
