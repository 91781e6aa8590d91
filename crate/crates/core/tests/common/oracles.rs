//! Independent reference computations, written without the library's
//! algorithms.

use supermoduli::{Complex, GrassmannNumber};

// ---------------------------------------------------------------------------
// Stable labeled trees by exhaustive generation.

#[derive(Clone, Debug)]
pub struct RawTree {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    /// `labels[i]` is the vertex of label `i + 1`.
    pub labels: Vec<usize>,
}

fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf exists");
        edges.push((leaf.min(x), leaf.max(x)));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges.sort();
    edges
}

fn all_sequences(len: usize, base: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..base).map(move |x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn stable(t: &RawTree) -> bool {
    (0..t.n).all(|v| {
        let deg = t.edges.iter().filter(|&&(a, b)| a == v || b == v).count();
        let labels = t.labels.iter().filter(|&&w| w == v).count();
        deg + labels >= 3
    })
}

fn isomorphic(a: &RawTree, b: &RawTree, perms: &[Vec<usize>]) -> bool {
    if a.n != b.n || a.edges.len() != b.edges.len() {
        return false;
    }
    perms.iter().any(|p| {
        if a.labels.iter().zip(&b.labels).any(|(&x, &y)| p[x] != y) {
            return false;
        }
        let mut mapped: Vec<(usize, usize)> = a.edges.iter().map(|&(x, y)| (p[x].min(p[y]), p[x].max(p[y]))).collect();
        mapped.sort();
        mapped == b.edges
    })
}

/// All isomorphism classes of stable trees with `k` labels, one
/// representative each, found by generating every labeled tree on up to
/// `k − 2` vertices and comparing pairwise under all vertex permutations.
pub fn brute_force_stable_trees(k: usize) -> Vec<RawTree> {
    let mut reps: Vec<RawTree> = Vec::new();
    for n in 1..=k.saturating_sub(2) {
        let shapes: Vec<Vec<(usize, usize)>> = match n {
            1 => vec![Vec::new()],
            2 => vec![vec![(0, 1)]],
            _ => all_sequences(n - 2, n).iter().map(|s| prufer_decode(s, n)).collect(),
        };
        let perms = permutations(n);
        let mut classes: Vec<RawTree> = Vec::new();
        for edges in &shapes {
            for labels in all_sequences(k, n) {
                let t = RawTree { n, edges: edges.clone(), labels };
                if stable(&t) && !classes.iter().any(|r| isomorphic(r, &t, &perms)) {
                    classes.push(t);
                }
            }
        }
        reps.extend(classes);
    }
    reps
}

// ---------------------------------------------------------------------------
// Dense Grassmann arithmetic: a coefficient per subset, product sign from
// counting transpositions.

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub s: usize,
    pub c: Vec<Complex>,
}

impl Dense {
    pub fn zero(s: usize) -> Self {
        Dense { s, c: vec![Complex::new(0.0, 0.0); 1 << s] }
    }

    pub fn from_library(g: &GrassmannNumber) -> Self {
        let s = g.num_generators();
        Dense { s, c: (0..1u64 << s).map(|m| g.coeff(m)).collect() }
    }

    pub fn scalar(s: usize, x: Complex) -> Self {
        let mut d = Dense::zero(s);
        d.c[0] = x;
        d
    }

    pub fn add(&self, o: &Dense) -> Dense {
        Dense { s: self.s, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, x: Complex) -> Dense {
        Dense { s: self.s, c: self.c.iter().map(|a| a * x).collect() }
    }

    /// Sign of `η_A η_B` rearranged into ascending order: each pair `a ∈ A`,
    /// `b ∈ B` with `a > b` costs one transposition.
    fn sign(a: usize, b: usize, s: usize) -> f64 {
        let mut swaps = 0;
        for i in 0..s {
            if a >> i & 1 == 1 {
                for j in 0..i {
                    if b >> j & 1 == 1 {
                        swaps += 1;
                    }
                }
            }
        }
        if swaps % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        let mut out = Dense::zero(self.s);
        for a in 0..self.c.len() {
            if self.c[a] == Complex::new(0.0, 0.0) {
                continue;
            }
            for b in 0..o.c.len() {
                if a & b == 0 {
                    out.c[a | b] += self.c[a] * o.c[b] * Dense::sign(a, b, self.s);
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, g: &GrassmannNumber) -> f64 {
        let other = Dense::from_library(g);
        self.c.iter().zip(&other.c).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Classical geodesics on the unit sphere, coordinates (ϑ, φ).

fn sphere_rhs(y: [f64; 4]) -> [f64; 4] {
    let [th, _ph, dth, dph] = y;
    [dth, dph, th.sin() * th.cos() * dph * dph, -2.0 * th.cos() / th.sin() * dth * dph]
}

fn rk4<const N: usize>(y: [f64; N], h: f64, f: impl Fn([f64; N]) -> [f64; N]) -> [f64; N] {
    let add = |a: [f64; N], b: [f64; N], c: f64| {
        let mut o = a;
        for i in 0..N {
            o[i] += c * b[i];
        }
        o
    };
    let k1 = f(y);
    let k2 = f(add(y, k1, h / 2.0));
    let k3 = f(add(y, k2, h / 2.0));
    let k4 = f(add(y, k3, h));
    let mut o = y;
    for i in 0..N {
        o[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

/// `(ϑ, φ, ϑ̇, φ̇)` at `t = 0, h, …, n·h`.
pub fn sphere_classical(y0: [f64; 4], h: f64, n: usize) -> Vec<[f64; 4]> {
    let mut out = vec![y0];
    for _ in 0..n {
        let y = *out.last().unwrap();
        out.push(rk4(y, h, sphere_rhs));
    }
    out
}

/// Exact great circle through `(ϑ0, φ0)` with velocity `(ϑ̇0, φ̇0)`, as
/// `(ϑ, φ)` at time `t` (φ unwrapped near `φ_ref`).
pub fn great_circle(y0: [f64; 4], t: f64, phi_ref: f64) -> [f64; 2] {
    let [th, ph, dth, dph] = y0;
    let x = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
    let e_th = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
    let e_ph = [-th.sin() * ph.sin(), th.sin() * ph.cos(), 0.0];
    let v: Vec<f64> = (0..3).map(|i| dth * e_th[i] + dph * e_ph[i]).collect();
    let speed = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let p: Vec<f64> = (0..3).map(|i| x[i] * (speed * t).cos() + v[i] / speed * (speed * t).sin()).collect();
    let theta = p[2].clamp(-1.0, 1.0).acos();
    let mut phi = p[1].atan2(p[0]);
    while phi - phi_ref > std::f64::consts::PI {
        phi -= std::f64::consts::TAU;
    }
    while phi - phi_ref < -std::f64::consts::PI {
        phi += std::f64::consts::TAU;
    }
    [theta, phi]
}

/// Body geodesic together with the first-order variation `ξ` solving the
/// linearized equation
/// `ξ̈^a = −2 Γ^a_{bc} ẋ^b ξ̇^c − ∂_d Γ^a_{bc} ξ^d ẋ^b ẋ^c`
/// with `ξ(0) = 0`, `ξ̇(0) = w`. Returns `(ϑ, φ, ξ^ϑ, ξ^φ)` per step.
pub fn sphere_jacobi(y0: [f64; 4], w: [f64; 2], h: f64, n: usize) -> Vec<[f64; 4]> {
    let rhs = |y: [f64; 8]| {
        let [th, _ph, dth, dph, xt, _xp, dxt, dxp] = y;
        let (s, c) = (th.sin(), th.cos());
        // Γ^ϑ_{φφ} = −s c, Γ^φ_{ϑφ} = c/s; derivatives in ϑ.
        let g_t_pp = -s * c;
        let g_p_tp = c / s;
        let dg_t_pp = -(c * c - s * s);
        let dg_p_tp = -1.0 / (s * s);
        let acc_t = -g_t_pp * dph * dph;
        let acc_p = -2.0 * g_p_tp * dth * dph;
        let jac_t = -2.0 * g_t_pp * dph * dxp - dg_t_pp * xt * dph * dph;
        let jac_p = -2.0 * g_p_tp * (dth * dxp + dph * dxt) - 2.0 * dg_p_tp * xt * dth * dph;
        [dth, dph, acc_t, acc_p, dxt, dxp, jac_t, jac_p]
    };
    let mut y = [y0[0], y0[1], y0[2], y0[3], 0.0, 0.0, w[0], w[1]];
    let mut out = vec![[y[0], y[1], y[4], y[5]]];
    for _ in 0..n {
        y = rk4(y, h, rhs);
        out.push([y[0], y[1], y[4], y[5]]);
    }
    out
}
