//! Independent oracles shared by the integration and acceptance tests.

#![allow(dead_code)]

use num_complex::Complex;
use precoding_core::neuralnet::{ForwardCache, OutputActivation, NORM_FLOOR};
use precoding_core::numerics::{complex_gaussian, SimRng};
use precoding_core::{CMat, MlpParams, C64};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Denominator floor of the relative error.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates whose perturbation flipped a ReLU unit.
    pub skipped: usize,
}

impl GradCheck {
    fn record(&mut self, analytic: f64, numeric: f64) {
        self.max_rel_err = self.max_rel_err.max(rel_err(analytic, numeric));
        self.checked += 1;
    }

    pub fn merge(&mut self, other: GradCheck) {
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        self.checked += other.checked;
        self.skipped += other.skipped;
    }
}

/// Double-double number `hi + lo`, about 32 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let r = Dd::renorm(s.hi, s.lo + t.hi);
        Dd::renorm(r.hi, r.lo + t.lo)
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Dd::renorm(p, e + self.lo * b)
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        Dd::renorm(q1, q2).add(Dd::new(q3))
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = self.hi.sqrt();
        let r = self.sub(Dd::new(x).mul_f64(x));
        Dd::renorm(x, r.hi / (2.0 * x))
    }

    pub fn positive(self) -> bool {
        self.hi > 0.0 || (self.hi == 0.0 && self.lo > 0.0)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Extended-precision re-evaluation of a network under single-coordinate
/// perturbations. Layers downstream of the perturbed unit are recomputed
/// from cached base pre-activations.
struct Oracle<'a> {
    net: &'a MlpParams,
    c: Vec<Dd>,
    /// `pre[k]` is the pre-activation output of layer `k - 1`.
    pre: Vec<Vec<Dd>>,
    act: Vec<Vec<Dd>>,
}

enum Coord {
    Weight { layer: usize, index: usize },
    Bias { layer: usize, index: usize },
    Input(usize),
}

impl<'a> Oracle<'a> {
    fn new(net: &'a MlpParams, x: &[f64], c: &[f64]) -> Self {
        let mut pre = vec![Vec::new()];
        let mut act = vec![x.iter().map(|&v| Dd::new(v)).collect::<Vec<_>>()];
        for l in 0..net.n_layers() {
            let z = Self::affine(net, l, &act[l]);
            if l + 1 < net.n_layers() {
                act.push(
                    z.iter()
                        .map(|&v| if v.positive() { v } else { Dd::ZERO })
                        .collect(),
                );
            }
            pre.push(z);
        }
        Oracle {
            net,
            c: c.iter().map(|&v| Dd::new(v)).collect(),
            pre,
            act,
        }
    }

    fn affine(net: &MlpParams, l: usize, input: &[Dd]) -> Vec<Dd> {
        net.weights(l)
            .chunks_exact(input.len())
            .zip(net.biases(l))
            .map(|(row, &b)| {
                row.iter()
                    .zip(input)
                    .fold(Dd::new(b), |s, (&w, a)| s.add(a.mul_f64(w)))
            })
            .collect()
    }

    fn pattern_f64(&self, cache: &ForwardCache<f64>) -> bool {
        let acts = cache.activations();
        (1..self.net.n_layers()).all(|k| {
            acts[k]
                .iter()
                .zip(&self.pre[k])
                .all(|(&a, z)| (a > 0.0) == z.positive())
        })
    }

    fn loss(&self, out: &[Dd]) -> Dd {
        let y: Vec<Dd> = match self.net.output_activation() {
            OutputActivation::Linear => out.to_vec(),
            OutputActivation::UnitNormalize => {
                let norm = out.iter().fold(Dd::ZERO, |s, v| s.add(v.mul(*v))).sqrt();
                let n = if norm.to_f64() > NORM_FLOOR {
                    norm
                } else {
                    Dd::new(NORM_FLOOR)
                };
                out.iter().map(|v| v.div(n)).collect()
            }
        };
        y.iter()
            .zip(&self.c)
            .fold(Dd::ZERO, |s, (a, b)| s.add(a.mul(*b)))
    }

    /// Continues the pass from a perturbed `pre[k]`; `None` on a ReLU flip.
    fn run_from(&self, k: usize, z: Vec<Dd>) -> Option<Dd> {
        let n = self.net.n_layers();
        if k == n {
            return Some(self.loss(&z));
        }
        let mut a = Vec::with_capacity(z.len());
        for (v, base) in z.iter().zip(&self.pre[k]) {
            if v.positive() != base.positive() {
                return None;
            }
            a.push(if v.positive() { *v } else { Dd::ZERO });
        }
        self.run_from(k + 1, Self::affine(self.net, k, &a))
    }

    /// `pre[k]` with unit `unit` moved to `value`, propagated one layer
    /// by updating only the affected column.
    fn run_from_unit(&self, k: usize, unit: usize, value: Dd) -> Option<Dd> {
        let n = self.net.n_layers();
        let mut z = self.pre[k].clone();
        if k == n {
            z[unit] = value;
            return Some(self.loss(&z));
        }
        let base = self.pre[k][unit];
        if value.positive() != base.positive() {
            return None;
        }
        if !base.positive() {
            return Some(self.loss(&self.pre[n]));
        }
        let delta = value.sub(base);
        let w = self.net.weights(k);
        let n_in = self.act[k].len();
        let next: Vec<Dd> = self.pre[k + 1]
            .iter()
            .enumerate()
            .map(|(r, v)| v.add(delta.mul_f64(w[r * n_in + unit])))
            .collect();
        self.run_from(k + 1, next)
    }

    fn eval(&self, coord: &Coord, h: f64) -> Option<Dd> {
        match *coord {
            Coord::Weight { layer, index } => {
                let n_in = self.act[layer].len();
                let (unit, col) = (index / n_in, index % n_in);
                let moved = self.pre[layer + 1][unit].add(self.act[layer][col].mul_f64(h));
                self.run_from_unit(layer + 1, unit, moved)
            }
            Coord::Bias { layer, index } => {
                self.run_from_unit(layer + 1, index, self.pre[layer + 1][index].add(Dd::new(h)))
            }
            Coord::Input(j) => {
                let w = self.net.weights(0);
                let n_in = self.act[0].len();
                let z = self.pre[1]
                    .iter()
                    .enumerate()
                    .map(|(r, v)| v.add(Dd::new(w[r * n_in + j]).mul_f64(h)))
                    .collect();
                self.run_from(1, z)
            }
        }
    }

    /// Central difference, or `None` if either probe flips a ReLU unit.
    fn central_difference(&self, coord: &Coord) -> Option<f64> {
        let plus = self.eval(coord, FD_STEP)?;
        let minus = self.eval(coord, -FD_STEP)?;
        Some(plus.sub(minus).to_f64() / (2.0 * FD_STEP))
    }
}

/// Compares backprop against central differences of `L = c . net(x)`,
/// evaluated in double-double arithmetic so that cancellation in
/// `L(+h) - L(-h)` does not swamp small gradients.
///
/// With `per_block = None` every weight, bias and input coordinate is
/// checked; otherwise that many random coordinates per block.
pub fn gradient_check(
    net: &MlpParams,
    x: &[f64],
    c: &[f64],
    per_block: Option<usize>,
    rng: &mut SimRng,
) -> GradCheck {
    let cache = net.forward(x).unwrap();
    let grads = net.backward(&cache, c).unwrap();
    let oracle = Oracle::new(net, x, c);
    let mut out = GradCheck::default();

    let pick = |len: usize, rng: &mut SimRng| -> Vec<usize> {
        match per_block {
            None => (0..len).collect(),
            Some(k) => (0..k.min(len)).map(|_| rng.index(len)).collect(),
        }
    };

    let mut coords = Vec::new();
    for l in 0..net.n_layers() {
        for index in pick(net.weights(l).len(), rng) {
            coords.push((Coord::Weight { layer: l, index }, grads.weights[l][index]));
        }
        for index in pick(net.biases(l).len(), rng) {
            coords.push((Coord::Bias { layer: l, index }, grads.biases[l][index]));
        }
    }
    for j in pick(x.len(), rng) {
        coords.push((Coord::Input(j), grads.input[j]));
    }

    if !oracle.pattern_f64(&cache) {
        out.skipped = coords.len();
        return out;
    }
    for (coord, analytic) in &coords {
        match oracle.central_difference(coord) {
            Some(numeric) => out.record(*analytic, numeric),
            None => out.skipped += 1,
        }
    }
    out
}

pub fn random_vec(n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

pub fn random_net(dims: &[usize], act: OutputActivation, rng: &mut SimRng) -> MlpParams {
    let mut net = MlpParams::init_xavier(dims, act, rng).unwrap();
    // nonzero biases exercise the bias gradients
    for l in 0..net.n_layers() {
        for b in net.biases_mut(l) {
            *b = 0.1 * rng.normal::<f64>();
        }
    }
    net
}

/// `(G + G^dagger) / 2` with Gaussian `G`.
pub fn random_hermitian(n: usize, rng: &mut SimRng) -> CMat {
    let g: CMat = complex_gaussian(n, n, 1.0, rng).unwrap();
    g.add(&g.adjoint()).unwrap().scale(0.5)
}

/// Coefficients `c[0..=n]` of `det(lambda I - A) = sum c[k] lambda^k` by the
/// Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(a: &CMat) -> Vec<C64> {
    let n = a.rows();
    let zero = C64::new(0.0, 0.0);
    let mut c = vec![zero; n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut m = vec![vec![zero; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![zero; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = zero;
                for t in 0..n {
                    s += a[(i, t)] * m[t][j];
                }
                next[i][j] = s;
            }
            next[i][i] += c[n - k + 1];
        }
        let mut tr = zero;
        for i in 0..n {
            for t in 0..n {
                tr += a[(i, t)] * next[t][i];
            }
        }
        c[n - k] = -tr / k as f64;
        m = next;
    }
    c
}

fn horner(c: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ck;
    }
    (p, dp)
}

/// Roots by Durand-Kerner iteration followed by Newton polishing, sorted
/// descending by real part.
pub fn polynomial_roots(c: &[C64]) -> Vec<C64> {
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<C64> = c.iter().map(|&x| x / lead).collect();
    let radius = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, _) = horner(&monic, roots[i]);
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = p / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..5 {
            let (p, dp) = horner(&monic, *r);
            if dp.norm() == 0.0 {
                break;
            }
            *r -= p / dp;
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re));
    roots
}

/// Proptest settings without on-disk regression files.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}
