//! Grassmannian codebooks: the discrete action set of the DQN agent.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{Precoder, PrecoderOrigin};
use crate::numerics::{check_unit, chordal_distance, random_unit_vector, SimRng};
use crate::{CMat, CVec, C64};

pub const DEFAULT_ITERATIONS: usize = 20_000;
const STEP_START: f64 = 0.1;
const STEP_END: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Generated { seed: u64 },
    LoadedFromFile(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Codebook {
    n_tx: usize,
    words: Vec<Precoder>,
    min_chordal_distance: f64,
    provenance: Provenance,
}

/// Equality of the word lists; provenance is ignored.
impl PartialEq for Codebook {
    fn eq(&self, other: &Self) -> bool {
        self.n_tx == other.n_tx && self.words == other.words
    }
}

impl Codebook {
    /// Builds a codebook from unit vectors, computing the minimum distance.
    pub fn from_words(n_tx: usize, words: Vec<CVec>, provenance: Provenance) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidArgument(
                "codebook needs at least one word".into(),
            ));
        }
        let words = words
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                if w.len() != n_tx {
                    return Err(Error::Dimension(format!(
                        "word {i} has length {}, expected {n_tx}",
                        w.len()
                    )));
                }
                check_unit(&w)?;
                Precoder::new(w, PrecoderOrigin::CodebookIndex(i))
            })
            .collect::<Result<Vec<_>>>()?;
        let vectors: Vec<CVec> = words.iter().map(|p| p.w().clone()).collect();
        let min_chordal_distance = min_distance(&vectors);
        Ok(Self {
            n_tx,
            words,
            min_chordal_distance,
            provenance,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[Precoder] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &Precoder {
        &self.words[index]
    }

    pub fn min_chordal_distance(&self) -> f64 {
        self.min_chordal_distance
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Smallest pairwise chordal distance; 1 for a single word.
pub fn min_distance(words: &[CVec]) -> f64 {
    closest_pair(words).map_or(1.0, |(_, _, d)| d)
}

fn closest_pair(words: &[CVec]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            let overlap = words[i].dot(&words[j]).norm_sqr().min(1.0);
            let d = (1.0 - overlap).max(0.0).sqrt();
            if best.is_none_or(|(_, _, b)| d < b) {
                best = Some((i, j, d));
            }
        }
    }
    best
}

/// Max-min chordal-distance line packing by closest-pair repulsion.
///
/// Starts from `n` random unit vectors; each iteration pushes the two members
/// of the closest pair apart along the component of each that is orthogonal
/// to the other's line, with a step annealed geometrically from 0.1 to 1e-3.
/// The best codebook seen is returned.
pub fn generate_grassmannian(
    n_tx: usize,
    n: usize,
    seed: u64,
    iterations: usize,
) -> Result<Codebook> {
    generate_with_trace(n_tx, n, seed, iterations).map(|(cb, _)| cb)
}

/// As [`generate_grassmannian`], also returning the best-so-far minimum
/// distance after every iteration.
pub fn generate_with_trace(
    n_tx: usize,
    n: usize,
    seed: u64,
    iterations: usize,
) -> Result<(Codebook, Vec<f64>)> {
    if n_tx < 2 || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "codebook needs n_tx >= 2 and N >= 2, got n_tx={n_tx}, N={n}"
        )));
    }
    let mut rng = SimRng::new(seed, 0);
    let mut words: Vec<CVec> = (0..n).map(|_| random_unit_vector(n_tx, &mut rng)).collect();
    let mut best = words.clone();
    let mut best_d = min_distance(&words);
    let mut trace = Vec::with_capacity(iterations);
    let decay = if iterations > 1 {
        (STEP_END / STEP_START).powf(1.0 / (iterations - 1) as f64)
    } else {
        1.0
    };
    let mut step = STEP_START;
    for _ in 0..iterations {
        let (i, j, _) = closest_pair(&words).expect("n >= 2");
        let wi = push_away(&words[i], &words[j], step, &mut rng);
        let wj = push_away(&words[j], &words[i], step, &mut rng);
        words[i] = wi;
        words[j] = wj;
        let d = min_distance(&words);
        if d > best_d {
            best_d = d;
            best = words.clone();
        }
        trace.push(best_d);
        step *= decay;
    }
    let cb = Codebook::from_words(n_tx, best, Provenance::Generated { seed })?;
    Ok((cb, trace))
}

/// Moves `u` away from the line of `v` by `step` along `u`'s orthogonal
/// complement direction, then renormalizes.
fn push_away(u: &CVec, v: &CVec, step: f64, rng: &mut SimRng) -> CVec {
    let proj = v.scale(v.dot(u));
    let mut perp = u.sub(&proj);
    if perp.norm() < 1e-12 {
        // u and v span the same line: any direction orthogonal to v will do
        let r = random_unit_vector::<f64>(u.len(), rng);
        perp = r.sub(&v.scale(v.dot(&r)));
    }
    let dir = perp.normalized().expect("nonzero complement");
    let moved = CVec::new(
        u.as_slice()
            .iter()
            .zip(dir.as_slice())
            .map(|(&a, &b)| a + b * step)
            .collect(),
    );
    moved.normalized().expect("nonzero after push")
}

/// Relative gap below which two codeword gains count as tied.
pub const TIE_RTOL: f64 = 1e-12;

/// Index and word maximizing `|w^dagger A w|`; ties (within [`TIE_RTOL`])
/// go to the lowest index.
pub fn exhaustive_search<'a>(a: &CMat, cb: &'a Codebook) -> Result<(usize, &'a Precoder)> {
    if !a.is_square() || a.rows() != cb.n_tx() {
        return Err(Error::Dimension(format!(
            "search matrix is {}x{}, codebook n_tx is {}",
            a.rows(),
            a.cols(),
            cb.n_tx()
        )));
    }
    let mut best = 0;
    let mut best_gain = a.quadratic_form(cb.word(0).w())?.abs();
    for (i, w) in cb.words().iter().enumerate().skip(1) {
        let gain = a.quadratic_form(w.w())?.abs();
        if gain > best_gain + TIE_RTOL * best_gain.abs() {
            best_gain = gain;
            best = i;
        }
    }
    Ok((best, cb.word(best)))
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    n_tx: usize,
    #[serde(rename = "N")]
    n: usize,
    min_chordal_distance: f64,
    words: Vec<Vec<[f64; 2]>>,
}

pub fn save(cb: &Codebook, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = CodebookFile {
        n_tx: cb.n_tx,
        n: cb.len(),
        min_chordal_distance: cb.min_chordal_distance,
        words: cb
            .words
            .iter()
            .map(|w| w.w().as_slice().iter().map(|z| [z.re, z.im]).collect())
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::format(path, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: CodebookFile = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
    if file.words.len() != file.n {
        return Err(Error::format(
            path,
            format!(
                "header says N={} but {} words follow",
                file.n,
                file.words.len()
            ),
        ));
    }
    let words: Vec<CVec> = file
        .words
        .iter()
        .map(|w| CVec::new(w.iter().map(|&[re, im]| C64::new(re, im)).collect()))
        .collect();
    let cb = Codebook::from_words(
        file.n_tx,
        words,
        Provenance::LoadedFromFile(path.to_path_buf()),
    )
    .map_err(|e| Error::format(path, e))?;
    if (cb.min_chordal_distance - file.min_chordal_distance).abs() > 1e-9 {
        return Err(Error::format(
            path,
            format!(
                "stated min_chordal_distance {} but words give {}",
                file.min_chordal_distance, cb.min_chordal_distance
            ),
        ));
    }
    Ok(cb)
}

/// Chordal distance between two codewords.
pub fn word_distance(cb: &Codebook, i: usize, j: usize) -> f64 {
    chordal_distance(cb.word(i).w(), cb.word(j).w()).expect("codewords are unit norm")
}
