//! Labeled Gaussian datasets, planted concepts with controlled label noise,
//! and dataset files.
//!
//! Text format: first line `d n`, then `n` lines of `d` space-separated
//! decimal floats followed by the label `1` or `-1` (a leading `+` is
//! accepted). Binary format: magic `GPHS`, `u32` d, `u64` n, the `n x d`
//! points row-major as little-endian `f64`, then `n` label bytes
//! (`0x01` for +1, `0xFF` for -1).

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cover::{BooleanHypothesis, Halfspace, Hypothesis};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, CHUNK};

const MAGIC: &[u8; 4] = b"GPHS";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<i8>,
}

impl LabeledDataset {
    pub fn new(dim: usize, points: Vec<f64>, labels: Vec<i8>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if points.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch { expected: dim * labels.len(), found: points.len() });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset points"));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not +1/-1")));
        }
        Ok(Self { dim, points, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], i8)> + '_ {
        self.points.chunks_exact(self.dim).zip(self.labels.iter().copied())
    }

    /// Rows `start..end` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            dim: self.dim,
            points: self.points[start * self.dim..end * self.dim].to_vec(),
            labels: self.labels[start..end].to_vec(),
        }
    }

    /// Fraction of points where `h` disagrees with the label.
    pub fn error_of(&self, mut h: impl FnMut(&[f64]) -> i8) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let wrong = self.iter().filter(|(x, y)| h(x) != *y).count();
        wrong as f64 / self.len() as f64
    }
}

/// Label noise applied on top of a planted concept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    /// Each label flipped independently with probability `p`.
    Rcn(f64),
    /// Labels flipped deterministically inside the slab
    /// `{x : |<w, x> + t| <= a}` around the first halfspace of the concept,
    /// with `a` chosen so the slab has Gaussian mass `p`.
    Slab(f64),
}

impl Noise {
    /// Upper bound on the error of the best in-class classifier.
    pub fn opt_upper_bound(&self) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Rcn(p) | Noise::Slab(p) => p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedModel {
    pub concept: Hypothesis,
    pub noise: Noise,
    pub seed: u64,
}

impl PlantedModel {
    pub fn new(concept: Hypothesis, noise: Noise, seed: u64) -> Self {
        Self { concept, noise, seed }
    }
}

/// Shapes of planted concepts built from `K` random orthonormal normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptKind {
    Halfspace,
    /// Product of the `K` halfspace signs (XOR for `K = 2`).
    Parity(usize),
    Intersection(usize),
}

/// `k` orthonormal vectors in `R^d` from Gaussian draws of stream `seed`.
pub fn random_orthonormal(d: usize, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("cannot draw {k} orthonormal vectors in dimension {d}")));
    }
    let mut rng = stream_rng(seed, 0);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for u in &out {
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            out.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    Ok(out)
}

/// Planted concept whose halfspaces all use threshold `t`.
pub fn planted_concept(kind: ConceptKind, d: usize, t: f64, seed: u64) -> Result<Hypothesis> {
    let k = match kind {
        ConceptKind::Halfspace => 1,
        ConceptKind::Parity(k) | ConceptKind::Intersection(k) => k,
    };
    let hs = random_orthonormal(d, k, seed)?.into_iter().map(|w| Halfspace::new(w, t)).collect::<Result<Vec<_>>>()?;
    Ok(match kind {
        ConceptKind::Halfspace => Hypothesis::Halfspace(hs.into_iter().next().expect("k = 1")),
        ConceptKind::Parity(k) => {
            // cell bit j is set iff halfspace j is +1
            let table = (0..1usize << k).map(|c| if (k - c.count_ones() as usize) % 2 == 0 { 1 } else { -1 }).collect();
            Hypothesis::Boolean(BooleanHypothesis::new(hs, table)?)
        }
        ConceptKind::Intersection(_) => Hypothesis::Boolean(BooleanHypothesis::intersection(hs)?),
    })
}

/// Half-width `a` with `Pr[|Z + t| <= a] = p` for `Z ~ N(0, 1)`.
fn slab_half_width(p: f64, t: f64) -> f64 {
    let n = Normal::standard();
    let mass = |a: f64| n.cdf(a - t) - n.cdf(-a - t);
    let (mut lo, mut hi) = (0.0, 1.0);
    while mass(hi) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draws `n` points `x ~ N(0, I_d)` labeled by the planted concept, then
/// applies the noise model. Rows are generated in chunks of [`CHUNK`], chunk
/// `c` using ChaCha stream `c` of `model.seed`; each row consumes `d`
/// normals followed by one uniform.
pub fn sample_dataset(model: &PlantedModel, n: usize, d: usize) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    if model.concept.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: model.concept.dim() });
    }
    let slab = match model.noise {
        Noise::Rcn(p) | Noise::Slab(p) if !(0.0..0.5).contains(&p) => {
            return Err(Error::InvalidArgument(format!("noise rate {p} outside [0, 1/2)")));
        }
        Noise::Slab(p) => {
            let (w, t) = model.concept.slab_direction();
            Some((w, t, slab_half_width(p, t)))
        }
        _ => None,
    };
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<(Vec<f64>, Vec<i8>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let rows = CHUNK.min(n - c * CHUNK);
            let mut rng = stream_rng(model.seed, c as u64);
            let mut pts = Vec::with_capacity(rows * d);
            let mut labels = Vec::with_capacity(rows);
            let mut x = vec![0.0; d];
            for _ in 0..rows {
                for v in x.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let u: f64 = rng.random();
                let mut y = model.concept.eval(&x);
                match (model.noise, &slab) {
                    (Noise::Rcn(p), _) if u < p => y = -y,
                    (Noise::Slab(_), Some((w, t, a))) => {
                        let s: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + t;
                        if s.abs() <= *a {
                            y = -y;
                        }
                    }
                    _ => {}
                }
                pts.extend_from_slice(&x);
                labels.push(y);
            }
            (pts, labels)
        })
        .collect();
    let mut points = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (p, l) in parts {
        points.extend(p);
        labels.extend(l);
    }
    LabeledDataset::new(d, points, labels)
}

pub fn to_text(ds: &LabeledDataset) -> String {
    let mut s = String::with_capacity(ds.len() * (ds.dim() + 1) * 20);
    s.push_str(&format!("{} {}\n", ds.dim(), ds.len()));
    for (x, y) in ds.iter() {
        for v in x {
            s.push_str(&format!("{v} "));
        }
        s.push_str(if y > 0 { "1\n" } else { "-1\n" });
    }
    s
}

pub fn from_text(text: &str) -> Result<LabeledDataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse { line: 1, message: e.to_string() });
    if head.len() != 2 {
        return Err(Error::Parse { line: 1, message: "header must be `d n`".into() });
    }
    let (d, n) = (parse_usize(head[0])?, parse_usize(head[1])?);
    if d == 0 {
        return Err(Error::Parse { line: 1, message: "d must be at least 1".into() });
    }
    let mut points = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != d + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} fields, found {}", d + 1, fields.len()),
            });
        }
        for f in &fields[..d] {
            let v: f64 = f.parse().map_err(|_| Error::Parse { line: lineno, message: format!("bad float `{f}`") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: lineno, message: "non-finite coordinate".into() });
            }
            points.push(v);
        }
        let y = match fields[d] {
            "1" | "+1" => 1,
            "-1" => -1,
            other => return Err(Error::Parse { line: lineno, message: format!("label `{other}` is not +1/-1") }),
        };
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(Error::Parse { line: 2, message: "no data rows".into() });
    }
    if labels.len() != n {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("header says {n} rows, found {}", labels.len()),
        });
    }
    LabeledDataset::new(d, points, labels)
}

pub fn to_binary(ds: &LabeledDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + ds.points().len() * 8 + ds.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(ds.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(ds.len() as u64).to_le_bytes());
    for v in ds.points() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(ds.labels().iter().map(|&y| if y > 0 { 0x01u8 } else { 0xFF }));
    out
}

pub fn from_binary(bytes: &[u8]) -> Result<LabeledDataset> {
    let bad = |m: &str| Error::Parse { line: 0, message: m.to_string() };
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("missing GPHS header"));
    }
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = n.checked_mul(d).and_then(|v| v.checked_mul(8)).ok_or_else(|| bad("size overflow"))?;
    if bytes.len() != 16 + body + n {
        return Err(bad("truncated or oversized binary dataset"));
    }
    let points = bytes[16..16 + body].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let labels = bytes[16 + body..]
        .iter()
        .map(|&b| match b {
            0x01 => Ok(1),
            0xFF => Ok(-1),
            other => Err(bad(&format!("label byte {other:#04x}"))),
        })
        .collect::<Result<Vec<i8>>>()?;
    if n == 0 {
        return Err(bad("no data rows"));
    }
    LabeledDataset::new(d, points, labels)
}

/// Writes the text format, or the binary format when the extension is `.bin`.
pub fn write_dataset(path: &Path, ds: &LabeledDataset) -> Result<()> {
    let mut f = fs::File::create(path)?;
    if path.extension().is_some_and(|e| e == "bin") {
        f.write_all(&to_binary(ds))?;
    } else {
        f.write_all(to_text(ds).as_bytes())?;
    }
    Ok(())
}

/// Reads either format, detected by the `GPHS` magic.
pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        return from_binary(&bytes);
    }
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
    from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_concepts() {
        let vs = random_orthonormal(5, 3, 7).unwrap();
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-12);
            }
        }
        let xor = planted_concept(ConceptKind::Parity(2), 4, 0.0, 1).unwrap();
        let hs = xor.halfspaces().to_vec();
        let x = [0.3, -1.2, 0.5, 2.0];
        assert_eq!(xor.eval(&x), hs[0].eval(&x) * hs[1].eval(&x));
        let cap = planted_concept(ConceptKind::Intersection(2), 4, 0.5, 1).unwrap();
        let inside = cap.halfspaces().iter().all(|h| h.eval(&x) > 0);
        assert_eq!(cap.eval(&x), if inside { 1 } else { -1 });
        assert!(random_orthonormal(2, 3, 0).is_err());
    }
    use crate::cover::Halfspace;

    fn planted(noise: Noise, seed: u64) -> PlantedModel {
        let h = Halfspace::new(vec![0.6, 0.8, 0.0], 0.2).unwrap();
        PlantedModel::new(Hypothesis::Halfspace(h), noise, seed)
    }

    #[test]
    fn constant_concept_without_noise() {
        let m = PlantedModel::new(Hypothesis::Halfspace(Halfspace::constant(4, 1)), Noise::None, 3);
        let ds = sample_dataset(&m, 500, 4).unwrap();
        assert!(ds.labels().iter().all(|&y| y == 1));
    }

    #[test]
    fn rcn_flip_rate_concentrates() {
        let p = 0.45;
        let n = 40_000;
        let m = planted(Noise::Rcn(p), 11);
        let ds = sample_dataset(&m, n, 3).unwrap();
        let rate = ds.error_of(|x| m.concept.eval(x));
        assert!((rate - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "rate {rate}");
    }

    #[test]
    fn slab_noise_has_requested_mass() {
        let p = 0.1;
        let n = 50_000;
        let m = planted(Noise::Slab(p), 5);
        let ds = sample_dataset(&m, n, 3).unwrap();
        let rate = ds.error_of(|x| m.concept.eval(x));
        assert!((rate - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "rate {rate}");
    }

    #[test]
    fn invalid_noise_rejected() {
        assert!(sample_dataset(&planted(Noise::Rcn(0.5), 1), 10, 3).is_err());
        assert!(sample_dataset(&planted(Noise::Rcn(-0.1), 1), 10, 3).is_err());
        assert!(sample_dataset(&planted(Noise::None, 1), 0, 3).is_err());
        assert!(sample_dataset(&planted(Noise::None, 1), 10, 4).is_err());
    }

    #[test]
    fn seeded_generation_is_byte_identical() {
        let a = sample_dataset(&planted(Noise::Rcn(0.1), 9), 3000, 3).unwrap();
        let b = sample_dataset(&planted(Noise::Rcn(0.1), 9), 3000, 3).unwrap();
        assert_eq!(to_binary(&a), to_binary(&b));
        let c = sample_dataset(&planted(Noise::Rcn(0.1), 10), 3000, 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn text_parse_errors() {
        assert!(matches!(from_text("2 3\n"), Err(Error::Parse { .. })));
        match from_text("2 2\n0.5 1.0 1\n0.1 0.2 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(from_text("2 1\n0.5 1\n").is_err());
        assert!(from_text("2 2\n0.5 1 1\n").is_err());
    }

    #[test]
    fn three_point_round_trip() {
        let ds = LabeledDataset::new(2, vec![0.1, -2.5, 1e-310, 3.0, -0.0, 1.0 / 7.0], vec![1, -1, 1]).unwrap();
        assert_eq!(from_text(&to_text(&ds)).unwrap(), ds);
        let bin = from_binary(&to_binary(&ds)).unwrap();
        for (a, b) in ds.points().iter().zip(bin.points()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(bin.labels(), ds.labels());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample_dataset(&planted(Noise::Rcn(0.2), 1), 50, 3).unwrap();
        for name in ["a.txt", "a.bin"] {
            let path = dir.path().join(name);
            write_dataset(&path, &ds).unwrap();
            let back = read_dataset(&path).unwrap();
            for (a, b) in ds.points().iter().zip(back.points()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            assert_eq!(back.labels(), ds.labels());
        }
    }
}
